"""Tests for ground metrics, the transport simplex, bounds and novelty distances."""

import math

import numpy as np
import pytest
from scipy.optimize import linprog

from builders import random_periodic_set
from src.config import InvariantConfig
from src.errors import ColumnMismatch, ConfigurationError, EmptyCorpus, LengthMismatch
from src.geometry.lattice import packing_radius
from src.geometry.periodic_set import perturb
from src.invariants.asymptotic import fit_coefficient, growth_terms, pda_concat, pda_h, rho_coefficient
from src.invariants.distribution import WeightedRowDistribution, from_rows
from src.invariants.higher_order import pdd_h
from src.invariants.pdd import amd
from src.metrics.bounds import check_bounds, check_distribution_bounds
from src.metrics.compare import (
    corpus_distributions,
    emd_h,
    emd_max,
    lnd,
    nearest_neighbors,
    order_distributions,
    perturbation_lower_bound,
)
from src.metrics.emd import emd, transport_simplex
from src.metrics.ground import LINF, RMS, GroundMetric, ground_distance


def random_distribution(rng: np.random.Generator, rows: int, k: int) -> WeightedRowDistribution:
    weights = rng.dirichlet(np.ones(rows))
    weights /= weights.sum()
    values = np.sort(rng.uniform(0.5, 5.0, size=(rows, k)), axis=1)
    return WeightedRowDistribution(weights=weights, values=values, n_points=rows)


def linprog_emd(a: WeightedRowDistribution, b: WeightedRowDistribution, g: GroundMetric) -> float:
    """Reference transportation cost from a generic LP solver."""
    cost = g.cost_matrix(a.values, b.values)
    m, n = cost.shape
    rows = np.kron(np.eye(m), np.ones((1, n)))
    cols = np.kron(np.ones((1, m)), np.eye(n))
    result = linprog(
        cost.reshape(-1),
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([a.weights, b.weights]),
        bounds=(0, None),
        method="highs",
    )
    assert result.success
    return float(result.fun)


class TestGroundMetric:
    """Test parsing and evaluation of ground metrics."""

    @pytest.mark.parametrize("text,kind,q", [
        ("linf", "lq", math.inf),
        ("Chebyshev", "lq", math.inf),
        ("l2", "lq", 2.0),
        ("L1", "lq", 1.0),
        ("q:3.5", "lq", 3.5),
        ("rms", "rms", 2.0),
    ])
    def test_parse(self, text, kind, q):
        g = GroundMetric.parse(text)
        assert g.kind == kind
        assert g.q == q

    @pytest.mark.parametrize("text", ["manhattan", "q:0.5", "l", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(ConfigurationError):
            GroundMetric.parse(text)

    def test_names(self):
        assert LINF.name == "linf"
        assert RMS.name == "rms"
        assert GroundMetric.parse("l2").name == "l2"

    def test_values(self):
        """L_inf, L_1, L_2 and RMS of the same difference vector."""
        u, v = [0.0, 0.0], [3.0, -4.0]
        assert ground_distance(u, v, LINF) == pytest.approx(4.0)
        assert ground_distance(u, v, GroundMetric.parse("l1")) == pytest.approx(7.0)
        assert ground_distance(u, v, GroundMetric.parse("l2")) == pytest.approx(5.0)
        assert ground_distance(u, v, RMS) == pytest.approx(5.0 / math.sqrt(2))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            ground_distance([1.0, 2.0], [1.0], LINF)


class TestTransportSimplex:
    """Test the exact EMD solver against a generic LP solver."""

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("g", [LINF, RMS, GroundMetric.parse("l1")], ids=["linf", "rms", "l1"])
    def test_matches_linear_program(self, seed, g):
        rng = np.random.default_rng(seed)
        a = random_distribution(rng, int(rng.integers(1, 8)), 4)
        b = random_distribution(rng, int(rng.integers(1, 8)), 4)
        value, _ = emd(a, b, g)
        assert value == pytest.approx(linprog_emd(a, b, g), rel=1e-7, abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_plan_is_feasible_and_certified(self, seed):
        """Flows match the marginals and the potentials satisfy complementary slackness."""
        rng = np.random.default_rng(100 + seed)
        a = random_distribution(rng, 6, 3)
        b = random_distribution(rng, 5, 3)
        value, plan = emd(a, b, LINF)
        cost = LINF.cost_matrix(a.values, b.values)

        assert plan.is_feasible(a.weights, b.weights)
        assert plan.total_flow == pytest.approx(1.0)
        reduced = cost - plan.row_potentials[:, None] - plan.col_potentials[None, :]
        assert reduced.min() >= -1e-9
        dual = plan.row_potentials @ a.weights + plan.col_potentials @ b.weights
        assert dual == pytest.approx(value, abs=1e-9)

    def test_identical_distributions(self):
        rng = np.random.default_rng(7)
        a = random_distribution(rng, 5, 3)
        value, plan = emd(a, a, LINF)
        assert value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(np.diag(plan.flows), a.weights)

    def test_single_rows_give_ground_distance(self):
        a = from_rows(np.array([[1.0, 2.0]]))
        b = from_rows(np.array([[1.5, 4.0]]))
        assert emd(a, b, LINF)[0] == pytest.approx(2.0)

    def test_degenerate_equal_weights(self):
        """Equal weights make the northwest corner degenerate; the optimum is a matching."""
        a = from_rows(np.array([[0.0], [1.0], [2.0], [3.0]]))
        b = from_rows(np.array([[3.0], [2.0], [1.0], [0.0]]))
        assert emd(a, b, LINF)[0] == pytest.approx(0.0, abs=1e-12)

    def test_rescales_demand(self):
        """Demand weights are rescaled to the total supply."""
        plan = transport_simplex(np.array([0.5, 0.5]), np.array([2.0]), np.array([[1.0], [3.0]]))
        assert plan.cost == pytest.approx(2.0)

    def test_column_mismatch(self):
        with pytest.raises(ColumnMismatch):
            emd(from_rows(np.ones((2, 3))), from_rows(np.ones((2, 4))), LINF)


class TestLipschitz:
    """Perturbing every point by at most eps moves the invariants by at most 2 eps."""

    @pytest.mark.parametrize("h", [1, 2, 3])
    @pytest.mark.parametrize("seed", range(3))
    def test_pdd_h(self, h, seed):
        ps = random_periodic_set(seed, m=3)
        eps = 0.02
        moved = perturb(ps, eps, seed=seed)
        assert emd(pdd_h(ps, h, 12), pdd_h(moved, h, 12), LINF)[0] <= 2 * eps + 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_amd(self, seed):
        ps = random_periodic_set(20 + seed, m=3)
        eps = 0.01
        moved = perturb(ps, eps, seed=seed)
        assert np.max(np.abs(amd(ps, 20) - amd(moved, 20))) <= 2 * eps + 1e-9

    def test_pda_order_one(self):
        """Perturbation keeps the lattice, so the order 1 curve does not move."""
        ps = random_periodic_set(31, m=4)
        eps = 0.01
        moved = perturb(ps, eps, seed=5)
        assert emd(pda_h(ps, 1, 15), pda_h(moved, 1, 15), LINF)[0] <= 2 * eps + 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_three_dimensional_order_two(self, seed):
        """RMS ground EMD within 2 eps, the fitted coefficient within 2 rho eps, PDA^{(2)} within 4 eps."""
        ps = random_periodic_set(50 + seed, dim=3, m=3)
        eps = min(0.01, 0.5 * packing_radius(ps))
        moved = perturb(ps, eps, seed=seed)
        k = 12
        base, moved_base = pdd_h(ps, 2, k), pdd_h(moved, 2, k)
        assert emd(base, moved_base, RMS)[0] <= 2 * eps + 1e-9

        shift = fit_coefficient(ps, 2, k, base=base) - fit_coefficient(moved, 2, k, base=moved_base)
        assert abs(shift) <= 2 * rho_coefficient(2, k, 3) * eps + 1e-9
        assert emd(pda_concat(ps, 2, k), pda_concat(moved, 2, k), LINF)[0] <= 4 * eps + 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_rho_coefficient_bounds_curve_shift(self, seed):
        """Moving each column mean by at most 2 eps moves c(S; 2, k) by at most 2 rho eps."""
        rng = np.random.default_rng(seed)
        k, n, eps = 30, 2, 0.01
        x = growth_terms(2, k, n)
        means = np.sort(rng.uniform(1.0, 5.0, size=k))
        moved = means + rng.uniform(-2 * eps, 2 * eps, size=k)
        shift = (moved - means) @ x / (x @ x)
        assert abs(shift) <= 2 * rho_coefficient(2, k, n) * eps + 1e-12
        worst = np.full(k, 2 * eps) @ x / (x @ x)
        assert worst == pytest.approx(2 * rho_coefficient(2, k, n) * eps)


class TestBounds:
    """Test the inequalities behind the cheap dedup filters."""

    @pytest.mark.parametrize("g", [LINF, RMS], ids=["linf", "rms"])
    @pytest.mark.parametrize("invariant", ["pdd", "pda"])
    def test_random_pairs_satisfy_bounds(self, g, invariant):
        a = random_periodic_set(40, m=3)
        b = random_periodic_set(41, m=2)
        report = check_bounds(a, b, 2, 10, g, invariant=invariant)
        assert report.checks
        assert report.violations == []

    def test_distribution_bounds_with_custom_truncation(self):
        rng = np.random.default_rng(3)
        dists_a = [random_distribution(rng, 4, 6) for _ in range(2)]
        dists_b = [random_distribution(rng, 3, 6) for _ in range(2)]
        report = check_distribution_bounds(dists_a, dists_b, LINF, k_prime=2)
        assert len(report.checks) == 6
        assert report.violations == []

    def test_emd_max_dominates_each_order(self):
        a = random_periodic_set(42)
        b = random_periodic_set(43)
        top = emd_max(a, b, 2, 8, LINF, invariant="pdd")
        assert top >= emd_h(a, b, 1, 8, LINF) - 1e-12
        assert top >= emd_h(a, b, 2, 8, LINF) - 1e-12


class TestNovelty:
    """Test nearest neighbors and the Local Novelty Distance."""

    @pytest.fixture
    def config(self):
        return InvariantConfig(h=2, k=10, invariant="pdd")

    @pytest.fixture
    def corpus(self):
        return [random_periodic_set(seed, m=2) for seed in range(50, 55)]

    def test_member_has_zero_novelty(self, corpus, config):
        distance, nearest = lnd(corpus[3], corpus, config)
        assert distance == pytest.approx(0.0, abs=1e-12)
        assert nearest == "random-53"

    def test_neighbors_sorted(self, corpus, config):
        query = random_periodic_set(99, m=2)
        ranked = nearest_neighbors(query, corpus, config, top=3)
        assert len(ranked) == 3
        distances = [d for d, _ in ranked]
        assert distances == sorted(distances)

    def test_precomputed_corpus_agrees(self, corpus, config):
        query = perturb(corpus[1], 0.05, seed=2)
        dists = corpus_distributions(corpus, config, max_concurrency=2)
        assert nearest_neighbors(query, corpus, config, top=5, corpus_dists=dists) == \
            nearest_neighbors(query, corpus, config, top=5)

    def test_perturbed_copy_is_nearest(self, corpus, config):
        """A small perturbation of an entry stays within 2 eps of it."""
        query = perturb(corpus[0], 0.01, seed=9)
        distance, nearest = lnd(query, corpus, config)
        assert nearest == "random-50"
        assert distance <= 0.02 + 1e-9
        assert perturbation_lower_bound(distance) == pytest.approx(distance / 2)

    def test_empty_corpus(self, config):
        with pytest.raises(EmptyCorpus):
            lnd(random_periodic_set(1), [], config)

    def test_order_distributions_layout(self, config):
        dists = order_distributions(random_periodic_set(1), 3, 5, "pda")
        assert [d.order for d in dists] == [1, 2, 3]
        assert all(d.k == 5 for d in dists)
