import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import grid_chernoff
from pointleak.chernoff import (
    chernoff_information,
    chernoff_objective,
    fit_decay_rate,
    golden_section_min,
    min_pairwise_chernoff,
    rate_experiment,
)
from pointleak.errors import InsufficientPoints, LengthMismatch, NonPositiveGap, SingleClass
from pointleak.metrics import MetricSpec
from pointleak.prob_core import Channel, ProbVec, System, kl_divergence

# symmetric pairs: the optimum is at lambda = 1/2
C_BERN = -math.log2(2 * math.sqrt(5 / 36))
C_TERNARY = -math.log2(2 * math.sqrt(0.12) + 0.2)

dist = st.integers(2, 5).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
        st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
    )
)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


def test_closed_forms_frozen():
    assert C_BERN == pytest.approx(0.423998453277475, abs=1e-14)
    assert C_TERNARY == pytest.approx(0.16355822766945521, abs=1e-14)


class TestChernoffInformation:
    def test_identical(self):
        assert chernoff_information([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_bernoulli_pair(self):
        assert chernoff_information([5 / 6, 1 / 6], [1 / 6, 5 / 6]) == pytest.approx(C_BERN, abs=1e-12)

    def test_disjoint(self):
        assert chernoff_information([1.0, 0.0], [0.0, 1.0]) == math.inf

    def test_partial_overlap_endpoint(self):
        # p2 has mass only where p1 does; optimum is at an endpoint
        p1, p2 = [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]
        assert chernoff_information(p1, p2) == pytest.approx(grid_chernoff(p1, p2), abs=1e-8)

    def test_lengths(self):
        with pytest.raises(LengthMismatch):
            chernoff_information([0.5, 0.5], [1.0, 0.0, 0.0])

    @given(dist)
    def test_symmetric(self, pair):
        p, q = _norm(pair[0]), _norm(pair[1])
        assert chernoff_information(p, q) == pytest.approx(chernoff_information(q, p), abs=1e-10)

    @given(dist)
    def test_bounded_by_divergences(self, pair):
        p, q = _norm(pair[0]), _norm(pair[1])
        c = chernoff_information(p, q)
        assert 0.0 <= c <= min(kl_divergence(p, q), kl_divergence(q, p)) + 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_grid(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 6))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        assert chernoff_information(p, q) == pytest.approx(grid_chernoff(p, q), abs=1e-8)

    def test_objective_endpoints(self):
        vals = chernoff_objective([0.2, 0.8], [0.6, 0.4], np.array([0.0, 1.0]))
        assert np.allclose(vals, 0.0)


def test_golden_section_quadratic():
    x = golden_section_min(lambda t: (t - 0.3141) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3141, abs=1e-9)


class TestMinPairwise:
    def test_ternary_all_tied(self, ternary):
        res = min_pairwise_chernoff(ternary.channel)
        assert res.value == pytest.approx(C_TERNARY, abs=1e-12)
        assert res.pair == (0, 1)
        off = res.matrix[~np.eye(3, dtype=bool)]
        assert np.allclose(off, C_TERNARY, atol=1e-12)

    def test_survey(self, survey):
        assert min_pairwise_chernoff(survey).value == pytest.approx(C_BERN, abs=1e-12)

    def test_duplicate_rows_merge(self):
        ch = Channel([[0.9, 0.1], [0.2, 0.8], [0.9, 0.1]])
        res = min_pairwise_chernoff(ch)
        assert res.groups == [[0, 2], [1]]
        assert res.matrix.shape == (2, 2)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            min_pairwise_chernoff(Channel([[0.4, 0.6], [0.4, 0.6]]))


class TestFit:
    def test_exact_line(self):
        fit = fit_decay_rate([(n, 2.0 ** (-0.5 * n)) for n in range(60, 201, 10)])
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant(self):
        assert fit_decay_rate([(n, 0.25) for n in (60, 70, 80)]).slope == 0.0

    def test_window_filters(self):
        with pytest.raises(InsufficientPoints):
            fit_decay_rate([(10, 0.1), (20, 0.01), (300, 0.001)])

    def test_non_positive(self):
        with pytest.raises(NonPositiveGap):
            fit_decay_rate([(60, 0.1), (70, 0.0), (80, 0.01)])


class TestRateExperiment:
    def test_independent_system(self):
        sys = System(ProbVec([0.5, 0.5]), Channel([[0.3, 0.7], [0.3, 0.7]]))
        with pytest.raises(NonPositiveGap):
            rate_experiment(MetricSpec("mutual_information"), sys, [60, 70, 80])

    def test_needs_increasing_ns(self, ternary):
        with pytest.raises(ValueError):
            rate_experiment(MetricSpec("mutual_information"), ternary, [80, 70, 60])

    def test_unknown_mode(self, ternary):
        with pytest.raises(ValueError):
            rate_experiment(MetricSpec("mutual_information"), ternary, [60, 70, 80], mode="other")

    def test_survey_pml(self, survey):
        rep = rate_experiment(MetricSpec("maximal_leakage"), survey, range(60, 201, 20), "pointwise_l1")
        assert rep.c_min == pytest.approx(C_BERN)
        assert rep.relative_error <= 0.10
