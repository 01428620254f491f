import json
import math

import numpy as np
import pytest

from pointleak.axioms import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    AxiomConfig,
    check_axioms,
    check_data_processing,
    check_derivative_property,
    check_h_convexity,
    verify_metric,
)
from pointleak.errors import ShapeMismatch
from pointleak.metrics import GainMatrix, MetricSpec, catalog, global_leakage, pointwise_f
from pointleak.prob_core import Channel, kl_divergence

PML = MetricSpec("maximal_leakage")
MI = MetricSpec("mutual_information")
Q3 = np.array([0.6, 0.3, 0.1])
TWO_GUESSES = MetricSpec("g_leakage", gain=GainMatrix([[1, 1, 0], [1, 0, 1], [0, 1, 1]]))


def neg_kl(p, q):
    return -kl_divergence(p, q)


def constant(p, q):
    return 1.0


def neg_square(p, q):
    return -float(np.sum(np.asarray(p) ** 2))


@pytest.mark.parametrize("m", [PML, MI], ids=lambda m: m.name)
def test_pml_and_mi_pass(m):
    report = check_axioms(m, Q3)
    assert report.passed, report.table()


def test_negated_kl_fails_with_witness():
    report = check_axioms(neg_kl, Q3)
    a2 = report.checks["A2_positive_extremes"]
    assert a2.status == FAIL
    w = a2.witness
    assert neg_kl(w["P"], w["Q"]) <= 0


def test_a3_witness_reproduces():
    report = check_axioms(neg_kl, Q3)
    c = report.checks["A3_quasiconvex"]
    assert c.status == FAIL
    w = c.witness
    mix = w["lambdas"] @ w["Ps"]
    assert neg_kl(mix, Q3) > max(neg_kl(p, Q3) for p in w["Ps"])


def test_constant_fails_derivative():
    report = check_derivative_property(constant, Q3)
    assert report.checks["derivative_directional"].status == FAIL
    assert report.checks["derivative_pairwise"].status == FAIL


def test_two_guess_gain_is_flat_along_edges():
    # guessing a pair: moving from E_1 towards E_2 keeps the best pair at gain 1
    report = check_axioms(TWO_GUESSES, Q3).merge(check_derivative_property(TWO_GUESSES, Q3))
    assert report.checks["A5_strict_local_max"].status == FAIL
    assert report.checks["derivative_pairwise"].status == FAIL
    i, j = report.checks["derivative_pairwise"].witness["i"], report.checks["derivative_pairwise"].witness["j"]
    p = np.eye(3)[i] * 0.5 + np.eye(3)[j] * 0.5
    assert pointwise_f(TWO_GUESSES, p, Q3) == pytest.approx(pointwise_f(TWO_GUESSES, np.eye(3)[i], Q3))


def test_concave_h_fails():
    report = check_h_convexity(neg_square, Q3)
    c = report.checks["h_convex"]
    assert c.status == FAIL
    w = c.witness
    mix = w["lambda"] * w["P1"] + (1 - w["lambda"]) * w["P2"]
    assert neg_square(mix, Q3) > w["lambda"] * neg_square(w["P1"], Q3) + (1 - w["lambda"]) * neg_square(w["P2"], Q3)


@pytest.mark.parametrize("kind", ["min_entropy", "g_leakage"])
def test_tied_max_prior_is_inconclusive(kind):
    q = np.array([0.4, 0.4, 0.2])
    m = MetricSpec(kind, gain=GainMatrix.identity(3)) if kind == "g_leakage" else MetricSpec(kind)
    assert check_axioms(m, q).checks["A5_strict_local_max"].status == INCONCLUSIVE


def test_singular_extreme_point_is_reported():
    def blows_up(p, q):
        return math.inf if max(p) == 1.0 else 0.0

    report = check_derivative_property(blows_up, Q3)
    assert {c.status for c in report.checks.values()} == {INCONCLUSIVE}


@pytest.mark.parametrize("m", [PML, MI], ids=lambda m: m.name)
def test_derivative_property(m):
    assert check_derivative_property(m, [0.5, 0.5]).passed
    assert check_derivative_property(m, Q3).passed


@pytest.mark.parametrize("m", catalog(3), ids=lambda m: m.name)
def test_h_convex(m):
    assert check_h_convexity(m, Q3).passed


def test_reports_are_deterministic():
    cfg = AxiomConfig(seed=11)
    a = verify_metric(MetricSpec("sibson", alpha=3.0), Q3, cfg).to_json()
    b = verify_metric(MetricSpec("sibson", alpha=3.0), Q3, cfg).to_json()
    assert a == b
    doc = json.loads(a)
    assert {c["status"] for c in doc["checks"]} == {PASS}


class TestDataProcessing:
    def test_identity_garble(self, ternary):
        for m in catalog(3):
            same = ternary.with_channel(ternary.channel.compose(Channel(np.eye(3))))
            assert global_leakage(m, same) == pytest.approx(global_leakage(m, ternary), abs=1e-12)
            assert check_data_processing(m, ternary, Channel(np.eye(3)), n_trials=0).passed

    def test_collapsing_garble(self, ternary):
        collapse = Channel(np.ones((3, 1)))
        z = ternary.with_channel(ternary.channel.compose(collapse))
        for m in catalog(3):
            assert abs(global_leakage(m, z)) <= 1e-12

    @pytest.mark.parametrize("m", catalog(3), ids=lambda m: m.name)
    def test_random_garbles(self, m, ternary):
        report = check_data_processing(m, ternary, n_trials=30, seed=5)
        assert report.passed, report.table()

    def test_shape(self, ternary):
        with pytest.raises(ShapeMismatch):
            check_data_processing(PML, ternary, Channel(np.eye(2)))
