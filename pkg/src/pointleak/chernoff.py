"""Chernoff information and exponential decay-rate fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

from .errors import InsufficientPoints, LengthMismatch, NonPositiveGap, SingleClass
from .metrics import MetricSpec
from .prob_core import Channel, System, as_array, distinct_row_groups

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
LAMBDA_TOL = 1e-10
DEFAULT_WINDOW = (60, 200)


def golden_section_min(func, a: float, b: float, tol: float = LAMBDA_TOL) -> float:
    """Minimiser of a unimodal ``func`` on [a, b], bracketed to width ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    return 0.5 * (a + b)


def _log_bhattacharyya_terms(p1: np.ndarray, p2: np.ndarray):
    common = (p1 > 0) & (p2 > 0)
    return np.log(p1[common]), np.log(p2[common]), float(p2[p1 > 0].sum()), float(p1[p2 > 0].sum())


def chernoff_objective(p1, p2, lam) -> np.ndarray:
    """log2 sum_x p1(x)^lam p2(x)^(1-lam), vectorised over ``lam``.

    At the endpoints the value is the limit from the interior, i.e. the mass
    one distribution puts on the other's support.
    """
    p1, p2 = as_array(p1), as_array(p2)
    a, b, at0, at1 = _log_bhattacharyya_terms(p1, p2)
    lam = np.asarray(lam, dtype=float)
    if a.size == 0:
        out = np.full(lam.shape, -np.inf)
    else:
        out = logsumexp(lam[..., None] * a + (1.0 - lam[..., None]) * b, axis=-1) / math.log(2.0)
    with np.errstate(divide="ignore"):
        out = np.where(lam == 0.0, math.log2(at0) if at0 > 0 else -np.inf, out)
        out = np.where(lam == 1.0, math.log2(at1) if at1 > 0 else -np.inf, out)
    return out


def chernoff_information(p1, p2) -> float:
    """C(p1||p2) = -min over lam in [0, 1] of log2 sum p1^lam p2^(1-lam), in bits."""
    p1, p2 = as_array(p1), as_array(p2)
    if p1.shape != p2.shape:
        raise LengthMismatch(f"lengths differ: {p1.size} vs {p2.size}")
    if np.array_equal(p1, p2):
        return 0.0
    a, b, _, _ = _log_bhattacharyya_terms(p1, p2)
    if a.size == 0:
        return math.inf
    obj = lambda lam: float(chernoff_objective(p1, p2, lam))  # noqa: E731
    lam = golden_section_min(obj, 0.0, 1.0)
    best = min(obj(lam), obj(0.0), obj(1.0))
    return max(-best, 0.0)


@dataclass(frozen=True)
class PairwiseChernoff:
    value: float
    pair: tuple[int, int]
    matrix: np.ndarray
    groups: list[list[int]]
    """Original row indices behind each distinct row used in ``matrix``."""


def chernoff_matrix(rows: np.ndarray) -> np.ndarray:
    k = rows.shape[0]
    M = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            M[i, j] = M[j, i] = chernoff_information(rows[i], rows[j])
    return M


def min_pairwise_chernoff(ch: Channel | System, tol: float = 1e-12) -> PairwiseChernoff:
    """Minimum Chernoff information over pairs of distinct channel rows.

    Rows equal within ``tol`` are merged first; ``pair`` indexes the merged rows.
    """
    rows = ch.rows
    groups = distinct_row_groups(rows, tol)
    if len(groups) < 2:
        raise SingleClass("need at least two distinct channel rows")
    distinct = np.array([rows[g[0]] for g in groups])
    M = chernoff_matrix(distinct)
    best, pair = math.inf, (0, 1)
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            if M[i, j] < best:
                best, pair = M[i, j], (i, j)
    return PairwiseChernoff(best, pair, M, groups)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_decay_rate(points: Iterable[tuple[int, float]], window: tuple[int, int] = DEFAULT_WINDOW) -> DecayFit:
    """Least-squares line through (n, log2 gap) for n inside ``window``."""
    lo, hi = window
    pts = [(n, g) for n, g in points if lo <= n <= hi]
    if len(pts) < 3:
        raise InsufficientPoints(f"{len(pts)} points in window [{lo}, {hi}], need at least 3")
    bad = [(n, g) for n, g in pts if not g > 0]
    if bad:
        raise NonPositiveGap(f"gap {bad[0][1]!r} at n={bad[0][0]} is not positive")
    n = np.array([p[0] for p in pts], dtype=float)
    y = np.log2(np.array([p[1] for p in pts], dtype=float))
    if np.ptp(y) == 0.0:
        return DecayFit(0.0, float(y[0]), 1.0, len(pts))
    fit = linregress(n, y)
    return DecayFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), len(pts))


@dataclass(frozen=True)
class RateReport:
    metric: str
    mode: str
    n_values: tuple[int, ...]
    gaps: tuple[float, ...]
    window: tuple[int, int]
    fit: DecayFit
    c_min: float

    @property
    def fitted_slope(self) -> float:
        return self.fit.slope

    @property
    def relative_error(self) -> float:
        return abs(self.fit.slope + self.c_min) / self.c_min


def rate_experiment(
    m: MetricSpec,
    sys: System,
    ns: Sequence[int],
    mode: str = "global_gap",
    window: tuple[int, int] = DEFAULT_WINDOW,
) -> RateReport:
    """Fit the exponential decay rate of L_inf - L_n (``global_gap``) or of
    ||F_{L_n} - F_{I_X}||_1 (``pointwise_l1``) and compare it with -C."""
    from .composition import global_gap, pointwise_l1

    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing")
    if mode == "global_gap":
        gaps = [global_gap(m, sys, n) for n in ns]
    elif mode == "pointwise_l1":
        gaps = [pointwise_l1(m, sys, n) for n in ns]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    fit = fit_decay_rate(zip(ns, gaps), window)
    c = min_pairwise_chernoff(sys.channel).value
    return RateReport(m.name, mode, tuple(ns), tuple(gaps), tuple(window), fit, c)
