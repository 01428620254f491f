"""Exact n-fold composition by the method of types.

Posteriors after n i.i.d. observations depend only on the counts of each
output symbol, so every quantity here is a sum over type classes rather
than over the |Y|^n sequences. Analyses first merge inputs with identical
channel rows; the merged system is what the leakage is measured against.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import logsumexp

from .errors import InfiniteLeakage, SingleClass, SizeLimit
from .metrics import (
    MERGE_TOL,
    LeakageDistribution,
    MetricSpec,
    f_batch,
    g1_apply,
    g2_apply,
    g2_gap,
    h_batch,
    information_distribution,
    information_values,
)
from .prob_core import System, log_joint, log_posteriors, merge_equivalent_rows

log = logging.getLogger(__name__)

SIZE_LIMIT = 10**8
TIE_TOL = 1e-12


@dataclass(frozen=True)
class TypeClass:
    """Occurrence counts of each output symbol in a length-n sequence."""

    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def empirical(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=float)
        return c / self.n if self.n else c


def n_types(n: int, m: int) -> int:
    return math.comb(n + m - 1, m - 1)


def type_matrix(n: int, m: int) -> np.ndarray:
    """All count vectors of length ``m`` summing to ``n``, one per row, in
    descending lexicographic order: (n, 0, ...), (n-1, 1, ...), ..."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    total = n_types(n, m)
    if total > SIZE_LIMIT:
        raise SizeLimit(f"{total} type classes for n={n}, |Y|={m} exceeds {SIZE_LIMIT}")
    return _types(n, m)


def _types(n: int, m: int) -> np.ndarray:
    if m == 1:
        return np.array([[n]], dtype=np.int64)
    subs = [_sub_types(n - first, m - 1) for first in range(n, -1, -1)]
    sizes = [s.shape[0] for s in subs]
    head = np.repeat(np.arange(n, -1, -1, dtype=np.int64), sizes)[:, None]
    return np.hstack([head, np.concatenate(subs)])


@lru_cache(maxsize=1024)
def _sub_types(n: int, m: int) -> np.ndarray:
    out = _types(n, m)
    out.setflags(write=False)
    return out


def enumerate_types(n: int, m: int) -> list[TypeClass]:
    return [TypeClass(tuple(row)) for row in type_matrix(n, m)]


def _merged(sys: System) -> System:
    merge = merge_equivalent_rows(sys)
    if merge.changed:
        log.info("merged inputs with identical channel rows: %s", merge.groups())
    return merge.system


def _require_two_classes(sys: System) -> None:
    if sys.n_x < 2:
        raise SingleClass("system has a single input class after merging identical rows")


@dataclass(frozen=True, eq=False)
class TypeTable:
    """Per-type probabilities and posteriors for a fixed n.

    Types that are impossible under every input are dropped.
    """

    system: System
    n: int
    counts: np.ndarray
    prob: np.ndarray
    post: np.ndarray

    @classmethod
    def build(cls, sys: System, n: int) -> "TypeTable":
        counts = type_matrix(n, sys.n_y)
        w = log_joint(sys, counts)
        lse = logsumexp(w, axis=1)
        keep = np.isfinite(lse)
        counts, w, lse = counts[keep], w[keep], lse[keep]
        post = np.exp(log_posteriors(w))
        return cls(sys, n, counts, np.exp(lse), post)

    @cached_property
    def divergences(self) -> np.ndarray:
        """D(P_n || Q_x) in bits, shape (types, inputs)."""
        return divergence_matrix(self.counts, self.system.rows)

    @cached_property
    def mle(self) -> np.ndarray:
        """x1(P_n): the smallest-divergence input, ties to the lowest index."""
        D = self.divergences
        return np.argmax(D <= D.min(axis=1, keepdims=True) + TIE_TOL, axis=1)

    @cached_property
    def gap_k(self) -> np.ndarray:
        """K(P_n) = D(P_n||Q_{x2}) - D(P_n||Q_{x1})."""
        s = np.sort(self.divergences, axis=1)
        k = s[:, 1] - s[:, 0]
        return np.where(k <= TIE_TOL, 0.0, k)

    def in_tilde(self, cn: float | None = None) -> np.ndarray:
        if cn is None:
            cn = float(np.sort(self.divergences, axis=1)[:, 1].min())
        d1 = self.divergences.min(axis=1)
        return cn - d1 >= 1.0 / math.sqrt(self.n)


def divergence_matrix(counts: np.ndarray, rows: np.ndarray) -> np.ndarray:
    counts = np.atleast_2d(counts).astype(float)
    n = counts.sum(axis=1, keepdims=True)
    P = np.divide(counts, n, out=np.zeros_like(counts), where=n > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        neg_h = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0)), 0.0).sum(axis=1)
        zero = rows == 0
        logq = np.where(zero, 0.0, np.log2(np.where(zero, 1.0, rows)))
    D = neg_h[:, None] - P @ logq.T
    if zero.any():
        D[((P > 0).astype(float) @ zero.T.astype(float)) > 0] = np.inf
    return np.maximum(D, 0.0)


@dataclass(frozen=True)
class TypeGeometry:
    ordering: tuple[int, ...]
    divergences: tuple[float, ...]
    K: float
    in_domain: int | None
    in_tilde: bool

    @property
    def mle(self) -> int:
        return self.ordering[0]


def _tie_order(d: np.ndarray, tol: float = TIE_TOL) -> list[int]:
    order = sorted(range(d.size), key=lambda x: (d[x], x))
    out: list[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and d[order[j]] - d[order[i]] <= tol:
            j += 1
        out.extend(sorted(order[i:j]))
        i = j
    return out


def type_geometry(sys: System, t, cn: float | None = None) -> TypeGeometry:
    """Divergence ordering of the inputs for one type, K(P_n), its x-domain
    and membership of the high-probability set C_n - D(P_n||Q_x1) >= 1/sqrt(n)."""
    sys = _merged(sys)
    _require_two_classes(sys)
    counts = np.asarray(getattr(t, "counts", t), dtype=np.int64)
    n = int(counts.sum())
    d = divergence_matrix(counts[None, :], sys.rows)[0]
    order = _tie_order(d)
    k = d[order[1]] - d[order[0]]
    k = 0.0 if k <= TIE_TOL else float(k)
    in_domain = order[0] if k > 0 else None
    if n == 0:
        in_tilde = False
    else:
        if cn is None:
            cn = c_n(sys, n)
        in_tilde = bool(cn - d[order[0]] >= 1.0 / math.sqrt(n))
    return TypeGeometry(tuple(order), tuple(float(v) for v in d), k, in_domain, in_tilde)


def c_n(sys: System, n: int) -> float:
    """C_n: the smallest second-smallest divergence D(P_n||Q_{x2(P_n)}) over all types."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sys = _merged(sys)
    _require_two_classes(sys)
    D = divergence_matrix(type_matrix(n, sys.n_y), sys.rows)
    return float(np.partition(D, 1, axis=1)[:, 1].min())


def exact_pointwise_distribution(
    m: MetricSpec, sys: System, n: int, tol: float = MERGE_TOL
) -> LeakageDistribution:
    """Exact distribution of L_n = f(Q_{X|Y^n}, Q_X) under Y^n ~ Q_{Y^n}."""
    table = TypeTable.build(_merged(sys), n)
    vals = f_batch(m, table.post, table.system.q)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InfiniteLeakage(
            f"{m.name}: leakage {vals[i]} at type {table.counts[i].tolist()} (n={n})"
        )
    return LeakageDistribution.from_pairs(vals, table.prob, tol)


def cdf_l1_distance(a: LeakageDistribution, b: LeakageDistribution) -> float:
    """Integral of |F_a - F_b| over the real line (both are step functions)."""
    v = np.concatenate([a.values, b.values])
    w = np.concatenate([a.probs, -b.probs])
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    diff = np.cumsum(w)[:-1]
    return math.fsum(np.abs(diff) * np.diff(v))


def _expected_h(m: MetricSpec, table: TypeTable) -> float:
    h = h_batch(m, table.post, table.system.q)
    if np.any(~np.isfinite(h)):
        raise InfiniteLeakage(f"{m.name}: infinite pointwise leakage with positive probability")
    return math.fsum(table.prob * h)


def exact_global_leakage(m: MetricSpec, sys: System, n: int, *, merge: bool = True) -> float:
    """L_n = g2( E_{Y^n}[ g1(l(Y^n)) ] ).

    ``merge=False`` measures leakage about X itself even when some inputs
    share a channel row.
    """
    base = _merged(sys) if merge else sys
    return g2_apply(m, _expected_h(m, TypeTable.build(base, n)))


def global_limit(m: MetricSpec, sys: System) -> float:
    """L_inf = g2( sum_x Q_X(x) g1(i_X(x)) ) on the merged system."""
    q = _merged(sys).q
    pos = q > 0
    h = g1_apply(m, information_values(m, q)[pos])
    return g2_apply(m, math.fsum(q[pos] * h))


def global_gap(m: MetricSpec, sys: System, n: int) -> float:
    """L_inf - L_n, accumulated type by type so that exponentially small gaps
    survive in floating point.

    Per type the summand is sum_x post(x) h(E_x) - h(post), which is
    non-negative whenever h is convex.
    """
    table = TypeTable.build(_merged(sys), n)
    q = table.system.q
    h_ext = g1_apply(m, information_values(m, q))
    h_ext = np.where(q > 0, h_ext, 0.0)
    h_post = h_batch(m, table.post, q)
    if np.any(~np.isfinite(h_post)):
        raise InfiniteLeakage(f"{m.name}: infinite pointwise leakage with positive probability")
    bracket = table.post @ h_ext - h_post
    a_gap = math.fsum(table.prob * bracket)
    a_limit = math.fsum(q[q > 0] * h_ext[q > 0])
    return g2_gap(m, a_limit, a_gap)


def pointwise_l1(m: MetricSpec, sys: System, n: int) -> float:
    """||F_{L_n} - F_{I_X}||_1 without merging nearby support points."""
    merged = _merged(sys)
    ln = exact_pointwise_distribution(m, merged, n, tol=0.0)
    ix = information_distribution(m, merged.q, tol=0.0)
    return cdf_l1_distance(ln, ix)


@dataclass(frozen=True)
class CompositionRow:
    n: int
    metric: str
    global_leakage_bits: float
    global_limit_bits: float
    gap_bits: float
    l1_to_information_cdf: float


def composition_table(m: MetricSpec, sys: System, ns) -> list[CompositionRow]:
    limit = global_limit(m, sys)
    rows = []
    for n in ns:
        rows.append(
            CompositionRow(
                n,
                m.name,
                exact_global_leakage(m, sys, n),
                limit,
                global_gap(m, sys, n),
                pointwise_l1(m, sys, n),
            )
        )
    return rows
