"""Catalog of leakage metrics in pointwise form.

Each metric is the triple (f, g1, g2): ``f(P, Q)`` scores a posterior ``P``
against the prior ``Q``, ``g1`` maps pointwise values into the quantity that
is averaged over observations, and ``g2`` turns the average back into bits.
``h = g1 o f`` is the per-observation contribution to global leakage.

All values are in bits. Alphabet indices are 0-based.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DomainError,
    InfiniteLeakage,
    LengthMismatch,
    ShapeMismatch,
    ZeroPriorRealisation,
)
from .prob_core import ProbVec, System, as_array

KINDS = (
    "mutual_information",
    "sibson",
    "arimoto",
    "maximal_leakage",
    "min_entropy",
    "f_divergence",
    "g_leakage",
)
FDIV_KINDS = ("kl", "chi_squared", "squared_hellinger")

# kinds whose aggregators are g1(z) = 2^(z/a), g2(z) = a/(a-1) log z (or a = 1 limit: 2^z, log z)
_EXP_KINDS = ("sibson", "arimoto", "maximal_leakage", "min_entropy", "g_leakage")

MERGE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """Gains g(w, x) for guesses w (rows) against secrets x (columns)."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 2 or g.size == 0:
            raise ShapeMismatch("gain matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise DomainError("gains must be finite and non-negative")
        if not np.any(g > 0):
            raise DomainError("gain matrix needs at least one positive entry")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def identity(cls, k: int) -> "GainMatrix":
        """Guess-the-secret gain; g-leakage then reduces to min-entropy leakage."""
        return cls(np.eye(k))


@dataclass(frozen=True, eq=False)
class MetricSpec:
    kind: str
    alpha: float | None = None
    fdiv_kind: str | None = None
    gain: GainMatrix | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("sibson", "arimoto"):
            if self.alpha is None or not (1.0 < float(self.alpha) < math.inf):
                raise AlphaOutOfRange(f"{self.kind} needs alpha in (1, inf), got {self.alpha!r}")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise AlphaOutOfRange(f"{self.kind} takes no alpha")
        if self.kind == "f_divergence":
            if self.fdiv_kind not in FDIV_KINDS:
                raise ValueError(f"fdiv_kind must be one of {FDIV_KINDS}, got {self.fdiv_kind!r}")
        elif self.fdiv_kind is not None:
            raise ValueError(f"{self.kind} takes no fdiv_kind")
        if self.kind == "g_leakage":
            if self.gain is None:
                raise ValueError("g_leakage needs a gain matrix")
            if not isinstance(self.gain, GainMatrix):
                object.__setattr__(self, "gain", GainMatrix(self.gain))
        elif self.gain is not None:
            raise ValueError(f"{self.kind} takes no gain matrix")

    @property
    def name(self) -> str:
        if self.alpha is not None:
            return f"{self.kind}(alpha={self.alpha:g})"
        if self.fdiv_kind is not None:
            return f"f_divergence({self.fdiv_kind})"
        return self.kind

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.alpha is not None:
            doc["alpha"] = self.alpha
        if self.fdiv_kind is not None:
            doc["fdiv_kind"] = self.fdiv_kind
        if self.gain is not None:
            doc["gain"] = self.gain.gains.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricSpec":
        unknown = set(doc) - {"kind", "alpha", "fdiv_kind", "gain"}
        if unknown:
            raise ValueError(f"unknown metric fields: {sorted(unknown)}")
        gain = doc.get("gain")
        return cls(
            doc["kind"],
            doc.get("alpha"),
            doc.get("fdiv_kind"),
            GainMatrix(np.asarray(gain, dtype=float)) if gain is not None else None,
        )

    @classmethod
    def parse(cls, text: str) -> "MetricSpec":
        return cls.from_dict(json.loads(text))


def catalog(k: int, alphas=(2.0,)) -> list[MetricSpec]:
    """One instance of every catalog row, sized for an alphabet of ``k`` secrets."""
    out = [MetricSpec("mutual_information")]
    for a in alphas:
        out.append(MetricSpec("sibson", alpha=a))
    out.append(MetricSpec("maximal_leakage"))
    for a in alphas:
        out.append(MetricSpec("arimoto", alpha=a))
    out.extend(MetricSpec("f_divergence", fdiv_kind=fk) for fk in FDIV_KINDS)
    out.append(MetricSpec("min_entropy"))
    out.append(MetricSpec("g_leakage", gain=GainMatrix.identity(k)))
    return out


# -- pointwise function f ---------------------------------------------------


def _kl_rows(P, q):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0) / q), 0.0)
    out = terms.sum(axis=-1)
    out[np.any((P > 0) & (q == 0), axis=-1)] = np.inf
    return out


def f_batch(m: MetricSpec, P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Evaluate f(P_r, q) for every row P_r of ``P``.

    Rows may lie slightly outside the simplex (the finite-difference checks
    rely on this); where the formula is undefined the result is NaN.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    q = np.asarray(q, dtype=float)
    if P.shape[-1] != q.size:
        raise LengthMismatch(f"lengths differ: {P.shape[-1]} vs {q.size}")
    pos = q > 0
    leaks = np.any((P > 0) & ~pos, axis=-1)
    kind = m.kind
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind == "mutual_information" or (kind == "f_divergence" and m.fdiv_kind == "kl"):
            return _kl_rows(P, q)
        if kind == "maximal_leakage":
            return np.log2(np.max(P[:, pos] / q[pos], axis=-1))
        if kind == "sibson":
            a = m.alpha
            qs = q[pos]
            s = np.sum(qs * (P[:, pos] / qs) ** a, axis=-1)
            out = np.log2(s)
            out[leaks] = np.inf
            return out
        if kind == "arimoto":
            a = m.alpha
            return np.log2(np.sum(P**a, axis=-1)) - np.log2(np.sum(q**a))
        if kind == "min_entropy":
            return np.log2(np.max(P, axis=-1)) - np.log2(np.max(q))
        if kind == "g_leakage":
            G = m.gain.gains
            if G.shape[1] != q.size:
                raise LengthMismatch(f"gain matrix has {G.shape[1]} columns, alphabet has {q.size}")
            return np.log2(np.max(P @ G.T, axis=-1)) - np.log2(np.max(G @ q))
        if m.fdiv_kind == "chi_squared":
            qs = q[pos]
            out = np.sum(P[:, pos] ** 2 / qs, axis=-1) - 1.0
            out[leaks] = np.inf
            return out
        # squared Hellinger: sum (sqrt p - sqrt q)^2
        return np.sum((np.sqrt(P) - np.sqrt(q)) ** 2, axis=-1)


def pointwise_f(m: MetricSpec, p, q) -> float:
    """f(p, q) in bits; +inf when p puts mass outside q's support (where the
    metric's formula sees that mass)."""
    p, q = as_array(p), as_array(q)
    if p.shape != q.shape:
        raise LengthMismatch(f"lengths differ: {p.size} vs {q.size}")
    return float(f_batch(m, p[None, :], q)[0])


def fhat(fdiv_kind: str, t: np.ndarray) -> np.ndarray:
    """Generator of the f-divergence in the orientation sum_i p_i fhat(q_i / p_i).

    kl: -log2 t, giving D(P||Q). chi_squared: 1/t - t (the conjugate of
    u^2 - 1), giving Pearson chi^2(P||Q). squared_hellinger: (sqrt t - 1)^2.
    """
    t = np.asarray(t, dtype=float)
    if fdiv_kind == "kl":
        return -np.log2(t)
    if fdiv_kind == "chi_squared":
        return 1.0 / t - t
    if fdiv_kind == "squared_hellinger":
        return (np.sqrt(t) - 1.0) ** 2
    raise ValueError(fdiv_kind)


# lim_{t -> inf} fhat(t) / t: the weight of a p_i = 0 term, which contributes q_i times this
_FHAT_SLOPE_AT_INF = {"kl": 0.0, "chi_squared": -1.0, "squared_hellinger": 1.0}


# -- aggregators -------------------------------------------------------------


def g1_apply(m: MetricSpec, z):
    z = np.asarray(z, dtype=float)
    if m.kind in _EXP_KINDS:
        a = m.alpha if m.alpha is not None else 1.0
        return np.exp2(z / a)
    return z


def g2_apply(m: MetricSpec, z):
    """Map an expectation of g1-values back to bits. Raises DomainError for
    z <= 0 on the log-based aggregators."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=float)
    if m.kind in _EXP_KINDS:
        if np.any(~(z > 0)):
            raise DomainError(f"{m.name}: g2 needs z > 0, got {z.min() if z.size else z}")
        a = m.alpha
        c = a / (a - 1.0) if a is not None else 1.0
        out = c * np.log2(z)
    else:
        out = z
    return float(out) if scalar else out


def g2_gap(m: MetricSpec, a_limit: float, a_gap: float) -> float:
    """g2(a_limit) - g2(a_limit - a_gap), evaluated without cancellation."""
    if m.kind in _EXP_KINDS:
        a = m.alpha
        c = a / (a - 1.0) if a is not None else 1.0
        return -c * math.log1p(-a_gap / a_limit) / math.log(2.0)
    return a_gap


def h_batch(m: MetricSpec, P: np.ndarray, q: np.ndarray) -> np.ndarray:
    return g1_apply(m, f_batch(m, P, q))


def h_value(m: MetricSpec, p, q) -> float:
    """h(p, q) = g1(f(p, q))."""
    return float(g1_apply(m, pointwise_f(m, p, q)))


# -- information function ----------------------------------------------------


def information_value(m: MetricSpec, x: int, q) -> float:
    """i_X(x) = f(E_x, q): the leakage of learning that X = x exactly."""
    q = as_array(q)
    if not 0 <= x < q.size:
        raise IndexError(f"x={x} out of range for alphabet of size {q.size}")
    if q[x] <= 0:
        raise ZeroPriorRealisation(f"x={x} has zero prior probability")
    e = np.zeros_like(q)
    e[x] = 1.0
    return pointwise_f(m, e, q)


def information_values(m: MetricSpec, q) -> np.ndarray:
    q = as_array(q)
    return f_batch(m, np.eye(q.size), q)


def _merge_atoms(values, probs, tol: float) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    keep = p > 0
    v, p = v[keep], p[keep]
    if np.any(~np.isfinite(v)):
        raise InfiniteLeakage("leakage value is infinite with positive probability")
    order = np.argsort(v, kind="stable")
    v, p = v[order], p[order]
    if v.size == 0:
        raise ValueError("empty distribution")
    if tol == 0:
        starts = np.flatnonzero(np.r_[True, np.diff(v) > 0])
    else:
        starts = [0]
        for i in range(1, v.size):
            if v[i] - v[starts[-1]] > tol:
                starts.append(i)
        starts = np.asarray(starts)
    return v[starts], np.add.reduceat(p, starts)


@dataclass(frozen=True, eq=False)
class LeakageDistribution:
    """Finitely supported distribution of a leakage random variable.

    ``values`` are strictly increasing; build instances with
    :meth:`from_pairs` to get sorting and merging of near-equal values.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        p = np.array(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise LengthMismatch("values and probs must be equal-length non-empty vectors")
        if not np.all(np.isfinite(v)):
            raise InfiniteLeakage("leakage distribution has non-finite support")
        if np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must be non-negative and sum to 1 (sum={p.sum()!r})")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_pairs(cls, values, probs, tol: float = MERGE_TOL) -> "LeakageDistribution":
        """Sort, drop zero-probability atoms, and merge values closer than ``tol``.

        A merged atom sits at the smallest value of its cluster. ``tol=0``
        merges exact duplicates only.
        """
        return cls(*_merge_atoms(values, probs, tol))

    @classmethod
    def from_samples(cls, samples, tol: float = MERGE_TOL) -> "LeakageDistribution":
        s = np.asarray(samples, dtype=float).ravel()
        v, counts = _merge_atoms(s, np.ones(s.size), tol)
        return cls(v, counts / s.size)

    @classmethod
    def point_mass(cls, value: float = 0.0) -> "LeakageDistribution":
        return cls(np.array([value]), np.array([1.0]))

    def __len__(self) -> int:
        return self.values.size

    def cdf(self, l):
        """Right-continuous CDF Pr{L <= l}."""
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.values, np.asarray(l, dtype=float), side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.ndim(l) == 0 else out

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def ks_distance(self, other: "LeakageDistribution", tol: float = MERGE_TOL) -> float:
        """sup_l |F_self(l) - F_other(l)|, treating support points within ``tol`` as equal."""
        pts = np.union1d(self.values, other.values)
        return float(np.max(np.abs(self.cdf(pts + tol) - other.cdf(pts + tol))))


def information_distribution(m: MetricSpec, q, tol: float = MERGE_TOL) -> LeakageDistribution:
    """Distribution of I_X = i_X(X) for X ~ q."""
    q = as_array(q)
    pos = np.flatnonzero(q > 0)
    vals = information_values(m, q)[pos]
    return LeakageDistribution.from_pairs(vals, q[pos], tol)


# -- single-observation global leakage ---------------------------------------


def global_leakage(m: MetricSpec, sys: System) -> float:
    """g2( E_Y[ g1(f(Q_{X|Y}, Q_X)) ] ) for one observation."""
    joint = sys.joint()
    qy = joint.sum(axis=0)
    on = qy > 0
    post = (joint[:, on] / qy[on]).T
    h = h_batch(m, post, sys.q)
    if np.any(~np.isfinite(h)):
        raise InfiniteLeakage(f"{m.name}: infinite pointwise leakage with positive probability")
    return g2_apply(m, float(np.dot(qy[on], h)))


def global_limit_value(m: MetricSpec, q) -> float:
    """g2( sum_x q(x) g1(i_X(x)) ), the large-n limit of global leakage."""
    q = as_array(q)
    pos = q > 0
    h = g1_apply(m, information_values(m, q)[pos])
    return g2_apply(m, float(np.dot(q[pos], h)))


def standard_definition(m: MetricSpec, sys: System) -> float:
    """The metric's textbook closed form, computed from the joint distribution
    without forming posteriors."""
    q, W = sys.q, sys.rows
    J = sys.joint()
    qy = J.sum(axis=0)
    kind = m.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "mutual_information":
            prod = np.outer(q, qy)
            on = J > 0
            return float(np.sum(J[on] * np.log2(J[on] / prod[on])))
        if kind == "sibson":
            a = m.alpha
            inner = (q[:, None] * W**a).sum(axis=0) ** (1.0 / a)
            return a / (a - 1.0) * math.log2(inner.sum())
        if kind == "maximal_leakage":
            return math.log2(W[q > 0].max(axis=0).sum())
        if kind == "arimoto":
            a = m.alpha
            inner = ((q[:, None] ** a * W**a).sum(axis=0) / np.sum(q**a)) ** (1.0 / a)
            return a / (a - 1.0) * math.log2(inner.sum())
        if kind == "f_divergence":
            prod = np.outer(q, qy)
            on = J > 0
            total = np.sum(J[on] * fhat(m.fdiv_kind, prod[on] / J[on]))
            total += _FHAT_SLOPE_AT_INF[m.fdiv_kind] * prod[~on].sum()
            return float(total)
        if kind == "min_entropy":
            return math.log2(J.max(axis=0).sum() / q.max())
        G = m.gain.gains
        # sum_y max_w sum_x Q(x) Q(y|x) g(w, x)
        num = np.max(G @ J, axis=0).sum()
        return math.log2(num / np.max(G @ q))
