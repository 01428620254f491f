"""Probability vectors, channels and Bayes arithmetic over type classes.

All accumulation over sequences is carried out in natural-log space;
divergences are reported in bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from os import PathLike
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    AllLikelihoodsZero,
    CountMismatch,
    EmptyVector,
    LengthMismatch,
    NegativeEntry,
    ShapeMismatch,
    SumOutOfTolerance,
)

SUM_TOL = 1e-9
LN2 = math.log(2.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_vector(p: np.ndarray) -> None:
    if p.ndim != 1 or p.size == 0:
        raise EmptyVector("probability vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(p)):
        raise NegativeEntry(f"non-finite entry in {p.tolist()}")
    if np.any(p < 0):
        i = int(np.argmax(p < 0))
        raise NegativeEntry(f"entry {i} is negative ({p[i]!r})")
    s = float(p.sum())
    if abs(s - 1.0) > SUM_TOL:
        raise SumOutOfTolerance(f"entries sum to {s!r}, not 1 (tolerance {SUM_TOL})")


@dataclass(frozen=True, eq=False)
class ProbVec:
    """Finite probability distribution, optionally with symbol labels.

    Construction validates but never renormalises.
    """

    probs: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        _check_vector(p)
        object.__setattr__(self, "probs", _readonly(p))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != p.size:
                raise LengthMismatch(f"{len(labels)} labels for {p.size} probabilities")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __repr__(self) -> str:
        return f"ProbVec({self.probs.tolist()})"


def validate(p, labels: Sequence[str] | None = None) -> ProbVec:
    """Check a raw vector and wrap it as a :class:`ProbVec`."""
    return ProbVec(np.asarray(p, dtype=float), labels)


def as_array(p) -> np.ndarray:
    if isinstance(p, ProbVec):
        return p.probs
    return np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix Q_{Y|X}; row x is the distribution of Y given x."""

    rows: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.rows, dtype=float)
        if m.ndim != 2 or m.shape[0] == 0:
            raise ShapeMismatch("channel must be a non-empty 2-D array")
        for i, row in enumerate(m):
            try:
                _check_vector(row)
            except (EmptyVector, NegativeEntry, SumOutOfTolerance) as exc:
                raise type(exc)(f"channel row {i}: {exc}") from None
        object.__setattr__(self, "rows", _readonly(m))

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    def row(self, x: int) -> ProbVec:
        return ProbVec(self.rows[x])

    def compose(self, garble: "Channel") -> "Channel":
        """Channel X -> Z obtained by passing Y through ``garble`` (Y -> Z)."""
        if garble.n_inputs != self.n_outputs:
            raise ShapeMismatch(
                f"garble has {garble.n_inputs} rows, channel has {self.n_outputs} outputs"
            )
        out = self.rows @ garble.rows
        return Channel(out / out.sum(axis=1, keepdims=True))


@dataclass(frozen=True, eq=False)
class System:
    """A prior over X together with the channel Q_{Y|X}."""

    prior: ProbVec
    channel: Channel
    x_labels: tuple[str, ...] | None = None
    y_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.prior, ProbVec):
            object.__setattr__(self, "prior", ProbVec(self.prior))
        if not isinstance(self.channel, Channel):
            object.__setattr__(self, "channel", Channel(self.channel))
        if len(self.prior) != self.channel.n_inputs:
            raise ShapeMismatch(
                f"prior has {len(self.prior)} entries, channel has {self.channel.n_inputs} rows"
            )
        k, m = self.channel.rows.shape
        xl = self.x_labels or tuple(f"x{i + 1}" for i in range(k))
        yl = self.y_labels or tuple(f"y{j + 1}" for j in range(m))
        if len(xl) != k or len(yl) != m:
            raise LengthMismatch("label count does not match alphabet size")
        object.__setattr__(self, "x_labels", tuple(map(str, xl)))
        object.__setattr__(self, "y_labels", tuple(map(str, yl)))

    @property
    def q(self) -> np.ndarray:
        return self.prior.probs

    @property
    def rows(self) -> np.ndarray:
        return self.channel.rows

    @property
    def n_x(self) -> int:
        return self.channel.n_inputs

    @property
    def n_y(self) -> int:
        return self.channel.n_outputs

    def joint(self) -> np.ndarray:
        return self.q[:, None] * self.rows

    def output_distribution(self) -> np.ndarray:
        return self.q @ self.rows

    def with_channel(self, channel: Channel) -> "System":
        return System(self.prior, channel, self.x_labels)


def kl_divergence(p, q) -> float:
    """D(p || q) in bits, with 0 log(0/q) = 0 and +inf on support violations."""
    p, q = as_array(p), as_array(q)
    if p.shape != q.shape:
        raise LengthMismatch(f"lengths differ: {p.size} vs {q.size}")
    on = p > 0
    if np.any(q[on] == 0):
        return math.inf
    d = float(np.sum(p[on] * np.log2(p[on] / q[on])))
    return max(d, 0.0)


def entropy(p) -> float:
    p = as_array(p)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def log_multinomial(counts: np.ndarray) -> np.ndarray:
    """Natural log of n! / prod(t_y!) for each row of ``counts``."""
    counts = np.asarray(counts)
    n = counts.sum(axis=-1)
    return gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=-1)


def log_likelihoods(rows: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """sum_y t_y log Q_x(y) for every (type, x) pair; -inf where impossible.

    ``counts`` has shape (N, |Y|); the result has shape (N, |X|).
    """
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    zero = rows == 0
    with np.errstate(divide="ignore"):
        logq = np.where(zero, 0.0, np.log(np.where(zero, 1.0, rows)))
    ll = counts @ logq.T
    if zero.any():
        impossible = (counts > 0).astype(float) @ zero.T.astype(float) > 0
        ll[impossible] = -np.inf
    return ll


def log_joint(sys: System, counts: np.ndarray, *, multinomial: bool = True) -> np.ndarray:
    """Natural-log weights log[ Q_X(x) Q^n_x(T(t)) ] for each type row and x.

    With ``multinomial=False`` the weight is that of one sequence of the type.
    """
    counts = np.atleast_2d(np.asarray(counts))
    with np.errstate(divide="ignore"):
        logprior = np.log(sys.q)
    w = log_likelihoods(sys.rows, counts) + logprior
    if multinomial:
        w = w + log_multinomial(counts)[:, None]
    return w


def log_posteriors(w: np.ndarray) -> np.ndarray:
    """Row-normalise log weights without losing mass close to 1.

    Rows that are entirely -inf come back as NaN.
    """
    w = np.atleast_2d(w)
    top = np.max(w, axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        shifted = w - top
    rest = np.where(shifted == 0.0, 0.0, np.exp(shifted))
    # the maximal entries contribute exactly 1 each, the rest through log1p
    n_top = np.sum(shifted == 0.0, axis=1, keepdims=True)
    tail = rest.sum(axis=1, keepdims=True)
    return shifted - (np.log(n_top) + np.log1p(tail / n_top))


def _counts_vector(sys: System, counts) -> np.ndarray:
    t = np.asarray(getattr(counts, "counts", counts))
    if t.ndim != 1 or t.size != sys.n_y:
        raise CountMismatch(f"expected {sys.n_y} counts, got shape {t.shape}")
    if np.any(t < 0) or np.any(t != np.round(t)):
        raise CountMismatch("counts must be non-negative integers")
    return t.astype(np.int64)


def posterior_from_counts(sys: System, counts) -> ProbVec:
    """Posterior Q_{X | Y^n = y^n} for any sequence y^n with the given counts."""
    t = _counts_vector(sys, counts)
    w = log_joint(sys, t, multinomial=False)[0]
    if np.all(np.isneginf(w)):
        raise AllLikelihoodsZero(f"counts {t.tolist()} are impossible under every x")
    post = np.exp(log_posteriors(w)[0])
    return ProbVec(post / post.sum(), sys.x_labels)


def output_marginal(sys: System, n: int, counts) -> float:
    """Probability that Y^n falls in the type class of ``counts``."""
    t = _counts_vector(sys, counts)
    if int(t.sum()) != n:
        raise CountMismatch(f"counts sum to {int(t.sum())}, expected n={n}")
    w = log_joint(sys, t)[0]
    finite = w[np.isfinite(w)]
    if finite.size == 0:
        return 0.0
    top = finite.max()
    return float(math.exp(top) * np.exp(finite - top).sum())


class Merge(NamedTuple):
    system: System
    mapping: tuple[int, ...]
    """mapping[x] is the index in the merged alphabet that x was assigned to."""

    @property
    def changed(self) -> bool:
        return len(set(self.mapping)) != len(self.mapping)

    def groups(self) -> list[tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for x, g in enumerate(self.mapping):
            out.setdefault(g, []).append(x)
        return [tuple(v) for _, v in sorted(out.items())]


def distinct_row_groups(rows: np.ndarray, tol: float = 1e-12) -> list[list[int]]:
    """Greedy grouping of rows whose max-abs difference is within ``tol``."""
    groups: list[list[int]] = []
    for x in range(rows.shape[0]):
        for g in groups:
            if np.max(np.abs(rows[g[0]] - rows[x])) <= tol:
                g.append(x)
                break
        else:
            groups.append([x])
    return groups


def merge_equivalent_rows(sys: System, tol: float = 1e-12) -> Merge:
    """Group inputs whose channel rows coincide; priors of a group are summed.

    The representative row of each group is that of its first member.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    groups = distinct_row_groups(sys.rows, tol)
    mapping = [0] * sys.n_x
    for gi, g in enumerate(groups):
        for x in g:
            mapping[x] = gi
    if len(groups) == sys.n_x:
        return Merge(sys, tuple(mapping))
    prior = np.array([sys.q[g].sum() for g in groups])
    rows = np.array([sys.rows[g[0]] for g in groups])
    labels = tuple("+".join(sys.x_labels[x] for x in g) for g in groups)
    merged = System(ProbVec(prior / prior.sum()), Channel(rows), labels, sys.y_labels)
    return Merge(merged, tuple(mapping))


def system_from_dict(doc: dict) -> System:
    try:
        prior, channel = doc["prior"], doc["channel"]
    except KeyError as exc:
        raise ShapeMismatch(f"system document is missing key {exc}") from None
    return System(
        ProbVec(np.asarray(prior, dtype=float)),
        Channel(np.asarray(channel, dtype=float)),
        tuple(doc["x_labels"]) if doc.get("x_labels") else None,
        tuple(doc["y_labels"]) if doc.get("y_labels") else None,
    )


def system_to_dict(sys: System) -> dict:
    return {
        "prior": sys.q.tolist(),
        "channel": sys.rows.tolist(),
        "x_labels": list(sys.x_labels),
        "y_labels": list(sys.y_labels),
    }


def load_system(path: str | PathLike) -> System:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def save_system(sys: System, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(system_to_dict(sys), fh, indent=2)
        fh.write("\n")
