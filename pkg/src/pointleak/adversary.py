"""The guessing adversary: MAP estimates, exact Bayes error and simulation.

Simulation draws come from numpy's Philox4x64-10 counter-based generator.
Trial ``t`` under seed ``s`` uses key ``s`` and a counter starting at
``(0, 0, 0, t)``, so each trial's draws are fixed regardless of how many
trials run or in what order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .chernoff import DEFAULT_WINDOW, RateReport, fit_decay_rate, min_pairwise_chernoff
from .composition import TIE_TOL, exact_global_leakage, type_matrix
from .errors import AllLikelihoodsZero
from .metrics import LeakageDistribution, MetricSpec, f_batch
from .prob_core import System, log_joint, log_posteriors, merge_equivalent_rows

MIN_ENTROPY = MetricSpec("min_entropy")


@dataclass(frozen=True)
class SimulationConfig:
    metric: MetricSpec
    n: int
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def map_estimate(sys: System, t) -> int:
    """Index maximising prior times likelihood of the type ``t``; ties go to
    the smallest index."""
    counts = np.asarray(getattr(t, "counts", t), dtype=np.int64)
    w = log_joint(sys, counts[None, :], multinomial=False)[0]
    best = w.max()
    if not np.isfinite(best):
        raise AllLikelihoodsZero(f"type {counts.tolist()} is impossible under every input")
    return int(np.argmax(w >= best - TIE_TOL))


def _map_rows(w: np.ndarray) -> np.ndarray:
    return np.argmax(w >= w.max(axis=1, keepdims=True) - TIE_TOL, axis=1)


def bayes_error(sys: System, n: int) -> float:
    """Exact error probability of the MAP guess of X from n observations.

    Summed as the joint mass of every non-guessed input, which keeps tiny
    errors accurate instead of forming 1 - (something close to 1).
    """
    w = log_joint(sys, type_matrix(n, sys.n_y))
    w = w[np.isfinite(w).any(axis=1)]
    guess = _map_rows(w)
    p = np.exp(w)
    p[np.arange(p.shape[0]), guess] = 0.0
    return math.fsum(p.ravel())


class IdentityCheck(NamedTuple):
    lhs: float
    rhs: float
    diff: float


def min_entropy_identity(sys: System, n: int) -> IdentityCheck:
    """Min-entropy global leakage against log2((1 - P_e^(n)) / (1 - P_e^(0)))."""
    lhs = exact_global_leakage(MIN_ENTROPY, sys, n, merge=False)
    rhs = math.log2((1.0 - bayes_error(sys, n)) / (1.0 - bayes_error(sys, 0)))
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


def simulate_counts(sys: System, n: int, trials: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Secret indices and output type counts for each trial."""
    u = np.empty((trials, n + 1))
    for t in range(trials):
        u[t] = trial_generator(seed, t).random(n + 1)
    cq = np.cumsum(sys.q)
    x = np.minimum(np.searchsorted(cq, u[:, 0] * cq[-1], side="right"), sys.n_x - 1)
    crow = np.cumsum(sys.rows, axis=1)
    crow /= crow[:, -1:]
    bounds = crow[x, :-1]
    y = (u[:, 1:, None] >= bounds[:, None, :]).sum(axis=2)
    counts = np.zeros((trials, sys.n_y), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(trials), n), y.ravel()), 1)
    return x, counts


def simulate_leakage(sys: System, cfg: SimulationConfig) -> np.ndarray:
    """Pointwise leakage of each simulated trial, in trial order."""
    merged = merge_equivalent_rows(sys).system
    if cfg.n == 0:
        # no observations: the posterior is the prior itself
        return np.full(cfg.trials, f_batch(cfg.metric, merged.q[None, :], merged.q)[0])
    _, counts = simulate_counts(merged, cfg.n, cfg.trials, cfg.seed)
    uniq, inv = np.unique(counts, axis=0, return_inverse=True)
    post = np.exp(log_posteriors(log_joint(merged, uniq, multinomial=False)))
    return f_batch(cfg.metric, post, merged.q)[inv.ravel()]


def simulate_empirical_cdf(sys: System, cfg: SimulationConfig) -> LeakageDistribution:
    return LeakageDistribution.from_samples(simulate_leakage(sys, cfg))


def error_exponent_experiment(
    sys: System, ns: Sequence[int], window: tuple[int, int] = DEFAULT_WINDOW
) -> RateReport:
    """Fit the decay of -log2(1 - P_e^(n)) and compare it with -C."""
    ns = [int(n) for n in ns]
    gaps = [-math.log1p(-bayes_error(sys, n)) / math.log(2.0) for n in ns]
    fit = fit_decay_rate(zip(ns, gaps), window)
    c = min_pairwise_chernoff(sys.channel).value
    return RateReport("bayes_error", "error_exponent", tuple(ns), tuple(gaps), tuple(window), fit, c)
