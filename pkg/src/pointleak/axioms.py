"""Numerical checks of the pointwise-leakage axioms and global constraints.

The checks sample; a pass means no violation was found in the samples
drawn, not that the property is proven. Every report is a deterministic
function of the metric, prior, configuration and seed.

``m`` may be a :class:`MetricSpec` or any callable ``f(p, q) -> float``
(useful for planted-violation fixtures).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import InfiniteLeakage, NumericallySingular, ShapeMismatch
from .metrics import MetricSpec, f_batch, global_leakage, h_batch
from .prob_core import Channel, System, as_array

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
VALUE_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    status: str
    samples_used: int
    tolerance: float
    witness: dict | None = None
    note: str = ""


@dataclass
class AxiomReport:
    metric: str
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def add(self, result: CheckResult) -> None:
        self.checks[result.name] = result

    @property
    def passed(self) -> bool:
        return all(c.status == PASS for c in self.checks.values())

    @property
    def failed(self) -> bool:
        return any(c.status == FAIL for c in self.checks.values())

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        out = AxiomReport(self.metric, dict(self.checks))
        out.checks.update(other.checks)
        return out

    def to_dict(self) -> dict:
        return {"metric": self.metric, "checks": [asdict(c) for c in self.checks.values()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)

    def table(self) -> str:
        lines = [f"metric: {self.metric}", f"{'check':<25}{'status':<14}{'samples':>8}  note"]
        for c in self.checks.values():
            lines.append(f"{c.name:<25}{c.status:<14}{c.samples_used:>8}  {c.note}")
        return "\n".join(lines)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


@dataclass(frozen=True)
class AxiomConfig:
    a3_trials: int = 200
    a5_directions: int = 100
    a5_eps: tuple[float, ...] = (1e-3, 1e-4)
    global_max_samples: int = 500
    seed: int = 0


def _name(m) -> str:
    return m.name if isinstance(m, MetricSpec) else getattr(m, "__name__", "custom")


def _f_rows(m) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if isinstance(m, MetricSpec):
        return lambda P, q: f_batch(m, P, q)

    def rows(P, q):
        return np.array([m(p, q) for p in np.atleast_2d(P)], dtype=float)

    return rows


def _h_rows(m) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if isinstance(m, MetricSpec):
        return lambda P, q: h_batch(m, P, q)
    return _f_rows(m)


def _random_points(rng, k: int, size: int) -> np.ndarray:
    # half from the flat Dirichlet, half from a sparse one that crowds the faces
    flat = rng.dirichlet(np.ones(k), size=size - size // 2)
    sparse = rng.dirichlet(np.full(k, 0.3), size=size // 2)
    return np.vstack([flat, sparse])


def _tied_max(q: np.ndarray) -> bool:
    top = q.max()
    return int(np.sum(q >= top - 1e-12)) > 1


def check_axioms(m, q, cfg: AxiomConfig | None = None) -> AxiomReport:
    """Check A1-A5 and the global-maximum corollary for f(., q)."""
    cfg = cfg or AxiomConfig()
    q = as_array(q)
    if np.any(q <= 0):
        raise ValueError("axiom checks need a strictly positive prior")
    k = q.size
    f = _f_rows(m)
    rng = np.random.default_rng(cfg.seed)
    E = np.eye(k)
    fe = f(E, q)
    report = AxiomReport(_name(m))

    # A1
    v = float(f(q[None, :], q)[0])
    ok = abs(v) <= VALUE_TOL
    report.add(CheckResult("A1_identity", PASS if ok else FAIL, 1, VALUE_TOL,
                           None if ok else {"P": q, "Q": q, "f": v}, f"f(Q,Q) = {v:.3g}"))

    # A2
    bad = [i for i in range(k) if not fe[i] > 0]
    report.add(CheckResult(
        "A2_positive_extremes", FAIL if bad else PASS, k, 0.0,
        {"i": bad[0], "P": E[bad[0]], "Q": q, "f": fe[bad[0]]} if bad else None,
        "exhaustive over extreme points",
    ))

    # A3
    witness = None
    for t in range(cfg.a3_trials):
        j = int(rng.integers(2, max(k, 2) + 1))
        Ps = _random_points(rng, k, j)
        lam = rng.dirichlet(np.ones(j))
        mix = lam @ Ps
        lhs = float(f(mix[None, :], q)[0])
        rhs = float(np.max(f(Ps, q)))
        if witness is None and not lhs <= rhs + VALUE_TOL:
            witness = {"trial": t, "Ps": Ps, "lambdas": lam, "f_mix": lhs, "max_f": rhs}
    report.add(CheckResult(
        "A3_quasiconvex", FAIL if witness else PASS, cfg.a3_trials, VALUE_TOL, witness,
        f"no violation found in {cfg.a3_trials} samples" if not witness else "",
    ))

    # A4
    witness = None
    for i in range(k):
        for j in range(k):
            if i != j and q[i] >= q[j] and not fe[i] <= fe[j] + VALUE_TOL and witness is None:
                witness = {"i": i, "j": j, "f_Ei": fe[i], "f_Ej": fe[j], "Q": q}
    report.add(CheckResult("A4_rarer_leaks_more", FAIL if witness else PASS, k * (k - 1),
                           VALUE_TOL, witness, "exhaustive over index pairs"))

    # A5
    report.add(_check_local_max(f, q, fe, rng, cfg, m))

    # global maximum sits at the least likely extreme point
    Ps = _random_points(rng, k, cfg.global_max_samples)
    vals = f(Ps, q)
    top = float(np.max(fe))
    witness = None
    viol = np.flatnonzero(~(vals <= top + VALUE_TOL))
    if viol.size:
        witness = {"P": Ps[viol[0]], "f": vals[viol[0]], "max_f_extreme": top}
    rarest = np.flatnonzero(q <= q.min() + 1e-12)
    if witness is None and not np.max(fe[rarest]) >= top - VALUE_TOL:
        witness = {"argmax_extreme": int(np.argmax(fe)), "argmin_prior": rarest.tolist()}
    report.add(CheckResult("global_max", FAIL if witness else PASS,
                           cfg.global_max_samples, VALUE_TOL, witness,
                           "" if witness else f"no violation found in {cfg.global_max_samples} samples"))
    return report


def _check_local_max(f, q, fe, rng, cfg: AxiomConfig, m) -> CheckResult:
    k = q.size
    E = np.eye(k)
    dirs = rng.dirichlet(np.ones(k), size=cfg.a5_directions)
    fail_w = partial_w = None
    for i in range(k):
        candidates = np.vstack([dirs, np.delete(E, i, axis=0)])
        violated = np.zeros((candidates.shape[0], len(cfg.a5_eps)), dtype=bool)
        for e_idx, eps in enumerate(cfg.a5_eps):
            pts = E[i] + eps * (candidates - E[i])
            violated[:, e_idx] = ~(f(pts, q) < fe[i])
        every = np.flatnonzero(violated.all(axis=1))
        some = np.flatnonzero(violated.any(axis=1))
        if every.size and fail_w is None:
            fail_w = {"i": i, "U": candidates[every[0]], "eps": list(cfg.a5_eps)}
        if some.size and partial_w is None:
            partial_w = {"i": i, "U": candidates[some[0]], "eps": list(cfg.a5_eps)}
    used = k * (cfg.a5_directions + k - 1)
    if fail_w:
        return CheckResult("A5_strict_local_max", FAIL, used, 0.0, fail_w,
                           "not strictly below f(E_i) at any tested scale")
    if partial_w:
        return CheckResult("A5_strict_local_max", INCONCLUSIVE, used, 0.0, partial_w,
                           "violated only at the larger tested scale")
    if isinstance(m, MetricSpec) and m.kind in ("min_entropy", "g_leakage") and _tied_max(q):
        return CheckResult("A5_strict_local_max", INCONCLUSIVE, used, 0.0, None,
                           "prior has a tied maximum; strictness not established")
    return CheckResult("A5_strict_local_max", PASS, used, 0.0, None,
                       f"no violation found in {used} directions")


def _directional(f, q, base: np.ndarray, d: np.ndarray, step: float) -> float:
    """Derivative of f(., q) at ``base`` along the feasible chord ``d``.

    Central difference centred at ``base + step * d``, so both stencil points
    stay inside the simplex; f need not be smooth (or even defined) outside it.
    """
    f0, f2 = f(np.vstack([base, base + 2 * step * d]), q)
    if not (np.isfinite(f0) and np.isfinite(f2)):
        raise NumericallySingular(f"f is not finite near {base.tolist()}")
    return float((f2 - f0) / (2 * step))


def check_derivative_property(
    m, q, n_directions: int = 100, seed: int = 0, step: float = 1e-6, margin: float = 1e-8
) -> AxiomReport:
    """Negative directional derivative at every extreme point, in sampled
    directions and along every edge of the simplex (the pairwise form)."""
    q = as_array(q)
    if np.any(q <= 0):
        raise ValueError("derivative checks need a strictly positive prior")
    k = q.size
    f = _f_rows(m)
    rng = np.random.default_rng(seed)
    E = np.eye(k)
    dirs = rng.dirichlet(np.ones(k), size=n_directions)
    report = AxiomReport(_name(m))
    try:
        w_dir = w_pair = None
        for i in range(k):
            for u in dirs:
                g = _directional(f, q, E[i], u - E[i], step)
                if w_dir is None and not g < -margin:
                    w_dir = {"i": i, "U": u, "derivative": g}
            for j in range(k):
                if j == i:
                    continue
                g = _directional(f, q, E[i], E[j] - E[i], step)
                if w_pair is None and not g < -margin:
                    w_pair = {"i": i, "j": j, "difference": g}
    except NumericallySingular as exc:
        for name in ("derivative_directional", "derivative_pairwise"):
            report.add(CheckResult(name, INCONCLUSIVE, 0, margin, None, str(exc)))
        return report
    report.add(CheckResult("derivative_directional", FAIL if w_dir else PASS, k * n_directions,
                           margin, w_dir, f"step {step:g}"))
    report.add(CheckResult("derivative_pairwise", FAIL if w_pair else PASS, k * (k - 1),
                           margin, w_pair, "d_j f - d_i f at E_i"))
    return report


def check_h_convexity(m, q, trials: int = 200, seed: int = 0) -> AxiomReport:
    """Sampled midpoint-style convexity test of h(., q) (or of the callable itself)."""
    q = as_array(q)
    h = _h_rows(m)
    rng = np.random.default_rng(seed)
    k = q.size
    P1 = _random_points(rng, k, trials)
    P2 = _random_points(rng, k, trials)
    lam = rng.uniform(size=trials)
    mix = lam[:, None] * P1 + (1 - lam[:, None]) * P2
    lhs = h(mix, q)
    rhs = lam * h(P1, q) + (1 - lam) * h(P2, q)
    viol = np.flatnonzero(~(lhs <= rhs + VALUE_TOL))
    witness = None
    if viol.size:
        t = viol[0]
        witness = {"P1": P1[t], "P2": P2[t], "lambda": lam[t], "h_mix": lhs[t], "chord": rhs[t]}
    report = AxiomReport(_name(m))
    report.add(CheckResult("h_convex", FAIL if witness else PASS, trials, VALUE_TOL, witness,
                           f"no violation found in {trials} samples" if not witness else ""))
    return report


def check_data_processing(
    m: MetricSpec, sys: System, garble: Channel | None = None, n_trials: int = 20, seed: int = 0
) -> AxiomReport:
    """Garbling Y cannot increase global leakage, and independence gives zero."""
    report = AxiomReport(m.name)
    base = global_leakage(m, sys)
    rng = np.random.default_rng(seed)
    garbles: list[Channel] = []
    if garble is not None:
        if garble.n_inputs != sys.n_y:
            raise ShapeMismatch(f"garble has {garble.n_inputs} rows, |Y| = {sys.n_y}")
        garbles.append(garble)
    for _ in range(n_trials):
        nz = int(rng.integers(1, sys.n_y + 2))
        garbles.append(Channel(rng.dirichlet(np.full(nz, 0.5), size=sys.n_y)))
    witness = None
    for t, g in enumerate(garbles):
        try:
            z = global_leakage(m, sys.with_channel(sys.channel.compose(g)))
        except InfiniteLeakage:
            continue
        if witness is None and not z <= base + VALUE_TOL:
            witness = {"garble_index": t, "garble": g.rows, "leak_Z": z, "leak_Y": base}
    report.add(CheckResult("data_processing", FAIL if witness else PASS, len(garbles), VALUE_TOL,
                           witness, f"L(X->Y) = {base:.6g} bits"))

    indep_rows = np.tile(sys.output_distribution(), (sys.n_x, 1))
    v = global_leakage(m, sys.with_channel(Channel(indep_rows)))
    ok = abs(v) <= VALUE_TOL
    report.add(CheckResult("independence", PASS if ok else FAIL, 1, VALUE_TOL,
                           None if ok else {"leakage": v}, f"L = {v:.3g}"))
    return report


def verify_metric(m: MetricSpec, q, cfg: AxiomConfig | None = None) -> AxiomReport:
    """Full pointwise suite: axioms, derivative property and h convexity."""
    cfg = cfg or AxiomConfig()
    report = check_axioms(m, q, cfg)
    report = report.merge(check_derivative_property(m, q, seed=cfg.seed))
    return report.merge(check_h_convexity(m, q, seed=cfg.seed))
