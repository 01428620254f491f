"""Command-line front end.

CSV is the primary output. SVG plots are drawn from the same rows that go
into the CSV, so a plot never shows anything the table does not.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys as _sys
from pathlib import Path

import numpy as np

from . import adversary, axioms, chernoff, composition
from .builtin import BUILTIN
from .errors import LeakageError
from .metrics import MetricSpec, f_batch, global_leakage, information_distribution, information_values
from .prob_core import load_system, merge_equivalent_rows, posterior_from_counts, system_to_dict

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(_sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[int]:
    """``a..b[:step]`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            a, b = (int(v) for v in span.split(".."))
            step = int(step) if step else 1
            if step < 1 or b < a:
                raise ValueError
            return list(range(a, b + 1, step))
        out = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n-list {text!r}; expected a..b[:step] or a,b,c")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise argparse.ArgumentTypeError(f"n-list {text!r} is not strictly increasing")
    return out


def parse_window(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window {text!r}; expected a..b")
    if b <= a:
        raise argparse.ArgumentTypeError(f"window {text!r} is empty")
    return a, b


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _json_error(source: str, exc: json.JSONDecodeError) -> InputError:
    return InputError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}")


def read_system(arg: str):
    if arg in BUILTIN and not Path(arg).exists():
        return BUILTIN[arg]()
    path = Path(arg)
    if not path.is_file():
        raise InputError(f"{arg}: no such file")
    try:
        return load_system(path)
    except json.JSONDecodeError as exc:
        raise _json_error(arg, exc)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{arg}: malformed system document ({exc})")
    except LeakageError as exc:
        raise InputError(f"{arg}: {exc}")


def read_metric(arg: str) -> MetricSpec:
    text, source = arg, "--metric"
    if not arg.lstrip().startswith("{"):
        path = Path(arg)
        if not path.is_file():
            raise InputError(f"{arg}: no such file (inline metrics must be JSON objects)")
        text, source = path.read_text(), arg
    try:
        return MetricSpec.parse(text)
    except json.JSONDecodeError as exc:
        raise _json_error(source, exc)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{source}: malformed metric ({exc})")
    except LeakageError as exc:
        raise InputError(f"{source}: {exc}")


# -- output -------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _svg_path(args) -> Path:
    out = Path(args.out)
    return out if args.format == "svg" else out.with_suffix(".svg")


def emit(args, header, rows, plot=None) -> None:
    if args.format in ("svg", "both") and not args.out:
        raise InputError("--format svg/both needs --out")
    if args.format in ("csv", "both"):
        text = _csv_text(header, rows)
        if args.out:
            Path(args.out).write_text(text)
        else:
            _sys.stdout.write(text)
    if args.format in ("svg", "both") and plot is not None:
        _save_svg(plot, _svg_path(args))


def _save_svg(draw, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "pointleak", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _step_plot(ax, series, xlabel="leakage (bits)"):
    for label, values, cdf in series:
        ax.step(values, cdf, where="post", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.05)
    ax.legend()


# -- subcommands --------------------------------------------------------------


def cmd_leak(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    if args.observe:
        labels = list(sys_.y_labels)
        obs = [s for s in args.observe.split(",") if s]
        unknown = [s for s in obs if s not in labels]
        if unknown:
            raise InputError(f"unknown output label {unknown[0]!r}; known: {labels}")
        merged = merge_equivalent_rows(sys_).system
        counts = np.bincount([labels.index(s) for s in obs], minlength=sys_.n_y)
        post = posterior_from_counts(merged, counts)
        value = float(f_batch(m, np.asarray(post)[None, :], merged.q)[0])
        emit(args, ["observation", "metric", "leakage_bits"], [[" ".join(obs), m.name, value]])
    elif args.glob:
        n = args.n
        value = global_leakage(m, sys_) if n == 1 else composition.exact_global_leakage(m, sys_, n)
        emit(args, ["n", "metric", "global_leakage_bits"], [[n, m.name, value]])
    else:
        table = composition.TypeTable.build(merge_equivalent_rows(sys_).system, args.n)
        vals = f_batch(m, table.post, table.system.q)
        rows = [[" ".join(map(str, c)), p, v] for c, p, v in zip(table.counts, table.prob, vals)]
        emit(args, ["type", "prob", "leakage_bits"], rows)
    return EXIT_OK


def cmd_distribution(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    d = composition.exact_pointwise_distribution(m, sys_, args.n)
    cdf = np.cumsum(d.probs)
    rows = list(zip(d.values, d.probs, cdf))

    def plot(ax):
        _step_plot(ax, [(f"n={args.n}", d.values, cdf)])

    emit(args, ["value_bits", "prob", "cdf"], rows, plot)
    return EXIT_OK


def cmd_limit(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    merged = merge_equivalent_rows(sys_).system
    limit = composition.global_limit(m, sys_)
    info = information_values(m, merged.q)
    rows = [[lab, q, v, limit] for lab, q, v in zip(merged.x_labels, merged.q, info)]
    d = information_distribution(m, merged.q)

    def plot(ax):
        _step_plot(ax, [("I_X", d.values, np.cumsum(d.probs))])

    emit(args, ["x", "prior", "information_bits", "global_limit_bits"], rows, plot)
    return EXIT_OK


def cmd_compose(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    table = composition.composition_table(m, sys_, args.ns)
    header = ["n", "metric", "global_leakage_bits", "global_limit_bits", "gap_bits", "l1_to_information_cdf"]
    rows = [[getattr(r, h) for h in header] for r in table]

    def plot(ax):
        ns = [r[0] for r in rows]
        for col, label in ((4, "global gap"), (5, "CDF L1 distance")):
            pts = [(n, r[col]) for n, r in zip(ns, rows) if r[col] > 0]
            if pts:
                ax.semilogy(*zip(*pts), marker="o", ms=3, label=label)
        ax.set_xlabel("n")
        ax.set_ylabel("bits")
        ax.legend()

    emit(args, header, rows, plot)
    return EXIT_OK


def cmd_rate(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    rep = chernoff.rate_experiment(m, sys_, args.ns, args.mode, args.window)
    lo, hi = rep.window
    header = ["metric", "mode", "n", "gap_bits", "in_window", "fitted_slope", "intercept", "r_squared", "c_min", "relative_error"]
    rows = [
        [rep.metric, rep.mode, n, g, int(lo <= n <= hi), rep.fitted_slope, rep.fit.intercept,
         rep.fit.r_squared, rep.c_min, rep.relative_error]
        for n, g in zip(rep.n_values, rep.gaps)
    ]

    def plot(ax):
        pts = [(r[2], r[3]) for r in rows if r[3] > 0]
        ax.semilogy(*zip(*pts), "o", ms=3, label="gap")
        n = np.array([r[2] for r in rows if r[4]], dtype=float)
        ax.semilogy(n, 2.0 ** (rows[0][6] + rows[0][5] * n), label=f"fit, slope {rows[0][5]:.4f}")
        ax.semilogy(n, 2.0 ** (rows[0][6] + rows[0][5] * n[0] - rows[0][8] * (n - n[0])), "--",
                    label=f"slope -C = {-rows[0][8]:.4f}")
        ax.set_xlabel("n")
        ax.set_ylabel("gap (bits)")
        ax.legend()

    emit(args, header, rows, plot)
    return EXIT_OK


def cmd_chernoff(args) -> int:
    sys_ = read_system(args.system)
    res = chernoff.min_pairwise_chernoff(sys_.channel)
    labels = ["+".join(sys_.x_labels[i] for i in g) for g in res.groups]
    rows = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            c = res.matrix[i, j]
            rows.append([labels[i], labels[j], c, int(abs(c - res.value) <= 1e-12)])
    emit(args, ["x", "x_prime", "chernoff_bits", "is_min"], rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    q = merge_equivalent_rows(sys_).system.q
    cfg = axioms.AxiomConfig(seed=args.seed)
    report = axioms.verify_metric(m, q, cfg).merge(axioms.check_data_processing(m, sys_, seed=args.seed))
    print(report.table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.strict and report.failed:
        return EXIT_CHECK
    return EXIT_OK


def cmd_simulate(args) -> int:
    sys_, m = read_system(args.system), read_metric(args.metric)
    ns = args.ns if args.ns else [args.n]
    rows, series = [], []
    for n in ns:
        cfg = adversary.SimulationConfig(m, n, args.trials, args.seed)
        emp = adversary.simulate_empirical_cdf(sys_, cfg)
        exact = composition.exact_pointwise_distribution(m, sys_, n)
        ecdf = np.cumsum(emp.probs)
        rows.extend([n, v, c, exact.cdf(v)] for v, c in zip(emp.values, ecdf))
        series.append((f"empirical n={n}", emp.values, ecdf))

    def plot(ax):
        merged = merge_equivalent_rows(sys_).system
        info = information_distribution(m, merged.q)
        _step_plot(ax, series + [("I_X", info.values, np.cumsum(info.probs))])

    emit(args, ["n", "value_bits", "empirical_cdf", "exact_cdf"], rows, plot)
    return EXIT_OK


def cmd_examples(args) -> int:
    text = json.dumps(system_to_dict(BUILTIN[args.which]()), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        _sys.stdout.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output path (CSV; the SVG goes next to it)")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
    common.add_argument("--threads", type=_positive, default=1,
                        help="parallelism cap (computations are vectorised in one thread)")
    common.add_argument("-v", "--verbose", action="store_true")

    sysarg = _Parser(add_help=False)
    sysarg.add_argument("--system", required=True,
                        help="system JSON file, or the name of a built-in system (survey, ternary)")
    sysarg.add_argument("--metric", default='{"kind": "maximal_leakage"}',
                        help="metric JSON file or inline JSON object")

    p = _Parser(prog="pointleak", description="Pointwise and global information leakage under composition.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("leak", parents=[common, sysarg], help="pointwise leakage per type, or global leakage")
    s.add_argument("--n", type=_nonneg, default=1)
    s.add_argument("--global", dest="glob", action="store_true", help="report the global leakage instead")
    s.add_argument("--observe", help="comma-separated output labels of one observed sequence")
    s.set_defaults(func=cmd_leak)

    s = sub.add_parser("distribution", parents=[common, sysarg], help="exact distribution of L_n")
    s.add_argument("--n", type=_nonneg, default=1)
    s.set_defaults(func=cmd_distribution)

    s = sub.add_parser("limit", parents=[common, sysarg], help="information values and the global limit")
    s.set_defaults(func=cmd_limit)

    s = sub.add_parser("compose", parents=[common, sysarg], help="gap table over a list of n")
    s.add_argument("--ns", type=parse_range, default=parse_range("1..30"))
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("rate", parents=[common, sysarg], help="fit the decay rate and compare with -C")
    s.add_argument("--ns", type=parse_range, default=parse_range("60..200:10"))
    s.add_argument("--window", type=parse_window, default=chernoff.DEFAULT_WINDOW)
    s.add_argument("--mode", choices=("global_gap", "pointwise_l1"), default="global_gap")
    s.set_defaults(func=cmd_rate)

    s = sub.add_parser("chernoff", parents=[common], help="pairwise Chernoff information of the channel rows")
    s.add_argument("--system", required=True)
    s.set_defaults(func=cmd_chernoff)

    s = sub.add_parser("verify", parents=[common, sysarg], help="axiom and data-processing checks")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--strict", action="store_true", help="exit 2 if any check fails")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common, sysarg], help="Monte Carlo empirical CDFs of L_n")
    s.add_argument("--n", type=_nonneg, default=10)
    s.add_argument("--ns", type=parse_range)
    s.add_argument("--trials", type=_positive, default=100_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("examples", parents=[common], help="write a built-in system as JSON")
    s.add_argument("--which", choices=sorted(BUILTIN), default="ternary")
    s.set_defaults(func=cmd_examples)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, LeakageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT


def main() -> None:
    raise SystemExit(run())
