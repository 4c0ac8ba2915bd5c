"""Command-line front end.

Exit codes: 0 success, 1 a Degenerate verdict under --strict, 2 configuration
error, 3 numerical failure.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

import numpy as np

from . import __version__, rod, scalar, spectral
from .config import RunConfig, load_problem, read_toml
from .errors import ConfigurationError, NumericalError, VarstabError
from .jacobi import Tolerances, classify
from .verdict import CSV_FIELDS, Outcome, Verdict, format_number

JOBS_ENV = "VARSTAB_JOBS"
GLOBAL_KEYS = ("format", "output", "jobs", "strict", "oracle", "pi2_units", "dump_config",
               "degenerate_tol", "dip_tol", "extremal_tol", "config", "func")
PI2 = math.pi ** 2


class Emission:
    """Result of one command: table or text plus the verdicts it contains."""

    def __init__(self, header=None, rows=None, blocks=None, verdicts=()):
        self.header = header
        self.rows = rows or []
        self.blocks = blocks or []
        self.verdicts = list(verdicts)

    def render(self, fmt: str) -> str:
        if fmt == "csv" and self.header is not None:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.header)
            for row in self.rows:
                w.writerow([format_number(v) for v in row])
            return buf.getvalue()
        if self.blocks:
            return "\n\n".join(self.blocks) + "\n"
        if self.header is None:
            return ""
        lines = [" ".join(self.header)]
        lines += [" ".join(format_number(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def _pmap(fn: Callable, items: list, jobs: int) -> list:
    """Ordered map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _verdict_block(title: Iterable[str], verdict: Verdict) -> str:
    return "\n".join(list(title) + [verdict.report()])


# ---------------------------------------------------------------------------
# rod


def _rod_point(item):
    alpha, beta, case, tol, oracle = item
    verdict = rod.classify_rod((alpha, beta), case, Tolerances(**tol))
    extra = ()
    if oracle:
        prob = rod.rod_problem(abs(alpha), beta, case)
        res = spectral.psi_negative_witness(prob, rod._straight_path(rod.DEFAULT_NODES))
        agree = res.negative == (verdict.outcome is Outcome.NOT_WEAK)
        if verdict.outcome is Outcome.DEGENERATE:
            agree = None
        extra = (res.eigenvalue, agree)
    return verdict.detached(), extra


def _tol_dict(t: Tolerances) -> dict:
    return {"degenerate": t.degenerate, "dip": t.dip, "extremal": t.extremal, "root_xtol": t.root_xtol}


def cmd_rod_classify(cfg: RunConfig) -> Emission:
    o = cfg.options
    alphas, betas = _floats(o["alpha"]), _floats(o["beta"])
    items = [(a, b, o["case"], _tol_dict(cfg.tolerances), cfg.oracle) for a in alphas for b in betas]
    results = _pmap(_rod_point, items, cfg.jobs)
    unit = PI2 if cfg.pi2_units else 1.0
    header = ["alpha", "beta", "case"] + list(CSV_FIELDS)
    if cfg.oracle:
        header += ["oracle_eigenvalue", "oracle_agrees"]
    rows, blocks = [], []
    for (a, b, case, _, _), (v, extra) in zip(items, results):
        rows.append([a, b / unit, case] + v.csv_row() + list(extra))
        title = [f"case: {case}", f"alpha: {format_number(a)}",
                 f"beta: {format_number(b)}" + (f" ({format_number(b / PI2)} pi^2)" if cfg.pi2_units else "")]
        if extra:
            title.append(f"oracle eigenvalue: {format_number(extra[0])} (agrees: {extra[1]})")
        blocks.append(_verdict_block(title, v))
    return Emission(header, rows, blocks, [v for v, _ in results])


def _borderline_point(item):
    case, alpha, method, pi2, tol = item
    header, rows = rod.emit_diagram(case, alpha, alpha, 1, method, pi2, Tolerances(**tol))
    return header, rows[0]


def cmd_rod_borderline(cfg: RunConfig) -> Emission:
    o = cfg.options
    samples = int(o["samples"])
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    alphas = np.linspace(float(o["alpha_min"]), float(o["alpha_max"]), samples)
    items = [(o["case"], float(a), o["method"], cfg.pi2_units, _tol_dict(cfg.tolerances)) for a in alphas]
    results = _pmap(_borderline_point, items, cfg.jobs)
    header = results[0][0]
    return Emission(header, [r for _, r in results])


def cmd_rod_table1(cfg: RunConfig) -> Emission:
    rows = rod.emit_table1()
    em = Emission(list(rod.TABLE1_COLUMNS), [[r[c] for c in rod.TABLE1_COLUMNS] for r in rows])
    em.blocks = [rod.format_table1(rows)]
    return em


# ---------------------------------------------------------------------------
# field


def cmd_field_classify(cfg: RunConfig) -> Emission:
    from . import field

    if cfg.problem is None:
        raise ConfigurationError("field classify needs --problem")
    problem, path, _ = load_problem(cfg.problem)
    o = cfg.options
    eta = o.get("eta")
    fld = None
    if o.get("tube"):
        mode = o.get("mode", "auto")
        fld = field.build_field(problem, path, field.auto_modes(problem)[0] if mode == "auto" else mode)
    verdict = field.classify_strong(problem, path, o.get("mode", "auto"), fld=fld, eta=eta,
                                    tolerances=cfg.tolerances, q_range=o.get("q_range", "global"))
    if fld is not None:
        with open(o["tube"], "w", newline="\n") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "alpha", "phi", "phi_x"])
            for row in fld.csv_rows(stride=int(o.get("tube_stride", 10))):
                w.writerow([format_number(v) for v in row])
    blocks = [_verdict_block([f"lagrangian: {problem.lagrangian.name}",
                              f"interval: [{format_number(problem.a)}, {format_number(problem.b)}]"], verdict)]
    return Emission(list(CSV_FIELDS), [verdict.csv_row()], blocks, [verdict])


def cmd_jacobi_classify(cfg: RunConfig) -> Emission:
    if cfg.problem is None:
        raise ConfigurationError("jacobi classify needs --problem")
    problem, path, _ = load_problem(cfg.problem)
    verdict = classify(problem, path, cfg.tolerances)
    header, row = list(CSV_FIELDS), verdict.csv_row()
    title = []
    if cfg.oracle:
        res = spectral.psi_negative_witness(problem, path)
        header += ["oracle_eigenvalue"]
        row += [res.eigenvalue]
        title.append(f"oracle eigenvalue: {format_number(res.eigenvalue)}")
    return Emission(header, [row], [_verdict_block(title, verdict)], [verdict])


# ---------------------------------------------------------------------------
# scalar examples


def _elastica_rows(M, K, path, verdict, cross):
    u, p = path.values[:, 0], path.derivatives[:, 0]
    C0 = float(np.mean(p * p - 2 * M * np.cos(u)))
    row = [M, K, u[0], C0] + verdict.csv_row()
    return row + ([cross.outcome.value] if cross is not None else [])


def cmd_elastica_classify(cfg: RunConfig) -> Emission:
    o = cfg.options
    M, K, u0 = float(o["M"]), float(o["K"]), float(o["u0"])
    lag = scalar.elastica(M, K)
    path = scalar.shoot_extremal(lag, 0.0, 1.0, u0, K)
    miss = abs(path.derivatives[-1, 0] - K)
    if miss > scalar.NATURAL_TOL:
        raise ConfigurationError(f"u(0) = {u0:.10g} does not give a critical point "
                                 f"(|u'(1) - K| = {miss:.3g}); 'elastica scan' lists them")
    verdict = scalar.classify_elastica(M, K, path)
    cross = classify(scalar.elastica_problem(M, K), path, cfg.tolerances) if cfg.oracle else None
    header = ["M", "K", "u0", "C0"] + list(CSV_FIELDS) + (["jacobi"] if cross else [])
    title = [f"elastica M={format_number(M)} K={format_number(K)} u(0)={format_number(u0)}"]
    if cross is not None:
        title.append(f"jacobi test: {cross.outcome.value}")
    return Emission(header, [_elastica_rows(M, K, path, verdict, cross)],
                    [_verdict_block(title, verdict)], [verdict])


def cmd_elastica_scan(cfg: RunConfig) -> Emission:
    o = cfg.options
    M, K = float(o["M"]), float(o["K"])
    paths = scalar.elastica_scan(M, K, int(o.get("samples", 721)))
    header = ["M", "K", "u0", "C0"] + list(CSV_FIELDS) + ["jacobi"]
    rows, blocks, verdicts = [], [], []
    problem = scalar.elastica_problem(M, K)
    for path in paths:
        v = scalar.classify_elastica(M, K, path)
        cross = classify(problem, path, cfg.tolerances)
        rows.append(_elastica_rows(M, K, path, v, cross))
        blocks.append(_verdict_block([f"u(0) = {format_number(path.values[0, 0])}",
                                      f"jacobi test: {cross.outcome.value}"], v))
        verdicts.append(v)
    if not blocks:
        blocks = ["no critical points found"]
    return Emission(header, rows, blocks, verdicts)


def cmd_doublewell_classify(cfg: RunConfig) -> Emission:
    o = cfg.options
    variant, length = o["variant"], float(o["length"])
    verdict, path = scalar.classify_double_well_length(variant, length, o.get("end_slope"))
    min_slope = float(np.min(path.derivatives)) if path is not None else float("nan")
    header = ["variant", "length", "min_slope"] + list(CSV_FIELDS)
    title = [f"double-well {variant}, length {format_number(length)}",
             f"b* - a = {format_number(scalar.b_star(variant, o.get('end_slope')))}",
             f"min u' = {format_number(min_slope)}"]
    return Emission(header, [[variant, length, min_slope] + verdict.csv_row()],
                    [_verdict_block(title, verdict)], [verdict])


def cmd_phase_portrait(cfg: RunConfig) -> Emission:
    o = cfg.options
    example = o["example"]
    if example not in scalar.EXAMPLES:
        raise ConfigurationError(f"unknown example {example!r}")
    lag, level_fn = scalar.EXAMPLES[example](M=float(o.get("M", 1.0)), K=float(o.get("K", 0.0)))
    window = _floats(o.get("window", [-2 * math.pi, 2 * math.pi, -4.0, 4.0]))
    if len(window) != 4:
        raise ConfigurationError("window needs umin umax vmin vmax")
    portrait = scalar.sample_phase_portrait(lag, window, _floats(o.get("levels", [])),
                                            int(o.get("resolution", 401)), level_fn)
    em = Emission(["level", "branch", "u", "v"], list(portrait.csv_rows()))
    em.blocks = [em.render("csv").rstrip("\n")]
    return em


def _floats(values) -> list[float]:
    if isinstance(values, (int, float)):
        return [float(values)]
    return [float(v) for v in values]


COMMANDS: dict[tuple[str, ...], Callable[[RunConfig], Emission]] = {
    ("rod", "classify"): cmd_rod_classify,
    ("rod", "borderline"): cmd_rod_borderline,
    ("rod", "table1"): cmd_rod_table1,
    ("field", "classify"): cmd_field_classify,
    ("jacobi", "classify"): cmd_jacobi_classify,
    ("elastica", "classify"): cmd_elastica_classify,
    ("elastica", "scan"): cmd_elastica_scan,
    ("doublewell", "classify"): cmd_doublewell_classify,
    ("phase", "portrait"): cmd_phase_portrait,
}


# ---------------------------------------------------------------------------
# argument parsing


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigurationError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    return max(jobs, 1)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output and execution")
    g.add_argument("--format", choices=("report", "csv"), default="report")
    g.add_argument("--output", default="-", help="output file ('-' for stdout)")
    g.add_argument("--jobs", type=int, default=None,
                   help=f"worker processes (default from {JOBS_ENV}, else 1)")
    g.add_argument("--strict", action="store_true", help="exit 1 when a verdict is Degenerate")
    g.add_argument("--oracle", action="store_true", help="cross-check with a second method")
    g.add_argument("--pi2-units", action="store_true", help="print beta (and alpha/pi) in pi^2 units")
    g.add_argument("--dump-config", metavar="FILE", help="write the run configuration as TOML and stop")
    t = p.add_argument_group("tolerances")
    t.add_argument("--degenerate-tol", type=float, default=Tolerances.degenerate)
    t.add_argument("--dip-tol", type=float, default=Tolerances.dip)
    t.add_argument("--extremal-tol", type=float, default=Tolerances.extremal)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="varstab",
        description="Second-order tests (weak, strong, global minimality) for one-dimensional "
                    "variational problems, twisted-rod stability borderlines and scalar examples.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = parser.add_subparsers(dest="group", metavar="COMMAND", required=True)

    def leaf(sub, name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    g = top.add_parser("rod", help="twisted rod under end load").add_subparsers(dest="action", required=True)
    p = leaf(g, "classify", ("rod", "classify"), "classify the straight rod on an (alpha, beta) grid")
    p.add_argument("--alpha", type=float, nargs="+", required=True)
    p.add_argument("--beta", type=float, nargs="+", required=True)
    p.add_argument("--case", required=True, help="boundary case such as NN/NN or DD/ND")
    p = leaf(g, "borderline", ("rod", "borderline"), "sample the stability borderline g(alpha)")
    p.add_argument("--case", required=True)
    p.add_argument("--alpha-min", type=float, required=True)
    p.add_argument("--alpha-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--method", choices=("formula", "closed", "transcendental", "bisect"), default="formula")
    leaf(g, "table1", ("rod", "table1"), "borderlines of the free-left cases in pi^2 units")

    g = top.add_parser("field", help="fields of extremals").add_subparsers(dest="action", required=True)
    p = leaf(g, "classify", ("field", "classify"), "strong/global verdict from a field of extremals")
    p.add_argument("--problem", required=True, help="problem TOML file")
    p.add_argument("--mode", choices=("auto", "natural-left", "translation", "dirichlet-left", "mixed"),
                   default="auto")
    p.add_argument("--q-range", choices=("global", "weak"), default="global")
    p.add_argument("--eta", type=float, default=None, help="half-width of the weak q range")
    p.add_argument("--tube", default=None, help="write the field samples (x, alpha, phi, phi_x) here")
    p.add_argument("--tube-stride", type=int, default=10)

    g = top.add_parser("jacobi", help="weak test for a configured problem").add_subparsers(
        dest="action", required=True)
    p = leaf(g, "classify", ("jacobi", "classify"), "determinant and endpoint test")
    p.add_argument("--problem", required=True)

    g = top.add_parser("elastica", help="f = (p - K)^2/2 + M cos u on [0, 1]").add_subparsers(
        dest="action", required=True)
    p = leaf(g, "classify", ("elastica", "classify"), "classify the critical point starting at u(0) = u0")
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--u0", type=float, required=True)
    p = leaf(g, "scan", ("elastica", "scan"), "find and classify critical points with u(0) in [0, 2 pi]")
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=721)

    g = top.add_parser("doublewell", help="double-well Lagrangians").add_subparsers(dest="action", required=True)
    p = leaf(g, "classify", ("doublewell", "classify"), "classify the symmetric end-slope extremal")
    p.add_argument("--variant", choices=("a", "b"), required=True)
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--end-slope", type=float, default=None)

    g = top.add_parser("phase", help="phase portraits").add_subparsers(dest="action", required=True)
    p = leaf(g, "portrait", ("phase", "portrait"), "level curves of f - p f_p as CSV")
    p.add_argument("--example", choices=tuple(scalar.EXAMPLES), required=True)
    p.add_argument("--levels", type=float, nargs="+", required=True)
    p.add_argument("--window", type=float, nargs=4, metavar=("UMIN", "UMAX", "VMIN", "VMAX"),
                   default=[-2 * math.pi, 2 * math.pi, -4.0, 4.0])
    p.add_argument("--resolution", type=int, default=401)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--K", type=float, default=0.0)

    p = top.add_parser("run", help="execute a saved run configuration",
                       description="execute a configuration written by --dump-config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=("run",))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.func == ("run",):
        return RunConfig.load(args.config)
    options = {k: v for k, v in vars(args).items()
               if k not in GLOBAL_KEYS and k not in ("group", "action") and v is not None}
    problem = None
    if "problem" in options:
        problem = read_toml(options.pop("problem"))
    tol = Tolerances(degenerate=args.degenerate_tol, dip=args.dip_tol, extremal=args.extremal_tol)
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    return RunConfig(list(args.func), options, tol, args.format, args.output, jobs, args.strict,
                     args.oracle, args.pi2_units, problem)


def execute(cfg: RunConfig) -> tuple[str, list[Verdict]]:
    key = tuple(cfg.command)
    if key not in COMMANDS:
        raise ConfigurationError(f"unknown command {' '.join(key)!r}")
    em = COMMANDS[key](cfg)
    return em.render(cfg.format), em.verdicts


def _write(text: str, target: str) -> None:
    if target == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(target, "w", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        if getattr(args, "dump_config", None):
            _write(cfg.dumps(), args.dump_config)
            return 0
        text, verdicts = execute(cfg)
        _write(text, cfg.output)
    except ConfigurationError as exc:
        print(f"varstab: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        where = f" at x={exc.x:.10g}" if getattr(exc, "x", None) is not None else ""
        print(f"varstab: numerical failure{where}: {exc}", file=sys.stderr)
        return 3
    except VarstabError as exc:
        print(f"varstab: {exc}", file=sys.stderr)
        return 3
    if cfg.strict and any(v.outcome is Outcome.DEGENERATE for v in verdicts):
        print("varstab: Degenerate verdict under --strict", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
