"""Command-line front end: ``coboson chi|engine|sweep|hydrogen|selftest``.

Exit codes: 0 success, 2 usage error, 3 domain error.  Numbers are written
with 12 significant digits so output files are byte-stable.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine as eng
from .errors import CobosonError
from .schmidt import (
    BOHR_RADIUS,
    HYDROGEN_MASS,
    chi_table_dp,
    chi_table_for_chi2,
    chi_table_newton,
    geometric_distribution,
    geometric_power_sums,
    hydrogen_purity,
    ideal_boson_table,
    make_distribution,
    power_sums,
    trap_length,
    uniform_distribution,
    uniform_power_sums,
)
from .stats import two_particle_f0, two_particle_work

SWEEP_PARAMS = ("beta", "chi2", "N", "q", "d")
EXIT_USAGE = 2
EXIT_DOMAIN = 3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.12g}"


def _round(obj):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round(obj), sort_keys=True, indent=2) + "\n"


def dump_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_output(text: str, out: str | None) -> None:
    """Write atomically: a failed run never leaves a partial file behind."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".coboson-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _add_chi_source(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--uniform", type=int, metavar="D", help="d equal Schmidt weights")
    group.add_argument("--geometric", type=float, metavar="Q", help="weights proportional to q**n")
    group.add_argument("--weights", type=float, nargs="+", metavar="W", help="explicit weights")
    group.add_argument("--chi2", type=float, help="geometric-family table with this chi_2 (1 = ideal boson)")
    group.add_argument("--boson", action="store_true", help="ideal boson table chi_k = 1")


def _chi_from_args(args, nmax: int, method: str = "dp"):
    if args.uniform is not None:
        if method == "newton":
            return chi_table_newton(uniform_power_sums(args.uniform, nmax), nmax)
        return chi_table_dp(uniform_distribution(args.uniform), nmax)
    if args.geometric is not None:
        if method == "newton":
            return chi_table_newton(geometric_power_sums(args.geometric, nmax), nmax)
        return chi_table_dp(geometric_distribution(args.geometric), nmax)
    if args.weights is not None:
        dist = make_distribution(args.weights)
        if method == "newton":
            return chi_table_newton(power_sums(dist, nmax), nmax)
        return chi_table_dp(dist, nmax)
    if args.chi2 is not None:
        return chi_table_for_chi2(args.chi2, nmax)
    return ideal_boson_table(nmax)


def cmd_chi(args) -> str:
    if args.nmax < 1:
        raise UsageError("--nmax must be >= 1")
    if not any(v is not None and v is not False for v in (args.uniform, args.geometric, args.weights)):
        raise UsageError("chi needs one of --uniform, --geometric, --weights")
    table = _chi_from_args(args, args.nmax, args.method)
    if args.format == "json":
        return dump_json({"source": table.source, "chi": list(table.values)})
    rows = [(k, value, table.source) for k, value in enumerate(table.values)]
    return dump_csv(["k", "chi", "source"], rows)


def _engine_spec(n: int, beta: float, chi, args) -> eng.EngineSpec:
    return eng.EngineSpec(
        n=n,
        beta=beta,
        chi=chi,
        cutoff_tol=args.cutoff_tol,
        wall_policy=args.wall_policy,
    )


def _check_engine_range(n: int, beta: float) -> None:
    if not 1 <= n <= 4:
        raise UsageError(f"--n must be between 1 and 4, got {n}")
    if not 1e-4 <= beta <= 1e4:
        raise UsageError(f"--beta must lie in [1e-4, 1e4], got {beta}")


REPORT_DIAG_COLUMNS = ("modes_per_side", "truncation_estimate")


def report_row(report: eng.EngineReport, n_cols: int) -> list:
    f = list(report.f) + [0.0] * (n_cols + 1 - len(report.f))
    diag = [report.diagnostics.get(k) for k in REPORT_DIAG_COLUMNS]
    return [report.n, report.beta, report.chi2, *f, report.work, *diag]


def report_header(n_cols: int) -> list[str]:
    return ["N", "beta", "chi2", *(f"f_{m}" for m in range(n_cols + 1)), "work", *REPORT_DIAG_COLUMNS]


def cmd_engine(args) -> str:
    _check_engine_range(args.n, args.beta)
    chi = _chi_from_args(args, args.n)
    report = eng.total_work(_engine_spec(args.n, args.beta, chi, args))
    if args.format == "json":
        return dump_json(report.to_dict())
    return dump_csv(report_header(args.n), [report_row(report, args.n)])


@dataclass
class Axis:
    name: str
    values: list = field(default_factory=list)


def parse_axis(tokens: list[str]) -> Axis:
    """``NAME lin|log START STOP COUNT`` or ``NAME lin START STOP step=S``."""
    name, scale, start, stop, count = tokens
    if name not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {name!r}; choose from {SWEEP_PARAMS}")
    if scale not in ("lin", "log"):
        raise UsageError("axis scale must be 'lin' or 'log'")
    try:
        lo, hi = float(start), float(stop)
        if count.startswith("step="):
            step = float(count[5:])
            if step <= 0.0:
                raise UsageError("axis step must be positive")
            n_points = int(math.floor((hi - lo) / step + 1e-9)) + 1 if hi >= lo else 0
            if scale == "log":
                raise UsageError("step= is only supported on linear axes")
            values = [lo + i * step for i in range(n_points)]
        else:
            n_points = int(count)
            if scale == "log":
                if lo <= 0.0 or hi <= 0.0:
                    raise UsageError("log axis needs positive bounds")
                values = list(np.logspace(math.log10(lo), math.log10(hi), n_points)) if n_points else []
            else:
                values = list(np.linspace(lo, hi, n_points)) if n_points else []
    except ValueError as exc:
        raise UsageError(f"bad axis specification {tokens!r}: {exc}") from exc
    if not values:
        raise UsageError(f"axis {name!r} is empty")
    values = [float(f"{v:.12g}") for v in values]
    if name in ("N", "d"):
        values = [int(round(v)) for v in values]
    return Axis(name, sorted(set(values)))


def _point_spec(point: dict, args) -> eng.EngineSpec:
    n = int(point["N"])
    beta = float(point["beta"])
    _check_engine_range(n, beta)
    if point.get("chi2") is not None:
        chi = chi_table_for_chi2(point["chi2"], n)
    elif point.get("q") is not None:
        chi = chi_table_dp(geometric_distribution(point["q"]), n)
    elif point.get("d") is not None:
        chi = chi_table_dp(uniform_distribution(int(point["d"])), n)
    else:
        chi = ideal_boson_table(n)
    return _engine_spec(n, beta, chi, args)


def thread_count() -> int:
    raw = os.environ.get("COBOSON_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_sweep(args) -> str:
    if not args.axis:
        raise UsageError("sweep needs at least one --axis")
    if len(args.axis) > 2:
        raise UsageError("at most two sweep axes are supported")
    axes = [parse_axis(tokens) for tokens in args.axis]
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise UsageError("sweep axes must be distinct")
    chi_axes = {"chi2", "q", "d"} & set(names)
    fixed = {"N": args.n, "beta": args.beta, "chi2": args.chi2, "q": args.q, "d": args.d}
    if chi_axes:
        for key in ("chi2", "q", "d"):
            if key not in names:
                fixed[key] = None
    if len(chi_axes) > 1:
        raise UsageError("sweep at most one of chi2, q, d")
    points = []
    for combo in itertools.product(*(a.values for a in axes)):
        point = dict(fixed)
        point.update(zip(names, combo))
        points.append(point)
    specs = [_point_spec(p, args) for p in points]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        reports = list(pool.map(eng.total_work, specs))
    n_cols = max(r.n for r in reports)
    if args.format == "json":
        return dump_json({"axes": names, "rows": [r.to_dict() for r in reports]})
    return dump_csv(report_header(n_cols), [report_row(r, n_cols) for r in reports])


def cmd_hydrogen(args) -> str:
    if args.trap_length is not None:
        b = args.trap_length
    else:
        b = trap_length(args.omega, args.mass)
    p = hydrogen_purity(args.bohr_radius, b)
    chi2 = 1.0 - p
    result = {
        "bohr_radius": args.bohr_radius,
        "trap_length": b,
        "purity": p,
        "chi2": chi2,
        "f0": two_particle_f0(chi2),
        "work": two_particle_work(chi2),
    }
    if args.format == "csv":
        keys = list(result)
        return dump_csv(keys, [[result[k] for k in keys]])
    return dump_json(result)


def cmd_selftest(args) -> str:
    from .selftest import run_selftest

    lines, ok = run_selftest(seed=args.seed)
    if not ok:
        raise SelftestFailed("\n".join(lines) + "\n")
    return "\n".join(lines) + "\n"


class SelftestFailed(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coboson", description=__doc__.splitlines()[0])
    parser.add_argument("--error-json", action="store_true", help="report errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, default_format: str) -> None:
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    def engine_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--cutoff-tol", type=float, default=1e-12)
        p.add_argument("--wall-policy", choices=eng.WALL_POLICIES, default="force_balance")

    p = sub.add_parser("chi", help="chi_0..chi_nmax of a Schmidt distribution")
    p.add_argument("--uniform", type=int, metavar="D")
    p.add_argument("--geometric", type=float, metavar="Q")
    p.add_argument("--weights", type=float, nargs="+", metavar="W")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--method", choices=("dp", "newton"), default="dp")
    common(p, "csv")
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("engine", help="one full engine cycle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    _add_chi_source(p)
    engine_opts(p)
    common(p, "json")
    p.set_defaults(func=cmd_engine)

    p = sub.add_parser("sweep", help="engine over a grid of up to two parameters")
    p.add_argument(
        "--axis",
        nargs=5,
        action="append",
        metavar=("NAME", "SCALE", "START", "STOP", "COUNT"),
        help="NAME in beta,chi2,N,q,d; SCALE lin|log; COUNT an integer or step=S",
    )
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--chi2", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--d", type=int, default=None)
    engine_opts(p)
    common(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("hydrogen", help="two trapped hydrogen atoms at low temperature")
    p.add_argument("--omega", type=float, default=2.0 * math.pi * 1e4, help="trap angular frequency, rad/s")
    p.add_argument("--mass", type=float, default=HYDROGEN_MASS, help="atom mass, kg")
    p.add_argument("--bohr-radius", type=float, default=BOHR_RADIUS, help="metres")
    p.add_argument("--trap-length", type=float, default=None, help="override b directly, metres")
    common(p, "json")
    p.set_defaults(func=cmd_hydrogen)

    p = sub.add_parser("selftest", help="run the brute-force oracle cross-checks")
    p.add_argument("--seed", type=int, default=0)
    common(p, "csv")
    p.set_defaults(func=cmd_selftest)
    return parser


def _fail(args, code: int, exc: BaseException) -> int:
    if getattr(args, "error_json", False):
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"coboson: error: {exc}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
        write_output(text, args.out)
    except UsageError as exc:
        return _fail(args, EXIT_USAGE, exc)
    except CobosonError as exc:
        return _fail(args, EXIT_DOMAIN, exc)
    except SelftestFailed as exc:
        sys.stdout.write(str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
