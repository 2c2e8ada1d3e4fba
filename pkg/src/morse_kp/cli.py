"""
Command-line front end: tables over |Z|^2 and temperature grids, molecule
presets, and the ``verify`` report.

Exit codes: 0 success, 1 a verify check failed, 2 usage or domain error,
3 numerical failure, 4 table computed but some P rows did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import coherent as coh
from . import statistics as stats
from . import thermal as th
from .errors import ConsistencyError, DomainError, NumericalError
from .spectrum import dimensional_energy, load_presets, make_space, molecule_preset, thermal_params
from .verify import SCOPES, run_checks

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC, EXIT_WARN = 0, 1, 2, 3, 4
NULL = "null"


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 1:
            raise DomainError(f"grid count must be >= 1, got {self.count}")
        if self.scale not in ("linear", "log"):
            raise DomainError(f"grid scale must be 'linear' or 'log', got {self.scale!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise DomainError("grid bounds must be finite")
        if self.count > 1 and not self.start < self.stop:
            raise DomainError(f"grid needs start < stop, got {self.start}:{self.stop}")
        if self.scale == "log" and self.start <= 0:
            raise DomainError("log grid needs start > 0")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``a:b:n[:log]``, or a bare number for a one-point grid."""
        parts = text.split(":")
        try:
            if len(parts) == 1:
                v = float(parts[0])
                fields = (v, v, 1, "linear")
            elif len(parts) in (3, 4):
                scale = parts[3] if len(parts) == 4 else "linear"
                fields = (float(parts[0]), float(parts[1]), int(parts[2]), scale)
            else:
                raise ValueError
        except ValueError:
            raise DomainError(f"bad grid {text!r}; expected a:b:n[:log]") from None
        return cls(*fields)

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _grid(text):
    try:
        return GridSpec.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _l_list(text):
    try:
        ls = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad l list {text!r}") from None
    if not ls:
        raise argparse.ArgumentTypeError("empty l list")
    return ls


def _tol_override(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write to this path instead of stdout")
    common.add_argument("--workers", type=int, default=4)

    space = _Parser(add_help=False)
    g = space.add_mutually_exclusive_group()
    g.add_argument("--l", type=int, help="number of excited bound levels (dimension l+1)")
    g.add_argument("--molecule", help="preset name, e.g. H2 or I2")
    space.add_argument("--preset-file", help="extra presets: 'name value-of-2(l+1)' per line")
    space.add_argument("--hbar-omega", type=float, default=1.0)

    pnum = _Parser(add_help=False)
    pnum.add_argument("--tol", type=float, default=1e-10)
    pnum.add_argument("--kmax", type=int, default=60)
    pnum.add_argument("--quad-order", type=int, default=200)
    pnum.add_argument("--method", choices=("auto", "series", "kernel"), default="auto")

    xg = _Parser(add_help=False)
    xg.add_argument("--x-grid", type=_grid, default=GridSpec(0.01, 100.0, 50, "log"), help="|Z|^2 grid a:b:n[:log]")

    tg = _Parser(add_help=False)
    tgg = tg.add_mutually_exclusive_group()
    tgg.add_argument("--beta-grid", type=_grid, help="inverse temperature grid a:b:n[:log]")
    tgg.add_argument("--a-grid", type=_grid, help="grid in A = beta*hbar*omega")

    parser = _Parser(prog="morse-kp", description="Coherent states and thermal statistics of the Morse oscillator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("spectrum", parents=[common, space], help="bound-state energies")
    p = sub.add_parser("coherent", parents=[common, space, xg], help="coherent-state coefficients")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--phase", type=float, default=0.0, help="arg Z")
    p = sub.add_parser("stats", parents=[common, space, xg], help="number statistics over an x grid")
    p.add_argument("--alpha", type=float, default=0.0)
    sub.add_parser("husimi", parents=[common, space, xg, tg, pnum], help="thermal Husimi function")
    sub.add_parser("pfunction", parents=[common, space, xg, tg, pnum], help="thermal P-function")
    p = sub.add_parser("thermal", parents=[common, space, xg, tg, pnum], help="thermal statistics and thermodynamics")
    p.add_argument("--include", action="append", choices=("husimi", "pfunction"), default=[], help="append per-(T, x) tables")
    p = sub.add_parser("verify", parents=[common], help="run the invariant checks")
    p.add_argument("--scope", choices=("all",) + SCOPES, default="all")
    p.add_argument("--l", type=_l_list, default=[1, 2, 3, 4], help="comma-separated list of l")
    p.add_argument("--check-tol", type=_tol_override, action="append", default=[], metavar="NAME=TOL")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--kmax", type=int, default=60)
    p.add_argument("--quad-order", type=int, default=200)
    return parser


# -- helpers -------------------------------------------------------------------


def _space(args):
    if args.molecule:
        table = load_presets(args.preset_file) if args.preset_file else None
        return molecule_preset(args.molecule, table)
    if args.l is None:
        raise _Usage("one of --l or --molecule is required")
    return make_space(args.l)


def _space_meta(space, args):
    meta = {"l": space.l, "hbar_omega": args.hbar_omega}
    if space.molecule:
        meta["molecule"] = space.molecule
        meta["rounding_residual"] = float(format(space.preset_residual, ".12g"))
    return meta


def _a_values(args):
    if args.a_grid is not None:
        grid = args.a_grid.values()
    elif args.beta_grid is not None:
        grid = args.beta_grid.values() * args.hbar_omega
    else:
        grid = np.array([1.0])
    if np.any(grid < 0):
        raise DomainError("temperature grids must be non-negative")
    return grid


def _pmap(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if v is None:
        return NULL
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return NULL
        return format(v, ".15g")
    return str(v)


def _json_value(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else float(format(v, ".15g"))
    return v


@dataclass
class Table:
    name: str
    columns: list
    rows: list


def _render(tables, meta, fmt) -> str:
    if fmt == "json":
        doc = {"meta": meta, "tables": {t.name: [{c: _json_value(v) for c, v in zip(t.columns, r)} for r in t.rows] for t in tables}}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    for i, t in enumerate(tables):
        if i:
            buf.write("\n")
        if len(tables) > 1:
            buf.write(f"# table: {t.name}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(t.columns)
        for r in t.rows:
            w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text, args):
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _guard(fn, *a):
    try:
        return fn(*a)
    except DomainError:
        return None


# -- commands --------------------------------------------------------------------


def cmd_spectrum(args):
    space = _space(args)
    rows = [(n, space.energies[n], dimensional_energy(space, n, args.hbar_omega)) for n in space.levels]
    return [Table("spectrum", ["n", "E_n", "epsilon_n"], rows)], _space_meta(space, args), False


def cmd_coherent(args):
    space = _space(args)

    def row(x):
        st = coh.closed_form_state(space, math.sqrt(x) * complex(math.cos(args.phase), math.sin(args.phase)), args.alpha)
        return [(x, n, c.real, c.imag, abs(c) ** 2) for n, c in enumerate(st.coeffs)]

    rows = [r for block in _pmap(row, args.x_grid.values(), args.workers) for r in block]
    meta = _space_meta(space, args) | {"alpha": args.alpha, "phase": args.phase}
    return [Table("coherent", ["x", "n", "re_c", "im_c", "prob"], rows)], meta, False


def cmd_stats(args):
    space = _space(args)

    def row(x):
        st = coh.closed_form_state(space, math.sqrt(x), args.alpha)
        return (
            x,
            stats.moment_n(st, 1),
            stats.moment_n(st, 2),
            _guard(stats.g2, st),
            _guard(stats.mandel_q, st),
            stats.expectation(st, stats.energy_observable(space)),
            stats.action_closed_form(space.l, x),
        )

    rows = _pmap(row, args.x_grid.values(), args.workers)
    meta = _space_meta(space, args) | {"alpha": args.alpha}
    return [Table("stats", ["x", "mean_n", "mean_n2", "g2", "mandel_q", "mean_energy", "f_x"], rows)], meta, False


def _husimi_table(space, a_values, xs, args):
    def row(A):
        st = th.thermal_state(thermal_params(space, A))
        out = []
        for x in xs:
            h = th.husimi(st, x)
            out.append((A, x, h.direct, h.operator_form))
        return out

    rows = [r for block in _pmap(row, a_values, args.workers) for r in block]
    return Table("husimi", ["A", "x", "husimi", "husimi_operator"], rows)


def _p_table(space, a_values, xs, args):
    def row(A):
        st = th.thermal_state(thermal_params(space, A))
        vals, k_used, conv, methods = th.p_values(st, xs, args.tol, args.kmax, args.method)
        return [(A, x, v, int(k), bool(c), m) for x, v, k, c, m in zip(xs, vals, k_used, conv, methods)]

    rows = [r for block in _pmap(row, a_values, args.workers) for r in block]
    warn = any(not r[4] for r in rows)
    return Table("pfunction", ["A", "x", "P", "k_used", "converged", "method"], rows), warn


def _thermal_meta(space, args):
    return _space_meta(space, args) | {"B_over_A": 1 / (2 * (space.l + 1)), "k_B": 1}


def cmd_husimi(args):
    space = _space(args)
    t = _husimi_table(space, _a_values(args), args.x_grid.values(), args)
    return [t], _thermal_meta(space, args), False


def cmd_pfunction(args):
    space = _space(args)
    t, warn = _p_table(space, _a_values(args), args.x_grid.values(), args)
    return [t], _thermal_meta(space, args) | {"tol": args.tol, "kmax": args.kmax, "method": args.method}, warn


def cmd_thermal(args):
    space = _space(args)
    hw = args.hbar_omega

    def row(A):
        params = thermal_params(space, A)
        st = th.thermal_state(params)
        m1, m2 = th.thermal_moment(st, 1), th.thermal_moment(st, 2)
        g2 = q = None
        if m1 > 0:
            g2, q = th.thermal_g2(st), th.thermal_mandel(st)
        if A > 0:
            td = th.thermodynamics(params, hbar_omega=hw)
            T, F, U, S, C = td.temperature, td.free_energy, td.internal_energy, td.entropy, td.heat_capacity
        else:
            T, F, U, S, C = math.inf, None, None, th.entropy(params), th.heat_capacity(params)
        return (A, T, st.partition, m1, m2, g2, q, F, U, S, C)

    a_values = _a_values(args)
    rows = _pmap(row, a_values, args.workers)
    cols = ["A", "T", "Z", "mean_n", "mean_n2", "g2", "mandel_q", "F", "U", "S", "C_v"]
    tables = [Table("thermal", cols, rows)]
    warn = False
    xs = args.x_grid.values()
    if "husimi" in args.include:
        tables.append(_husimi_table(space, a_values, xs, args))
    if "pfunction" in args.include:
        t, warn = _p_table(space, a_values, xs, args)
        tables.append(t)
    return tables, _thermal_meta(space, args), warn


def cmd_verify(args):
    report = run_checks(args.scope, args.l, dict(args.check_tol), args.quad_order, args.tol, args.kmax, command=args.command_line)
    # one JSON record per line regardless of --format
    text = "".join(json.dumps(r, default=_json_value) + "\n" for r in report.records())
    return text, report


COMMANDS = {
    "spectrum": cmd_spectrum,
    "coherent": cmd_coherent,
    "stats": cmd_stats,
    "husimi": cmd_husimi,
    "pfunction": cmd_pfunction,
    "thermal": cmd_thermal,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"morse-kp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    command_line = "morse-kp " + " ".join(shlex.quote(a) for a in argv)
    try:
        if args.command == "verify":
            args.command_line = command_line
            text, report = cmd_verify(args)
            _emit(text, args)
            n_warn = len(report.warnings)
            print(
                f"{len(report.checks)} checks, {len(report.failures)} failed, {n_warn} warnings, {len(report.errors)} errors",
                file=sys.stderr,
            )
            return report.exit_code
        tables, meta, warn = COMMANDS[args.command](args)
        meta = {"command": command_line, "version": __version__} | meta
        _emit(_render(tables, meta, args.format), args)
        if warn:
            print("morse-kp: warning: some P rows did not converge (converged=false)", file=sys.stderr)
            return EXIT_WARN
        return EXIT_OK
    except _Usage as exc:
        print(f"morse-kp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConsistencyError, NumericalError, ArithmeticError) as exc:
        print(f"morse-kp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError, OSError) as exc:
        print(f"morse-kp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
