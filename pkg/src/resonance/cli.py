"""Command-line front end.

Every subcommand reads one JSON problem file, prints a plain-text report
and, with ``--out DIR``, writes CSV tables and PNG figures there.

Exit codes: 0 success, 1 numerical failure, 2 a hypothesis of the analysis does
not hold for the problem, 3 bad invocation or malformed problem file.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import curves, linear, pendulum, scalar, semilinear
from .errors import HypothesisError, NumericalError, ProblemError
from .ode import DEFAULT_TOL, integrate
from .problems import ProblemFile, ProblemFileError, load
from .smatrix import RANK_TOL

__all__ = ["main", "run", "build_parser", "write_csv", "EXIT_OK", "EXIT_NUMERICAL",
           "EXIT_HYPOTHESIS", "EXIT_INPUT"]

EXIT_OK, EXIT_NUMERICAL, EXIT_HYPOTHESIS, EXIT_INPUT = 0, 1, 2, 3


class UsageError(ProblemError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which means "hypothesis" here
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v: float) -> str:
    return "%.15g" % v


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    """Comma-separated, LF line endings, numbers as ``%.15g``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(float(v)) if not isinstance(v, str) else v for v in row])
    return path


def _vec(v, tiny: float = 1e-9) -> str:
    """``(1,0)``-style vector with round-off sized entries shown as 0."""
    v = np.asarray(v, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
    return "(" + ",".join("0" if abs(c) <= tiny * scale else f"{c:.6g}" for c in v) + ")"


def _complex(z: complex) -> str:
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}i"


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--param expects name=value, got '{text}'")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"--param {name}: '{value}' is not a number") from None


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got '{text}'") from None


def _xi_range(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--xi expects lo:hi:step, got '{text}'")
    lo, hi, step = (float(p) for p in parts)
    try:
        return curves.xi_grid(lo, hi, step)
    except ValueError as exc:
        raise UsageError(f"--xi: {exc}") from None


class Context:
    """Parsed arguments plus the loaded problem and effective tolerances."""

    def __init__(self, args: argparse.Namespace, out):
        self.args = args
        self.out = out
        pf = load(args.problem)
        overrides = dict(args.param or [])
        self.problem: ProblemFile = pf.with_parameters(overrides) if overrides else pf
        self.rank_tol = args.tol_rank if args.tol_rank is not None else self.problem.tolerances.get("rank", RANK_TOL)
        self.ode_tol = args.tol_ode if args.tol_ode is not None else self.problem.tolerances.get("ode", DEFAULT_TOL)
        self.out_dir = Path(args.out) if args.out else None

    def say(self, line: str = "") -> None:
        print(line, file=self.out)

    def csv(self, name: str, header, rows) -> None:
        if self.out_dir is not None:
            path = write_csv(self.out_dir / name, header, rows)
            self.say(f"wrote {path}")

    def figure(self, name: str, draw) -> None:
        if self.out_dir is not None:
            from . import plotting  # deferred: matplotlib is slow to import

            path = draw(plotting, self.out_dir / name)
            self.say(f"wrote {path}")

    def x0(self, n: int, default=None) -> np.ndarray:
        if self.args.x0 is None:
            return np.zeros(n) if default is None else np.asarray(default, dtype=float)
        v = _floats(self.args.x0, "--x0")
        if len(v) != n:
            raise UsageError(f"--x0 needs {n} component(s), got {len(v)}")
        return np.array(v)

    def periods(self, default: int) -> int:
        m = self.args.periods if self.args.periods is not None else default
        if m < 0:
            raise UsageError("--periods must be non-negative")
        return m


# subcommands ----------------------------------------------------------------

def _report_linear(ctx: Context, sys_: linear.PeriodicSystem) -> linear.ResonanceVerdict:
    rep = linear.monodromy_report(sys_, ctx.rank_tol, ctx.ode_tol)
    verdict = linear.classify(rep)
    ctx.say(f"dimension {sys_.dimension}, period {sys_.period:.6g}")
    ctx.say("multipliers: " + ", ".join(_complex(complex(z)) for z in rep.spectrum.eigenvalues))
    ctx.say(f"spectral radius {verdict.spectral_radius:.6g}")
    ctx.say(f"b = {_vec(rep.b)}")
    if verdict.case is linear.Case.ALL_UNBOUNDED:
        w = linear.massera_witness(rep)
        ctx.say(f"{verdict.describe()}; witness v0 = {_vec(w.v0)}; (b,v0) = {w.pairing:.6g}")
    else:
        line = verdict.describe()
        if verdict.defect is not None:
            pset = linear.periodic_initial_set(rep)
            line += f"; periodic initial conditions form a {pset.kernel.shape[1]}-dimensional affine set"
        ctx.say(line)
        if verdict.case is linear.Case.PERIODIC_PLUS_UNBOUNDED:
            lam, v = linear.unbounded_direction(rep)
            ctx.say(f"unbounded direction {_vec(v)} with multiplier {_complex(lam)}")
    ctx.csv("multipliers.csv", ["re", "im", "abs"],
            [(z.real, z.imag, abs(z)) for z in rep.spectrum.eigenvalues])
    ctx.figure("multipliers.png", lambda plotting, p: plotting.multiplier_figure(p, rep.spectrum.eigenvalues))
    if ctx.args.periods:
        m = ctx.periods(0)
        x0 = ctx.x0(sys_.dimension)
        xs = linear.simulate_periods(sys_, x0, m, ctx.ode_tol)
        header = ["k"] + [f"x{i + 1}" for i in range(sys_.dimension)]
        rows = [[k, *x] for k, x in enumerate(xs)]
        if verdict.case is linear.Case.ALL_UNBOUNDED:
            v0 = linear.massera_witness(rep).v0
            header.append("x_dot_v0")
            rows = [r + [float(x @ v0)] for r, x in zip(rows, xs)]
        ctx.say(f"|x({m}p)| = {np.linalg.norm(xs[-1]):.6g}")
        ctx.csv("simulation.csv", header, rows)
        ctx.figure("simulation.png", lambda plotting, p: plotting.line_figure(
            p, np.arange(m + 1), {h: [r[i + 1] for r in rows] for i, h in enumerate(header[1:])},
            "k (periods)", "state at t = kp"))
    return verdict


def cmd_analyze_linear(ctx: Context) -> int:
    _report_linear(ctx, ctx.problem.linear_system())
    return EXIT_OK


def cmd_tune(ctx: Context) -> int:
    name, family, bracket = ctx.problem.tune_family()
    res = linear.tune_to_resonance(family, bracket)
    ctx.say(f"tuned {name} = {res.kappa:.15g} (det(I - Z(p)) = {res.phi:.3g})")
    _report_linear(ctx, res.system)
    return EXIT_OK


def cmd_analyze_scalar(ctx: Context) -> int:
    prob = ctx.problem.scalar()
    verdict = scalar.scalar_verdict(prob)
    ctx.say(verdict.describe())
    if verdict.verdict is scalar.Verdict.ALL_UNBOUNDED:
        m = ctx.periods(10)
        x0 = float(ctx.x0(1)[0])
        w = scalar.unbounded_witness(prob, x0, m)
        ctx.say(f"x({m}p) - x(0) = {w.iterates[-1] - w.iterates[0]:.6g}; growth bound "
                f"{'holds' if w.holds else 'VIOLATED'} (worst slack {w.worst_slack:.3g})")
        xs = w.iterates
        if not w.holds:
            raise NumericalError("simulated iterates violate the growth bound")
    else:
        orbit = scalar.find_periodic(prob)
        ctx.say(f"periodic solution: x(0) = {orbit.x0:.12g}, average {orbit.average:.12g}, "
                f"closure {orbit.closure:.3g}")
        m = ctx.periods(10)
        x0 = float(ctx.x0(1, [orbit.x0 + 5.0])[0])
        xs = scalar.iterates(prob, x0, m)
        ctx.say(f"iterates from x0 = {x0:.6g}: |x({m}p) - x*| = {abs(xs[-1] - orbit.x0):.3g}")
    ctx.csv("iterates.csv", ["k", "x"], list(enumerate(xs)))
    ctx.figure("iterates.png", lambda plotting, p: plotting.line_figure(
        p, np.arange(len(xs)), {"x(kp)": xs}, "k (periods)", "x(kp)"))
    return EXIT_OK


def cmd_analyze_system(ctx: Context) -> int:
    prob = ctx.problem.semilinear()
    xr, zr = semilinear.resonance_check(prob, ctx.ode_tol)
    ctx.say(f"1 is a multiplier of X(p): {'yes' if xr else 'no'}; of Z(p): {'yes' if zr else 'no'}")
    verdict, cond = semilinear.semilinear_verdict(prob)
    ctx.say(f"positive adjoint z(0) = {_vec(cond.z0)}; integrals of z = {_vec(cond.z_integrals)}")
    ctx.say(f"{verdict.value}; interval ({cond.lower:.6g}, {cond.upper:.6g}); value {cond.value:.6g}")
    if cond.satisfied:
        ctx.say("necessary condition holds; existence of a periodic solution is not decided")
        return EXIT_OK
    m = ctx.periods(20)
    run_ = semilinear.instability_run(prob, ctx.x0(prob.dimension), m, ctx.ode_tol)
    sign = "-" if run_.orientation < 0 else "+"
    ctx.say(f"V = {sign}sum z_i(0) x_i over {m} periods: "
            f"{'strictly increasing' if run_.consistent else 'NOT strictly increasing'}; "
            f"mean gain {run_.growth_rate:.6g}; |x({m}p)| = {run_.norms[-1]:.6g}")
    ctx.csv("instability.csv", ["k", "V", "norm_x"],
            [(k, v, n) for k, (v, n) in enumerate(zip(run_.V, run_.norms))])
    ctx.figure("instability.png", lambda plotting, p: plotting.line_figure(
        p, np.arange(m + 1), {"V(x(kp))": run_.V, "|x(kp)|": run_.norms}, "k (periods)", "value"))
    if not run_.consistent:
        raise NumericalError("V failed to increase strictly: numerical inconsistency")
    return EXIT_OK


def cmd_analyze_pendulum(ctx: Context) -> int:
    prob = ctx.problem.pendulum()
    check = pendulum.verify_slope_bound(prob)
    ctx.say(f"sup|g'| >= {check.sup_estimate:.6g} (at x = {check.argmax:.6g}); "
            f"lambda^2/4 + omega^2 = {check.bound:.6g}; "
            f"{'holds (sampled, not proven)' if check.holds else 'fails'}")
    verdict = pendulum.pendulum_verdict(prob)
    ctx.say(verdict.describe())
    if verdict.exists:
        orbit = pendulum.find_fixed_point_2d(prob)
        ctx.say(f"periodic solution: (x, x')(0) = ({orbit.x0:.12g}, {orbit.v0:.12g}), "
                f"average {orbit.average:.12g}, closure {orbit.closure:.3g}")
        return EXIT_OK
    m = ctx.periods(20)
    run_ = pendulum.poincare_2d(prob, ctx.x0(2), m)
    gains = run_.gains
    if gains.size:
        ctx.say(f"V = x' + lambda x over {m} periods: min gain {run_.direction * gains.min():.6g} "
                f"per period; {'strictly monotone' if run_.consistent else 'NOT strictly monotone'}")
    ctx.csv("poincare.csv", ["k", "x", "xdot", "V"],
            [(k, s[0], s[1], v) for k, (s, v) in enumerate(zip(run_.states, run_.V))])
    ctx.figure("poincare.png", lambda plotting, p: plotting.line_figure(
        p, np.arange(m + 1), {"V": run_.V}, "k (periods)", "x' + lambda x"))
    if not run_.consistent:
        raise NumericalError("V failed to change strictly: numerical inconsistency")
    return EXIT_OK


def cmd_curve(ctx: Context) -> int:
    prob = ctx.problem.curve()
    grid = _xi_range(ctx.args.xi) if ctx.args.xi else curves.xi_grid(-40.0, 40.0, 0.5)
    table = curves.average_table(prob, grid)
    curve = table.curve
    if not curve.orbits:
        raise NumericalError("no point of the curve converged")
    ctx.say(f"{len(curve.orbits)} orbits on xi in [{grid[0]:g}, {grid[-1]:g}] "
            f"({len(curve.orbits) - len(grid) + len(curve.failures)} inserted for continuity), "
            f"{len(curve.failures)} failures")
    for f in curve.failures:
        ctx.say(f"  failed at xi = {f.xi:g}: {f.message}")
    ctx.say(f"mu range [{table.nu.min():.6g}, {table.nu.max():.6g}]; "
            f"largest residual {max(o.residual for o in curve.orbits):.3g}; "
            f"largest gap {curve.gaps().max() if len(curve.orbits) > 1 else 0.0:.3g}")
    ctx.csv("curve.csv", ["xi", "mu", "residual", "sup_X"], curve.rows())
    ctx.csv("figure.csv", ["nu", "xi"], table.rows())
    ctx.figure("curve.png", lambda plotting, p: plotting.curve_figure(p, table.nu, table.xi))
    if ctx.args.svg:
        from .svg import write_svg

        path = write_svg(ctx.args.svg, table.nu, table.xi, "nu", "xi", "average of the periodic solution")
        ctx.say(f"wrote {path}")
    return EXIT_OK if not curve.failures else EXIT_NUMERICAL


def cmd_simulate(ctx: Context) -> int:
    pf = ctx.problem
    m = ctx.periods(10)
    if pf.kind == "linear-system":
        sys_ = pf.linear_system()
        xs = linear.simulate_periods(sys_, ctx.x0(sys_.dimension, pf.data.get("x0")), m, ctx.ode_tol)
        names = [f"x{i + 1}" for i in range(sys_.dimension)]
    elif pf.kind == "scalar":
        xs = scalar.iterates(pf.scalar(), float(ctx.x0(1)[0]), m)[:, None]
        names = ["x"]
    elif pf.kind == "system-semilinear":
        prob = pf.semilinear()
        x = ctx.x0(prob.dimension)
        rows = [x]
        for k in range(m):
            x = integrate(prob.field, k * prob.period, x, (k + 1) * prob.period, ctx.ode_tol, ctx.ode_tol,
                          dense=False).y[-1]
            rows.append(x)
        xs = np.array(rows)
        names = semilinear.state_names(prob.dimension)
    elif pf.kind == "pendulum":
        xs = pendulum.poincare_2d(pf.pendulum(), ctx.x0(2), m).states
        names = ["x", "xdot"]
    else:
        raise UsageError(f"simulate does not apply to kind '{pf.kind}'")
    for k, x in enumerate(xs):
        ctx.say(f"k={k}: " + ", ".join(f"{v:.10g}" for v in x))
    ctx.csv("simulation.csv", ["k"] + names, [[k, *x] for k, x in enumerate(xs)])
    ctx.figure("simulation.png", lambda plotting, p: plotting.line_figure(
        p, np.arange(m + 1), {n: xs[:, i] for i, n in enumerate(names)}, "k (periods)", "state at t = kp"))
    return EXIT_OK


COMMANDS = {
    "analyze-linear": (cmd_analyze_linear, "classify a linear periodic system"),
    "analyze-scalar": (cmd_analyze_scalar, "first-order scalar equation at resonance"),
    "analyze-system": (cmd_analyze_system, "semilinear system with a resonant linear part"),
    "analyze-pendulum": (cmd_analyze_pendulum, "damped pendulum-like equation"),
    "curve": (cmd_curve, "trace the curve of periodic solutions over their average"),
    "simulate": (cmd_simulate, "integrate over whole periods and print x(kp)"),
    "tune": (cmd_tune, "tune a parameter so the linear system becomes resonant"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resonance", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("problem", help="JSON problem file")
        p.add_argument("--out", metavar="DIR", help="write CSV tables and PNG figures here")
        p.add_argument("--param", metavar="NAME=VALUE", action="append", type=_param,
                       help="override a declared parameter (repeatable)")
        p.add_argument("--periods", metavar="M", type=int, help="number of periods to simulate")
        p.add_argument("--x0", metavar="V[,V...]", help="initial state")
        p.add_argument("--tol-rank", type=float, help=f"relative rank tolerance (default {RANK_TOL:g})")
        p.add_argument("--tol-ode", type=float, help=f"integrator tolerance (default {DEFAULT_TOL:g})")
        if name == "curve":
            p.add_argument("--xi", metavar="LO:HI:STEP", help="grid of averages (default -40:40:0.5)")
            p.add_argument("--svg", metavar="PATH", help="write an SVG plot of xi against nu")
    return parser


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = list(sys.argv[1:] if argv is None else argv)
    # let "--xi -40:40:0.5" through; argparse would read the value as an option
    for i in range(len(argv) - 1):
        if argv[i] == "--xi":
            argv[i:i + 2] = [f"--xi={argv[i + 1]}"]
            break
    try:
        args = build_parser().parse_args(argv)
        ctx = Context(args, out)
        return COMMANDS[args.command][0](ctx)
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}", file=err)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERICAL
    except ProblemError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
