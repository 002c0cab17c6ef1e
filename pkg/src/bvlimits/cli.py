"""Command-line front end.

Exit status: 0 on success, 2 for unusable input, 3 when a computation fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .diagram import (contract, default_depth, dumps, heights, incidence, load,
                      relabel_normalize, validate)
from .dynamics import min_path, standing_assumptions_hold
from .errors import BratteliError, DiagramError, LevelRangeError
from .generators import generate
from .limitlaw import (EntranceCDF, FddSpec, LimitEntranceCDF, breakpoint_table,
                       convergence_report, cylinder_sequence, finite_Fk, limit_fdd, limit_Fk, finite_fdd)
from .report import csv_text, sidecar_path, write_csv, write_sidecar
from .spectral import (StationaryMeasure, VectorMeasure, nonstationary_measure_estimate, perron,
                       subdominant_estimate)

EXIT_INPUT = 2
EXIT_MATH = 3


class InputError(Exception):
    pass


# -- argument handling -------------------------------------------------------------

def _int_range(s: str) -> list[int]:
    try:
        if ".." in s:
            a, b = s.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a range a..b, got {s!r}") from None


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _param(s: str) -> tuple[str, str]:
    if "=" not in s:
        raise argparse.ArgumentTypeError(f"expected key=value, got {s!r}")
    k, v = s.split("=", 1)
    return k.strip(), v.strip()


def _positive(s: str) -> float:
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvlimits", description="Return-time limit laws of ordered Bratteli diagrams.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--diagram", help="diagram JSON file")
    src.add_argument("--gen", help="generator name (example1, left-to-right, odometer, odometer-beta, sturmian)")
    common.add_argument("--param", action="append", type=_param, default=[], metavar="K=V",
                        help="generator parameter, repeatable")
    common.add_argument("--tol", type=_positive, default=1e-14, help="Perron iteration tolerance")
    common.add_argument("--out", help="output file; a .json sidecar (and .png for laws) is written beside it")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    v = add("validate", "check structure and H1-H3")
    v.add_argument("--depth", type=int)

    c = add("contract", "telescope levels")
    c.add_argument("--cuts", required=True, help="comma-separated cut levels starting at 0")
    c.add_argument("--step", type=int, help="make the result stationary with this period step")

    pr = add("perron", "Perron data of one incidence matrix")
    pr.add_argument("--n", type=int, help="level whose matrix is used (default: first repeating level)")

    t = add("towers", "tower heights at level n")
    t.add_argument("--n", type=int, required=True)

    for name, help_ in (("finite-law", "exact law at level n"), ("limit-law", "limit law"),
                        ("compare", "sup distance between finite and limit laws"), ("fdd", "joint law of inter-entrance times")):
        s = add(name, help_)
        s.add_argument("--vertex", type=int, default=1, help="terminal vertex i* (1-based)")
        s.add_argument("--k", type=int, default=1)
        if name != "limit-law":
            s.add_argument("--n", type=_int_range, required=name != "fdd", default=None)
            s.add_argument("--cylinder", choices=("min", "second"), default="min")
            s.add_argument("--seed-depth", type=int, default=30, help="levels used by the measure estimate")
        if name in ("finite-law", "limit-law"):
            s.add_argument("--t", type=_floats, help="extra evaluation points")
        if name == "fdd":
            s.add_argument("--t", type=_floats, required=True, help="thresholds t_1,...,t_p")

    g = add("gen", "write a generated diagram as JSON")
    g.add_argument("name", nargs="?", help="generator name (alternative to --gen)")
    return p


# -- helpers --------------------------------------------------------------------------

def _load(args):
    if getattr(args, "name", None) and not args.gen:
        args.gen = args.name
    if bool(args.diagram) == bool(args.gen):
        raise InputError("give exactly one of --diagram or --gen")
    if args.diagram:
        try:
            return load(args.diagram), None
        except OSError as exc:
            raise InputError(f"cannot read {args.diagram}: {exc.strerror}") from None
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"malformed diagram file {args.diagram}: {exc}") from None
    try:
        return generate(args.gen, dict(args.param))
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    except ValueError as exc:
        if isinstance(exc, BratteliError):
            raise
        raise InputError(f"bad generator parameter: {exc}") from None


def _vertex(d, n, v):
    if not 1 <= v <= d.vertex_count(n):
        raise InputError(f"vertex {v} not in V_{n} (1..{d.vertex_count(n)})")
    return v - 1


def _measures(d, gen_measure, top_level, seed_depth):
    if gen_measure is not None:
        return gen_measure, "generator"
    if d.stationary_period == 1 and standing_assumptions_hold(d, d.periodic_start, d.periodic_start):
        return StationaryMeasure(d), "stationary"
    mv = nonstationary_measure_estimate(d, top_level, seed_depth)
    return VectorMeasure(d, mv), f"estimate (relative bound {mv.error_bound:.3g})"


def _normalized(d):
    """Stationary H1-H3 form required by the limit formulas."""
    if d.stationary_period == 1 and standing_assumptions_hold(d, max(d.periodic_start, 2), max(d.periodic_start, 2)):
        return d, False
    nd, _ = relabel_normalize(d)
    return nd, True


def _emit(args, header, rows, meta, summary, figure=None):
    print(summary)
    if args.out:
        out = Path(args.out)
        write_csv(out, header, rows)
        meta = dict(meta, tool="bvlimits", version=__version__, command=args.command,
                    config=_config_echo(args))
        write_sidecar(sidecar_path(out), meta)
        if figure is not None:
            figure(out.with_suffix(".png"))
    else:
        sys.stdout.write(csv_text(header, rows))


def _config_echo(args):
    keep = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out",):
            continue
        keep[k] = v
    return keep


def _law_rows(F, extra):
    pts = set(extra or [])
    if isinstance(F, EntranceCDF):
        pts.update(F.breaks())
        pts.update(F.mu * j for j in range(0, 6))
    else:
        pts.update(F.breaks())
    pts.add(0.0)
    return [(t, F(t)) for t in sorted(pts)]


# -- subcommands ---------------------------------------------------------------------------

def cmd_validate(args):
    d, _ = _load(args)
    depth = args.depth or default_depth(d)
    rep = validate(d, depth)
    info = rep.as_dict()
    rows = [(k, info[k]) for k in ("depth", "H1", "H2", "H3", "proper", "unique_min", "unique_max", "stationary", "period")]
    summary = "\n".join([f"{k}: {v}" for k, v in rows] + rep.diagnostics)
    _emit(args, ("property", "value"), rows, {"diagnostics": rep.diagnostics}, summary)
    return 0


def cmd_contract(args):
    d, _ = _load(args)
    try:
        cuts = [int(x) for x in args.cuts.split(",")]
    except ValueError:
        raise InputError(f"bad cut list {args.cuts!r}") from None
    nd = contract(d, cuts, args.step)
    text = dumps(nd)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"contracted diagram written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_perron(args):
    d, _ = _load(args)
    n = args.n or (max(d.periodic_start, 2) if d.stationary_period else 2)
    M = incidence(d, n)
    if len(M) != len(M[0]):
        raise InputError(f"incidence matrix at level {n} is not square")
    pd = perron(M, args.tol)
    sub = subdominant_estimate(M, pd)
    rows = [(i + 1, pd.r[i], pd.l[i]) for i in range(pd.size)]
    meta = {"lambda": pd.lam, "residual": pd.residual, "gamma": sub.gamma, "gamma_converged": sub.converged,
            "level": n}
    summary = f"lambda = {pd.lam:.12g}\ngamma = {sub.gamma:.12g}\nresidual = {pd.residual:.3g}"
    _emit(args, ("vertex", "r", "l"), rows, meta, summary)
    return 0


def cmd_towers(args):
    d, _ = _load(args)
    h = heights(d, args.n)
    rows = []
    for i, hi in enumerate(h):
        ranks = "-".join(str(e.rank) for e in min_path(d, args.n, i).edges)
        rows.append((i + 1, hi, ranks))
    summary = f"level {args.n}: {len(h)} towers, {sum(h)} paths"
    _emit(args, ("vertex", "height", "base_ranks"), rows, {"level": args.n, "total": sum(h)}, summary)
    return 0


def cmd_finite_law(args):
    d, gm = _load(args)
    if len(args.n) != 1:
        raise InputError("finite-law takes a single level")
    n = args.n[0]
    i_star = _vertex(d, n, args.vertex)
    mu, how = _measures(d, gm, n + args.k + 1, args.seed_depth)
    I = cylinder_sequence(d, i_star, [n], args.cylinder)[0]
    F = finite_Fk(d, I, args.k, mu)
    rows = _law_rows(F, args.t)
    meta = {"level": n, "vertex": args.vertex, "k": args.k, "measure": how}
    if isinstance(F, EntranceCDF):
        rets = F.returns()
        meta["mu_I"] = F.mu
        meta["return_values"] = {str(N): m for N, m in rets.items()}
        summary = "\n".join(f"return {N}: scaled {N * F.mu:.12g}, mass {m:.12g}" for N, m in rets.items())
    else:
        summary = "\n".join(f"atom {p:.12g}: mass {m:.12g}" for p, m in zip(F.points, F.masses))
    _emit(args, ("t", "value"), rows, meta, summary,
          lambda png: _plot([(f"n={n}", F)], png, f"k={args.k}"))
    return 0


def _plot(curves, png, title):
    from .plotting import plot_cdfs
    plot_cdfs(png, curves, title=title)


def cmd_limit_law(args):
    d, _ = _load(args)
    nd, changed = _normalized(d)
    n0 = max(nd.periodic_start - 1, 1)
    i_star = _vertex(nd, n0, args.vertex)
    pd = perron(incidence(nd, n0 + 1), args.tol)
    table = breakpoint_table(nd, i_star, pd)
    F = limit_Fk(nd, i_star, args.k, table, pd)
    meta = {"vertex": args.vertex, "k": args.k, "lambda": pd.lam, "normalized": changed,
            "c_values": list(table.c_values), "breakpoints": list(table.d),
            "group_weights": list(table.group_weights)}
    if isinstance(F, LimitEntranceCDF):
        slopes = F.slopes + (0.0,)
        rows = [(x, y, s) for x, y, s in zip(F.xs, F.ys, slopes)]
        for t in args.t or []:
            rows.append((t, F(t), ""))
        header = ("t", "value", "slope")
        summary = "\n".join(f"d_{j} = {x:.12g}" for j, x in enumerate(table.d, start=1))
    else:
        rows = _law_rows(F, args.t)
        header = ("t", "value")
        summary = "\n".join(f"atom {p:.12g}: mass {m:.12g}" for p, m in zip(F.points, F.masses))
    if changed:
        summary = "diagram contracted/relabeled to satisfy H1-H3\n" + summary
    _emit(args, header, rows, meta, summary, lambda png: _plot([("limit", F)], png, f"limit, k={args.k}"))
    return 0


def cmd_compare(args):
    d, gm = _load(args)
    nd, changed = _normalized(d)
    if changed and gm is not None:
        raise InputError("compare needs a diagram already in stationary H1-H3 form when a generator measure is used")
    ns = args.n
    i_star = _vertex(nd, ns[0], args.vertex)
    mu, how = _measures(nd, gm, ns[-1] + args.k + 1, args.seed_depth)
    cyl = cylinder_sequence(nd, i_star, ns, args.cylinder)
    rep = convergence_report(nd, cyl, args.k, mu)
    meta = {"vertex": args.vertex, "k": args.k, "measure": how, "fitted_slope": rep.slope,
            "reference_slope": rep.expected_slope, "decreasing": rep.decreasing}
    summary = "\n".join(f"n={n}: {x:.6g}" for n, x in rep.rows())
    summary += f"\nfitted log-slope {rep.slope:.6g}"
    if rep.expected_slope is not None:
        summary += f" (log(gamma/lambda) = {rep.expected_slope:.6g})"

    def fig(png):
        from .plotting import plot_convergence
        plot_convergence(png, list(rep.ns), list(rep.distances), rep.expected_slope, f"k={args.k}")
    _emit(args, ("n", "sup_distance"), rep.rows(), meta, summary, fig)
    return 0


def cmd_fdd(args):
    d, gm = _load(args)
    spec = FddSpec(len(args.t), tuple(args.t))
    ns = args.n or []
    rows = []
    if ns:
        i_star = _vertex(d, ns[0], args.vertex)
        mu, how = _measures(d, gm, ns[-1] + spec.p + 1, args.seed_depth)
        for I in cylinder_sequence(d, i_star, ns, args.cylinder):
            rows.append((len(I), finite_fdd(d, I, spec, mu)))
    else:
        how = None
    nd, _ = _normalized(d)
    n0 = max(nd.periodic_start - 1, 1)
    limit = limit_fdd(nd, _vertex(nd, n0, args.vertex), spec)
    rows.append(("inf", limit))
    summary = "\n".join(f"n={n}: {v:.12g}" for n, v in rows)
    _emit(args, ("n", "value"), rows, {"thresholds": list(spec.thresholds), "measure": how}, summary)
    return 0


def cmd_gen(args):
    d, _ = _load(args)
    text = dumps(d)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"diagram written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "validate": cmd_validate, "contract": cmd_contract, "perron": cmd_perron, "towers": cmd_towers,
    "finite-law": cmd_finite_law, "limit-law": cmd_limit_law, "compare": cmd_compare, "fdd": cmd_fdd,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, DiagramError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LevelRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BratteliError, ArithmeticError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
