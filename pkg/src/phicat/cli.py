"""Command-line front end.

    python3 -m phicat width --phi '{"family": "identity"}' --h-list 0
    python3 -m phicat verify --suite quotient --phi '{"family": "identity"}' --h 0

Exit status is 0 on success, 1 when a verification fails or a solve does not
converge, and 2 on usage errors.  Every command accepts ``--manifest PATH``,
which records inputs, tolerances, library versions and output files; when it
is omitted and the command writes files, the manifest goes next to the first
of them as ``<file>.manifest.json``.  ``phicat --replay MANIFEST`` re-runs the
recorded command line.  Row evaluations in ``width`` use ``PHICAT_NUM_THREADS`` worker threads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import re
import sys

import numpy as np
import scipy

from . import __version__
from .errors import NoConvergence, PhicatError
from .experiments import (
    UBAR_FAMILIES,
    decay_bound_check,
    eta_quotient_extremum_check,
    moving_plane_check,
    perturbed_cylinder_build,
    quotient_formula_check,
)
from .geometry import GraphPatch, identity_residuals
from .profile import IntegrationOptions, integrate_profile, width_table
from .solver import make_boundary_from_profile, solve_graph_equation, uniqueness_experiment
from .weights import WeightSpec, _jsonable, check_hypotheses

THREADS_ENV = "PHICAT_NUM_THREADS"

SCHEMA = """\
weight spec (--phi) is a JSON object:
  {"family": "identity"}
  {"family": "linear", "k": 2.0}
  {"family": "quadratic"}
  {"family": "alpha_log", "alpha": 2}
  {"family": "arctan"}
  {"family": "user_table", "points": [[x0, phi0], [x1, phi1], ...]}
add "reflected": true to use -phi on the same domain.

phicat --replay MANIFEST re-runs the command recorded in a manifest."""


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _floats(text: str, count: int | None = None, name: str = "value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{name}: expected {count} numbers, got {len(vals)}")
    return vals


def _ints(text: str, count: int | None = None, name: str = "value"):
    vals = _floats(text, count, name)
    if any(v != int(v) for v in vals):
        raise UsageError(f"{name}: expected integers")
    return [int(v) for v in vals]


def _spec(args) -> WeightSpec:
    try:
        return WeightSpec.from_config(args.phi)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid --phi: {exc}") from None


def _dump_json(obj, path=None) -> str:
    text = json.dumps(_jsonable_tree(obj), indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _jsonable_tree(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_tree(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _jsonable(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _strip_domain(profile, half: float | None, y_range):
    lam = profile.lambda_estimate
    if half is None:
        half = 0.75 * lam if math.isfinite(lam) else min(2.0, 0.9 * profile.x_end)
    return (-half, half), tuple(y_range)


def _heatmap(path, patch: GraphPatch, field, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(
        np.asarray(field).T,
        origin="lower",
        extent=(*patch.x_range, *patch.y_range),
        aspect="auto",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _lineplot(path, x, y, xlabel, ylabel, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, y, marker="." if len(x) < 50 else None)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.savefig(path, format="svg")
    plt.close(fig)


# -- commands -------------------------------------------------------------------


def cmd_profile(args, out):
    spec = _spec(args)
    opts = IntegrationOptions(x_cap=args.x_cap)
    sol = integrate_profile(spec, args.h, opts)
    lines = ["s,x,u,uprime,theta"]
    lines += [",".join(_fmt(v) for v in row) for row in zip(sol.s, sol.x, sol.u, sol.uprime, sol.theta)]
    csv = "\n".join(lines) + "\n"
    summary = {
        "h": args.h,
        "termination": sol.termination,
        "lambda_estimate": sol.lambda_estimate,
        "slope_limit": sol.slope_limit,
        "x_end": sol.x_end,
        "samples": len(sol.s),
        "rtol": opts.rtol,
        "atol": opts.atol,
        "x_cap": opts.x_cap,
    }
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
        out["files"].append(args.out)
        print(_dump_json(summary))
    else:
        sys.stdout.write(csv)
    if args.plot:
        x, u, _ = sol.mirrored()
        _lineplot(args.plot, x, u, "x1", "u", f"profile, h={args.h:g}")
    out["results"] = summary
    return 0


def cmd_width(args, out):
    spec = _spec(args)
    hs = _floats(args.h_list, name="--h-list")
    if not hs:
        raise UsageError("--h-list needs at least one height")
    table = width_table(spec, hs, tol=args.tol, workers=_threads())
    csv = "h,half_width,trend\n" + "".join(f"{_fmt(h)},{_fmt(w)},{table.predicted}\n" for h, w in table.rows())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
        out["files"].append(args.out)
    sys.stdout.write(csv)
    if args.plot:
        _lineplot(args.plot, table.heights, table.widths, "h", "half-width", "half-width against height")
    out["results"] = {"predicted": table.predicted, "observed": table.observed, "ties": table.ties, "tol": args.tol}
    return 0


def cmd_hypotheses(args, out):
    spec = _spec(args)
    interval = _floats(args.interval, 2, "--interval") if args.interval else None
    rep = check_hypotheses(spec, interval=interval, reference_height=args.h)
    print(_dump_json(rep.to_dict(), args.out))
    if args.out:
        out["files"].append(args.out)
    out["results"] = rep.to_dict()
    return 0


def cmd_solve(args, out):
    spec = _spec(args)
    x0, x1, y0, y1 = _floats(args.domain, 4, "--domain")
    nx, ny = _ints(args.grid, 2, "--grid")
    profile = integrate_profile(spec, args.h)
    grid = GraphPatch((x0, x1), (y0, y1), np.zeros((nx, ny)))
    M, L = _floats(args.perturb_scales, 2, "--perturb-scales")
    pert = (args.perturb, M, L) if args.perturb else None
    boundary = make_boundary_from_profile(profile, grid, perturbation=pert)
    status = 0
    try:
        patch, rep = solve_graph_equation(spec, grid, boundary, tol=args.tol)
    except NoConvergence as exc:
        patch, rep, status = exc.patch, exc.report, 1
        print(f"error: {exc}", file=sys.stderr)
    report = rep.to_dict()
    report.update({"h": args.h, "domain": [x0, x1, y0, y1], "grid": [nx, ny], "perturbation": args.perturb})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(patch.to_json())
        out["files"].append(args.out)
    text = _dump_json(report, args.report)
    if args.report:
        out["files"].append(args.report)
    print(text)
    if args.plot:
        _heatmap(args.plot, patch, patch.values, "solved heights")
    out["results"] = report
    return status


def _solved_patch(spec, h, n, half, y_range, perturbation=None, tol=None):
    profile = integrate_profile(spec, h)
    xr, yr = _strip_domain(profile, half, y_range)
    grid = GraphPatch(xr, yr, np.zeros((n, n)))
    pert = None
    if perturbation:
        pert = (perturbation, (yr[1] - yr[0]) / 2, xr[1])
    boundary = make_boundary_from_profile(profile, grid, perturbation=pert)
    return solve_graph_equation(spec, grid, boundary, tol=tol)


def cmd_verify(args, out):
    spec = _spec(args)
    suite = args.suite
    y_range = _floats(args.y_range, 2, "--y-range")
    field, patch, title = None, None, None
    if suite == "quotient":
        profile = integrate_profile(spec, args.h)
        fams = [args.family] if args.family else list(UBAR_FAMILIES)
        reps = [quotient_formula_check(perturbed_cylinder_build(profile, f, eps=args.eps), spec, tol=args.tol) for f in fams]
        report = {"families": [r.to_dict() for r in reps]}
        report["max_discrepancy"] = max(r.max_discrepancy for r in reps)
        passed = all(r.passed for r in reps)
    elif suite == "decay":
        profile = integrate_profile(spec, args.h)
        fams = [args.family] if args.family else ["sin_edge", "cubic_cos", "tilted_wave"]
        reps = [decay_bound_check(perturbed_cylinder_build(profile, f, eps=args.eps)) for f in fams]
        report = {"families": dict(zip(fams, (r.to_dict() for r in reps)))}
        passed = all(r.passed for r in reps)
    elif suite == "moving-plane":
        patch, rep = _solved_patch(spec, args.h, args.grid, args.half_length, y_range)
        gaps = moving_plane_check(patch, args.t)
        report = gaps.to_dict()
        report["solve"] = rep.to_dict()
        # t = 0 measures symmetry; t > 0 measures the sign of the gap
        passed = gaps.max_abs_gap <= args.tol if args.t == 0 else gaps.min_gap >= -args.tol
        field = np.zeros(patch.shape)
        field[: gaps.gaps.shape[0]] = gaps.gaps
        title = f"reflection gap, t={args.t:g}"
    elif suite == "extremum":
        patch, rep = _solved_patch(spec, args.h, args.grid, args.half_length, y_range, perturbation=args.perturb)
        ext = eta_quotient_extremum_check(patch, spec, tol=max(rep.tol, 1e-12) * 10, slack=args.tol)
        report = ext.to_dict()
        report["solve"] = rep.to_dict()
        passed = ext.passed
    else:  # identities
        sizes = _ints(args.sizes, name="--sizes")
        norms, last = {}, None
        for n in sizes:
            patch, rep = _solved_patch(spec, args.h, n, args.half_length, y_range, perturbation=args.perturb)
            ring = max(2, round(2 * (n - 1) / (sizes[0] - 1)))
            last = identity_residuals(patch, spec, tol=10 * rep.tol, ring=ring)
            for k, v in last.norms().items():
                norms.setdefault(k, []).append(v)
        orders = {k: [math.log2(a / b) if a > 0 and b > 0 else None for a, b in zip(v, v[1:])] for k, v in norms.items()}
        report = {"sizes": sizes, "norms": norms, "orders": orders, "min_order": args.min_order}
        passed = all(
            (v[-1] <= 1e-9) or (orders[k] and orders[k][-1] is not None and orders[k][-1] >= args.min_order)
            for k, v in norms.items()
        )
        field = last.fields["quotient"]
        title = "quotient identity residual"
    report.update({"suite": suite, "phi": spec.to_config(), "h": args.h, "tol": args.tol, "passed": passed})
    print(_dump_json(report, args.out))
    if args.out:
        out["files"].append(args.out)
    if args.plot and field is not None:
        _heatmap(args.plot, patch, field, title)
    out["results"] = report
    return 0 if passed else 1


def cmd_experiment(args, out):
    spec = _spec(args)
    amps = _floats(args.amps, name="--amps")
    rep = uniqueness_experiment(spec, args.h, n=args.grid, amplitudes=amps, half_length=args.half_length, tol=args.tol)
    report = rep.to_dict()
    report["threshold"] = args.threshold
    report["passed"] = rep.passed(args.threshold)
    print(_dump_json(report, args.out))
    if args.out:
        out["files"].append(args.out)
    out["results"] = report
    return 0 if report["passed"] else 1


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="write a JSON manifest of the run")
    common.add_argument("--plot", help="write an SVG figure")

    phi = argparse.ArgumentParser(add_help=False)
    phi.add_argument("--phi", required=True, help="weight spec as JSON")

    parser = argparse.ArgumentParser(prog="phicat", description=__doc__.split("\n")[0], epilog=SCHEMA, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", parents=[common, phi], help="integrate a catenary profile")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--x-cap", type=float, default=1e3)
    p.add_argument("--out", help="CSV path (summary JSON goes to stdout)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("width", parents=[common, phi], help="tabulate half-widths")
    p.add_argument("--h-list", required=True, help="comma-separated heights")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("hypotheses", parents=[common, phi], help="check the uniqueness hypotheses")
    p.add_argument("--h", type=float, default=None, help="reference height")
    p.add_argument("--interval", help="lo,hi range for the quotient bound")
    p.add_argument("--out")
    p.set_defaults(func=cmd_hypotheses)

    p = sub.add_parser("solve", parents=[common, phi], help="solve the graph equation with profile data")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--domain", required=True, help="x0,x1,y0,y1")
    p.add_argument("--grid", required=True, help="nx,ny")
    p.add_argument("--perturb", type=float, default=0.0, help="boundary perturbation amplitude")
    p.add_argument("--perturb-scales", default="1,1", help="M,L in eps cos(pi x2/M)(1-(x1/L)^2)")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", help="patch JSON path")
    p.add_argument("--report", help="report JSON path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common, phi], help="run a verification suite")
    p.add_argument("--suite", required=True, choices=["quotient", "moving-plane", "decay", "extremum", "identities"])
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--family", choices=UBAR_FAMILIES)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--grid", type=int, default=65)
    p.add_argument("--sizes", default="33,65,129")
    p.add_argument("--half-length", type=float, default=None)
    p.add_argument("--y-range", default="-1,1")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--perturb", type=float, default=0.01)
    p.add_argument("--min-order", type=float, default=1.8)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment")
    esub = p.add_subparsers(dest="experiment", required=True)
    q = esub.add_parser("uniqueness", parents=[common, phi], help="y-invariance of solves from perturbed starts")
    q.add_argument("--h", type=float, default=0.0)
    q.add_argument("--grid", type=int, default=65)
    q.add_argument("--amps", default="0,0.05,0.2")
    q.add_argument("--half-length", type=float, default=None)
    q.add_argument("--tol", type=float, default=1e-11)
    q.add_argument("--threshold", type=float, default=1e-8)
    q.add_argument("--out")
    q.set_defaults(func=cmd_experiment)
    return parser


def _manifest(args, argv, out, status):
    fields = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "plot")}
    return {
        "command": args.command,
        "argv": list(argv),
        "arguments": fields,
        "outputs": out["files"],
        "exit_status": status,
        "results": out.get("results"),
        "versions": {
            "phicat": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "threads": _threads(),
    }


_LIST_FLAGS = ("--domain", "--interval", "--h-list", "--amps", "--y-range", "--sizes")
_NUMBER_LIST = re.compile(r"^-?[\d.]")


def _join_negative_lists(argv):
    # argparse reads "-1,1" as an option; rewrite "--domain -1,1" as "--domain=-1,1"
    out, it = [], iter(argv)
    for tok in it:
        if tok in _LIST_FLAGS:
            nxt = next(it, None)
            if nxt is not None and _NUMBER_LIST.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def _replay(argv):
    if len(argv) != 2:
        raise UsageError("--replay takes exactly one manifest path")
    try:
        with open(argv[1]) as fh:
            return list(json.load(fh)["argv"])
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest {argv[1]!r}: {exc}") from exc


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "--replay":
        try:
            argv = _replay(argv)
        except UsageError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_lists(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    out = {"files": []}
    try:
        status = args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}\n\n{SCHEMA}", file=sys.stderr)
        return 2
    except (PhicatError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 2 if isinstance(exc, ValueError) else 1
    if args.plot and os.path.exists(args.plot):
        out["files"].append(args.plot)
    path = args.manifest or (out["files"][0] + ".manifest.json" if out["files"] else None)
    if path:
        _dump_json(_manifest(args, argv, out, status), path)
    return status


def main():
    sys.exit(run())
