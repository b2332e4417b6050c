"""Command-line front end: ``tpcurve <subcommand> ...``.

Exit status: 0 success, 1 usage or input error, 2 inconclusive isotopy
certificate, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import _parallel
from .curve_model import SHAPE_KINDS, ShapeSpec, generate, resample_arclength
from .errors import NumericalError, TPCurveError
from .flow import minimize, pull_tight_experiment
from .geometry_analysis import beta_profile, kappa
from .io import csv_text, curve_json, dumps, key_value_csv, read_curve, write_curve, write_text
from .knot_ops import DEFAULT_DELTA, certify_isotopy, inscribe_polygon
from .menger import thickness_details, thickness_limit_check
from .regularity import DEFAULT_CUTOFF, hoelder_fit, verify_main_estimate
from .tp_energy import DEFAULT_EXCLUSION, energy, refine_energy

logger = logging.getLogger("tpcurve")

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def parse_scales(text: str) -> List[float]:
    """``start:stop:geometric[:count]``, ``start:stop:linear[:count]`` or a comma list."""
    if ":" not in text:
        return _float_list(text)
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[2] not in ("geometric", "linear"):
        raise argparse.ArgumentTypeError("scales: expected start:stop:geometric|linear[:count]")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[3]) if len(parts) == 4 else 8
    except ValueError:
        raise argparse.ArgumentTypeError(f"scales: bad number in {text!r}") from None
    if a <= 0 or b <= 0 or n < 3:
        raise argparse.ArgumentTypeError("scales: need positive endpoints and at least 3 values")
    vals = np.geomspace(a, b, n) if parts[2] == "geometric" else np.linspace(a, b, n)
    return [float(v) for v in vals]


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    try:
        val = int(v)
    except ValueError:
        try:
            val = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{k}: not a number: {v!r}") from None
    return k.strip(), val


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    g.add_argument("--seed", type=int, default=0, help="seed for sampled pair sets")
    g.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    g.add_argument("--plot", metavar="SVG", default=None, help="also write an SVG figure to this path")
    g.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    g.add_argument("-v", "--verbose", action="store_true")

    curve_in = _Parser(add_help=False)
    c = curve_in.add_argument_group("curve input")
    c.add_argument("--m", type=int, default=None, help="resample to this many nodes")
    cl = c.add_mutually_exclusive_group()
    cl.add_argument("--closed", dest="closed", action="store_const", const=True, default=None,
                    help="treat a CSV curve as closed (default)")
    cl.add_argument("--open", dest="closed", action="store_const", const=False, help="treat a CSV curve as open")

    p = _Parser(prog="tpcurve", description="Tangent-point energies and curve diagnostics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", parents=[common], help="write a model curve")
    s.add_argument("--shape", required=True, choices=SHAPE_KINDS)
    s.add_argument("--radius", type=float)
    s.add_argument("--samples", type=int)
    s.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                   help="any other shape parameter, repeatable")

    s = sub.add_parser("energy", parents=[common, curve_in], help="discrete tangent-point energy")
    s.add_argument("curve")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--exclude", type=int, default=DEFAULT_EXCLUSION)
    s.add_argument("--diagonal", choices=("fill", "exclude"), default="fill")

    s = sub.add_parser("refine", parents=[common, curve_in], help="energy under refinement")
    s.add_argument("curve")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--levels", type=_int_list, default=[64, 128, 256, 512])
    s.add_argument("--exclude", type=int, default=DEFAULT_EXCLUSION)
    s.add_argument("--diagonal", choices=("fill", "exclude"), default="fill")

    s = sub.add_parser("beta", parents=[common, curve_in], help="beta-number decay profile")
    s.add_argument("curve")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--scales", type=parse_scales, default=parse_scales("0.5:0.05:geometric"))
    s.add_argument("--centers", type=_int_list, default=None, help="node indices (default: spread over the curve)")

    s = sub.add_parser("hoelder", parents=[common, curve_in], help="tangent regularity estimate")
    s.add_argument("curve")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--pairs", type=int, default=200)
    s.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF, help="largest gap as a fraction of L")
    s.add_argument("--anchor", type=float, default=None, help="add pairs straddling this parameter")

    s = sub.add_parser("inscribe", parents=[common, curve_in], help="inscribed polygon with short edges")
    s.add_argument("curve")
    s.add_argument("--spacing", type=float, required=True)

    s = sub.add_parser("certify", parents=[common, curve_in], help="isotopy certificate for two curves")
    s.add_argument("curve_a")
    s.add_argument("curve_b")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--delta", type=float, default=DEFAULT_DELTA)

    s = sub.add_parser("minimize", parents=[common, curve_in], help="fixed-length energy descent")
    s.add_argument("curve")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--iters", type=int, default=2000)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--snapshot-every", type=int, default=50)

    s = sub.add_parser("pulltight", parents=[common], help="energies of knots pulled toward a crossing")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--gaps", type=_float_list, default=[0.2, 0.1, 0.05, 0.025, 0.0125])
    s.add_argument("--m", type=int, default=None)

    s = sub.add_parser("thickness", parents=[common, curve_in], help="thickness and its energy limit")
    s.add_argument("curve")
    s.add_argument("--q-list", type=_float_list, default=[4.0, 8.0, 16.0, 32.0])
    return p


def _load(args, path=None):
    p = read_curve(path or args.curve, args.closed)
    m = args.m if args.m is not None else len(p.points)
    return resample_arclength(p, m)


def _emit(args, report: dict, table=None):
    """Write ``report`` as JSON, or as CSV (``table`` = (header, rows) when given)."""
    if args.format == "csv":
        text = csv_text(*table) if table is not None else key_value_csv(report)
    else:
        text = dumps(report)
    write_text(args.output, text)


def _plotting():
    from . import plotting
    return plotting


def cmd_generate(args):
    params = dict(args.param)
    if args.radius is not None:
        params["radius"] = args.radius
    if args.samples is not None:
        params["samples"] = args.samples
    poly = generate(ShapeSpec(args.shape, params))
    write_curve(args.output, poly, args.format)
    if args.plot:
        _plotting().curve_plot(args.plot, poly.points, poly.closed, args.shape)
    return EXIT_OK


def cmd_energy(args):
    c = _load(args)
    rep = energy(c, args.q, args.exclude, args.diagonal)
    _emit(args, rep.to_dict())
    return EXIT_OK


def cmd_refine(args):
    poly = read_curve(args.curve, args.closed)
    res = refine_energy(poly, args.q, args.levels, args.exclude, args.diagonal)
    rows = [(r.m, r.value) for r in res.reports]
    _emit(args, res.to_dict(), (["m", "energy"], rows))
    if args.plot:
        _plotting().loglog_plot(args.plot, [r[0] for r in rows], [r[1] for r in rows],
                                f"refinement, q = {args.q:g} ({res.verdict})", "nodes m", "energy")
    return EXIT_OK


def cmd_beta(args):
    c = _load(args)
    prof = beta_profile(c, args.q, args.scales, centers=args.centers)
    summary = {"q": args.q, "kappa": kappa(args.q), "fitted_exponent": prof.fitted_exponent,
               "verdict": prof.verdict, "centers": prof.centers, "scales": prof.radii, "sup_beta": prof.sup_beta}
    _emit(args, summary, (["d", "sup_beta"], list(zip(prof.radii, prof.sup_beta))))
    if args.plot:
        _plotting().loglog_plot(args.plot, prof.radii, prof.sup_beta, f"beta decay, q = {args.q:g}",
                                "scale d", "sup beta", slope=prof.fitted_exponent)
    return EXIT_OK


def cmd_hoelder(args):
    c = _load(args)
    est = verify_main_estimate(c, args.q, args.pairs, args.cutoff, seed=args.seed, anchor=args.anchor)
    fit = hoelder_fit(c)
    report = est.to_dict()
    report["hoelder_exponent"] = fit.exponent
    report["hoelder_flags"] = fit.flags
    _emit(args, report)
    if args.plot:
        _plotting().loglog_plot(args.plot, fit.gaps, fit.oscillations, "tangent oscillation", "gap",
                                "max |T(u) - T(v)|", slope=fit.exponent)
    return EXIT_OK


def cmd_inscribe(args):
    c = _load(args)
    poly = inscribe_polygon(c, args.spacing)
    if args.format == "csv":
        write_curve(args.output, poly.to_polyline(), "csv")
    else:
        write_text(args.output, curve_json(poly.to_polyline()))
    if args.plot:
        _plotting().curve_plot(args.plot, poly.vertices, poly.closed, f"N = {poly.N}")
    return EXIT_OK


def cmd_certify(args):
    a = _load(args, args.curve_a)
    b = _load(args, args.curve_b)
    cert = certify_isotopy(a, b, args.q, args.delta, m=args.m)
    _emit(args, cert.to_dict())
    return EXIT_OK if cert.verdict == "certified" else EXIT_INCONCLUSIVE


def cmd_minimize(args):
    if not args.output:
        raise UsageError("minimize: -o TRACE_DIR is required")
    c = _load(args)
    trace = minimize(c, args.q, args.iters, args.tol, snapshot_every=args.snapshot_every)
    out = args.output
    os.makedirs(out, exist_ok=True)
    for k, it in enumerate(trace.iterates):
        write_curve(os.path.join(out, f"iterate_{k:04d}.json"), it, "json")
    rows = [(k, e, trace.step_sizes[k - 1] if k else 0.0, trace.length_residuals[k - 1] if k else 0.0)
            for k, e in enumerate(trace.energies)]
    write_text(os.path.join(out, "energies.csv"), csv_text(["step", "energy", "step_size", "length_residual"], rows))
    summary = trace.summary()
    summary["iterate_steps"] = trace.iterate_steps
    write_text(os.path.join(out, "summary.json"), dumps(summary))
    if args.plot:
        _plotting().series_plot(args.plot, list(range(len(trace.energies))), trace.energies,
                                f"descent, q = {args.q:g}", "accepted step", "energy")
    return EXIT_OK


def cmd_pulltight(args):
    res = pull_tight_experiment(args.gaps, args.q, m=args.m)
    rows = list(zip(res.gaps, res.closest_approach, res.energies))
    _emit(args, res.to_dict(), (["gap", "closest_approach", "energy"], rows))
    if args.plot:
        _plotting().loglog_plot(args.plot, res.gaps, res.energies, f"pull tight, q = {args.q:g} ({res.verdict})",
                                "gap", "energy", slope=res.slope)
    return EXIT_OK


def cmd_thickness(args):
    c = _load(args)
    det = thickness_details(c) if c.closed else None
    rows = thickness_limit_check(c, args.q_list)
    report = {"thickness": det.radius if det else math.inf,
              "params": list(det.params) if det else [], "limit": rows}
    table = (["q", "energy_root", "normalized", "inverse_thickness"],
             [(r["q"], r["energy_root"], r["normalized"], r["inverse_thickness"]) for r in rows])
    _emit(args, report, table)
    if args.plot:
        _plotting().series_plot(args.plot, [r["q"] for r in rows], [r["energy_root"] for r in rows],
                                "E_q^(1/q)", "q", "E_q^(1/q)")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate, "energy": cmd_energy, "refine": cmd_refine, "beta": cmd_beta,
    "hoelder": cmd_hoelder, "inscribe": cmd_inscribe, "certify": cmd_certify, "minimize": cmd_minimize,
    "pulltight": cmd_pulltight, "thickness": cmd_thickness,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"tpcurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("tpcurve: error: --threads: must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    _parallel.set_threads(args.threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tpcurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"tpcurve: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TPCurveError as exc:
        print(f"tpcurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
