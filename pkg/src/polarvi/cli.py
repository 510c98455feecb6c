"""``polarvi`` command-line entry point."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import harness
from .errors import NoConvergence, PolarVIError
from .linalg import vee
from .tableaux import builtin_names

LONG_STEPS = 100_000


def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults are None so that only explicit flags override a scenario file
    p.add_argument("--scenario", help="INI scenario file; explicit flags override its values")
    p.add_argument("--system", choices=harness.SYSTEMS)
    p.add_argument("--method", choices=builtin_names())
    p.add_argument("--h", type=harness.parse_real, help="step size (decimal or fraction, e.g. 1/26)")
    p.add_argument("--steps", type=int)
    p.add_argument("--tol", type=harness.parse_real, help="fixed-point tolerance (default 1e-15)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="fixed-point iteration cap (default 100)")
    p.add_argument("--reduced", action="store_true", default=None, help="use the reduced Lie-Poisson step")
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--out", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarvi", description="Polar-decomposition integrators on SO(3).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and record the full state")
    _add_common(p)

    p = sub.add_parser("energy-drift", help="long run recording energy and orthogonality errors")
    _add_common(p)
    p.add_argument("--long", action="store_true", help=f"run {LONG_STEPS} steps unless --steps is given")

    p = sub.add_parser("order-study", help="endpoint errors against a cached reference over several h")
    _add_common(p)
    p.add_argument("--hs", type=harness.parse_real, nargs="+", help="step sizes (default 1/10 1/14 1/20 1/28)")
    p.add_argument("--T", dest="horizon", type=harness.parse_real, default=0.5, help="horizon (default 0.5)")
    p.add_argument("--window", type=harness.parse_real, nargs=2, metavar=("HMIN", "HMAX"),
                   help="only fit the slope over HMIN <= h <= HMAX")
    p.add_argument("--reference", default="polarvi-reference.json", help="reference cache file")

    p = sub.add_parser("make-reference", help="compute and cache a reference endpoint")
    _add_common(p)
    p.add_argument("--T", dest="horizon", type=harness.parse_real, default=0.5)
    p.add_argument("--reference", default="polarvi-reference.json")
    p.add_argument("--force", action="store_true", help="recompute even if cached")

    p = sub.add_parser("bench", help="time a scenario end to end")
    _add_common(p)
    p.add_argument("--repeats", type=int, default=3)
    return parser


def scenario_from_args(args) -> harness.Scenario:
    sc = harness.load_scenario(args.scenario) if args.scenario else harness.Scenario()
    for key in ("system", "method", "h", "steps", "tol", "max_iter", "reduced", "record_every", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(sc, key, value)
            if key == "method":
                sc.tableau = None
    return sc


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _run(args) -> int:
    sc = scenario_from_args(args)
    cmd = args.command

    if cmd in ("simulate", "energy-drift"):
        if cmd == "energy-drift" and args.long and args.steps is None:
            sc.steps = LONG_STEPS
        sc.validate()
        report = harness.run_scenario(sc, with_state=cmd == "simulate")
        if sc.out:
            harness.write_report_csv(report, sc.out)
        _emit(report.summary)
        return 0

    if cmd == "order-study":
        sc.validate()
        hs = args.hs or list(harness.DEFAULT_ORDER_HS)
        window = tuple(args.window) if args.window else None
        study = harness.run_order_study(sc, hs, args.horizon, window, args.reference)
        if sc.out:
            harness.write_order_csv(study, sc.out)
        _emit({"hs": study.hs, "errors": study.errors, "status": study.status, "slope": study.slope,
               "window": window, "method": sc.method})
        return 0

    if cmd == "make-reference":
        method = args.method or "gl3"
        h = args.h if args.h is not None else 0.001
        base = replace(sc, method=method, h=h, tableau=None).validate()
        end = harness.make_reference(base, args.horizon, method, h, args.reference, force=args.force)
        _emit({"reference": args.reference, "T": args.horizon, "method": method, "h": h,
               "g": end.g.tolist(), "p": vee(end.p).tolist()})
        return 0

    if cmd == "bench":
        sc.validate()
        res = harness.bench(sc, args.repeats)
        _emit({"method": sc.method, "h": sc.h, "steps": res.steps, "repeats": len(res.times),
               "mean_seconds": res.mean, "min_seconds": res.min})
        return 0
    raise AssertionError(cmd)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except NoConvergence as exc:
        print(f"polarvi: solver failure: {exc}", file=sys.stderr)
        return 3
    except (PolarVIError, ValueError, OSError) as exc:
        print(f"polarvi: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
