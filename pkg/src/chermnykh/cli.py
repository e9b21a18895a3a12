"""
Command-line front end: ``python -m chermnykh <subcommand> [options]``.

Exit codes: 0 success, 1 numerical failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dynamics, equilibria, stability, zvc
from .model import DomainError, ModelInputs, PhaseState, derive_params, load_preset

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2

DEFAULTS = dict(mu=0.025, q1=1.0, A2=0.0, Mb=0.0, T=0.01, cd=1.0e4)
TABLE1_MB = 0.2
PRESET_DIR = Path(__file__).parent / "presets"


class UsageError(Exception):
    pass


def _threads():
    """Worker cap from CHERMNYKH_THREADS (default 1: serial)."""
    value = os.environ.get("CHERMNYKH_THREADS", "").strip()
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise UsageError(f"CHERMNYKH_THREADS must be an integer, got {value!r}") from None


def _model_args(parser):
    g = parser.add_argument_group("model parameters")
    g.add_argument("--preset", help="shipped preset name (sun-earth) or a key=value file")
    g.add_argument("--mu", type=float)
    g.add_argument("--q1", type=float)
    g.add_argument("--a2", dest="A2", type=float)
    g.add_argument("--mb", dest="Mb", type=float)
    g.add_argument("--t", dest="T", type=float)
    g.add_argument("--cd", type=float)


def _output_args(parser, formats=("csv", "json")):
    parser.add_argument("--out", help="output directory (default: print to stdout)")
    parser.add_argument("--format", choices=formats, default=formats[0])


def _overrides(args):
    return {k: getattr(args, k) for k in DEFAULTS if getattr(args, k, None) is not None}


def build_inputs(args):
    """Merge defaults, an optional preset and explicit flags; validates before returning."""
    values = dict(DEFAULTS)
    if args.preset:
        path = PRESET_DIR / f"{args.preset}.txt"
        if not path.is_file():
            path = Path(args.preset)
        try:
            base = load_preset(path)
        except (OSError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise UsageError(f"cannot read preset {args.preset}: {exc}") from exc
        values.update({k: getattr(base, k) for k in DEFAULTS})
    values.update(_overrides(args))
    return ModelInputs(**values).validate()


def _emit(args, name, text):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.write_text(text, newline="")
        print(path)
    else:
        sys.stdout.write(text)


def cmd_equilibria(args):
    p = derive_params(build_inputs(args))
    points = equilibria.find_all(p, mode=args.seed_mode)
    classes = [{"stability": stability.stability_report(p, e).stability} for e in points]
    if args.format == "json":
        _emit(args, "equilibria.json", equilibria.to_json(points, classes) + "\n")
    else:
        _emit(args, "equilibria.csv", equilibria.to_csv(points, classes))
    return EXIT_OK


def cmd_stability(args):
    p = derive_params(build_inputs(args))
    points = equilibria.find_all(p, mode=args.seed_mode)
    if args.family:
        points = [e for e in points if e.family in args.family]
    reports = [stability.stability_report(p, e) for e in points]
    _emit(args, "stability.json", stability.reports_to_json(reports) + "\n")
    return EXIT_OK


def _parse_bbox(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--bbox expects xmin,xmax,ymin,ymax, got {text!r}") from None
    if len(vals) != 4 or not (vals[1] > vals[0] and vals[3] > vals[2]):
        raise UsageError(f"--bbox expects xmin,xmax,ymin,ymax with min < max, got {text!r}")
    return vals


def cmd_zvc(args):
    p = derive_params(build_inputs(args))
    bbox = _parse_bbox(args.bbox)
    g = zvc.sample_grid(p, bbox, args.grid)
    if args.level:
        levels = list(args.level)
        note = "user levels"
    else:
        small, large = _offsets(args)
        res = zvc.classify_ovals(p, grid=g, small=small, large=large)
        base = [r.jacobi for r in res.values() if r.jacobi is not None]
        if not base:
            raise UsageError("no triangular minimum to derive levels from; pass --level")
        c = min(base)
        levels = [c + small, c + large]
        note = f"levels = C(L4/5) + ({small}, {large}), C = {c!r}"
    sets = [zvc.extract_contours(g, lv) for lv in levels]
    if args.format == "svg":
        pts = []
        for fam in ("L4", "L5"):
            try:
                e = equilibria.find_family(p, fam)
                pts.append((fam, e.x, e.y))
            except equilibria.ConvergenceError:
                pass
        _emit(args, "zvc.svg", zvc.contours_to_svg(sets, bbox, p.primaries, pts))
    else:
        text = f"# {note}\n" if not args.no_metadata else ""
        for k, cs in enumerate(sets):
            text += f"# level {k}: {cs.level!r}\n" if not args.no_metadata else ""
            text += zvc.contours_to_csv(cs)
        _emit(args, "zvc.csv", text)
    return EXIT_OK


def cmd_integrate(args):
    p = derive_params(build_inputs(args))
    init = PhaseState(args.x, args.y, args.vx, args.vy, 0.0)
    traj = dynamics.integrate(p, init, args.t_end, tol=args.tol, stride=args.stride)
    _emit(args, "trajectory.csv", traj.to_csv())
    drift, residual = dynamics.drift_report(p, traj)
    print(f"max |dC| = {drift:.3e}; dC/dt residual = {residual:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_table1(args):
    overrides = _overrides(args)
    if "q1" in overrides or "A2" in overrides:
        raise UsageError("table1 sweeps q1 and A2 itself; use --mu, --mb, --t, --cd only")
    inputs = build_inputs(args)
    # frames A-C use a belt of mass 0.2 unless --mb says otherwise
    mb = overrides.get("Mb", TABLE1_MB)
    small, large = _offsets(args)
    frames = zvc.table1(
        small=small, large=large, mu=inputs.mu, T=inputs.T, Mb=mb, cd=inputs.cd, nx=args.grid,
        bbox=_parse_bbox(args.bbox), workers=_threads(),
    )
    if args.format == "json":
        rows = [{k: v for k, v in f.items() if k not in ("L4", "L5")} for f in frames]
        _emit(args, "table1.json", json.dumps(rows, indent=2) + "\n")
    elif args.format == "csv":
        lines = ["frame,column,q1,A2,Mb,label"]
        lines += [f"{f['frame']},{f['column']},{f['q1']!r},{f['A2']!r},{f['Mb']!r},{f['label']}"
                  for f in frames]
        _emit(args, "table1.csv", "\r\n".join(lines) + "\r\n")
    else:
        text = f"{'frame':<6}{'I':>12}{'II':>12}{'III':>12}\n"
        for row in ("A", "B", "C", "D"):
            labels = [f["label"] for f in frames if f["frame"] == row]
            text += f"{row:<6}" + "".join(f"{lb:>12}" for lb in labels) + "\n"
        _emit(args, "table1.txt", text)
    return EXIT_OK


def cmd_routh(args):
    if _overrides(args) or args.preset:
        raise UsageError("routh works in the classical problem only (q1=1, A2=Mb=0, mu scanned); "
                         "model flags are not accepted")
    mu_crit = stability.routh_boundary(tol=args.tol)
    _emit(args, "routh.txt", f"{mu_crit:.7f}\n")
    if args.out:
        print(f"{mu_crit:.7f}")
    return EXIT_OK


def _offset_args(parser):
    parser.add_argument("--small-offset", type=float, default=zvc.SMALL_OFFSET,
                        help="level above C(L4/5) at which any oval counts as very-small")
    parser.add_argument("--large-offset", type=float, default=zvc.LARGE_OFFSET,
                        help="level above C(L4/5) an oval must persist to for yes")


def _offsets(args):
    if not 0.0 < args.small_offset < args.large_offset:
        raise UsageError("need 0 < --small-offset < --large-offset")
    return args.small_offset, args.large_offset


def build_parser():
    parser = argparse.ArgumentParser(prog="chermnykh", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibria", help="five equilibrium points with residuals and stability")
    _model_args(p)
    _output_args(p)
    p.add_argument("--seed-mode", choices=("paper", "classical"), default="paper")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("stability", help="JSON stability reports")
    _model_args(p)
    _output_args(p, ("json",))
    p.add_argument("--seed-mode", choices=("paper", "classical"), default="paper")
    p.add_argument("--family", action="append", choices=equilibria.FAMILIES)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("zvc", help="zero-velocity contours")
    _model_args(p)
    _output_args(p, ("csv", "svg"))
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--bbox", default="-1.6,1.6,-1.6,1.6")
    p.add_argument("--level", type=float, action="append")
    p.add_argument("--no-metadata", action="store_true", help="omit comment lines from CSV output")
    _offset_args(p)
    p.set_defaults(func=cmd_zvc)

    p = sub.add_parser("integrate", help="trajectory of the full equations of motion")
    _model_args(p)
    _output_args(p, ("csv",))
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--vx", type=float, default=0.0)
    p.add_argument("--vy", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--stride", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("table1", help="oval classification grid (frames A-D)")
    _model_args(p)
    _output_args(p, ("txt", "csv", "json"))
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--bbox", default="-1.6,1.6,-1.6,1.6")
    _offset_args(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("routh", help="critical mass ratio of classical L4")
    _model_args(p)
    _output_args(p, ("txt",))
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_routh)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DomainError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (equilibria.ConvergenceError, dynamics.CollisionError, dynamics.StepUnderflowError,
            ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
