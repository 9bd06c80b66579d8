"""Command-line entry point: ``beamfatigue {simulate,verify,converge,floor,scenarios}``.

Failures exit nonzero and print a JSON report on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, SimulationConfig, load_config, shipped_scenarios
from .expressions import ExpressionError

EXIT_FAIL = 1
EXIT_USAGE = 2


def _resolve(path_or_name: str) -> Path:
    """A file path, or the name of a shipped scenario (``default``, ``recovery``, ...)."""
    p = Path(path_or_name)
    if p.exists():
        return p
    shipped = shipped_scenarios()
    key = p.stem if p.suffix == ".cfg" else path_or_name
    if key in shipped:
        return shipped[key]
    raise FileNotFoundError(f"no such config file or shipped scenario: {path_or_name}")


def _load(args) -> SimulationConfig:
    cfg = load_config(_resolve(args.config))
    if getattr(args, "threads", None):
        cfg = cfg.with_(threads=args.threads)
    return cfg


def _fail(kind: str, message: str, **extra) -> int:
    doc = {"status": "error", "kind": kind, "message": message}
    doc.update(extra)
    print(json.dumps(doc, indent=2, default=str), file=sys.stderr)
    return EXIT_FAIL


def cmd_simulate(args) -> int:
    from .integrator import run
    from .output import export_series

    cfg = _load(args)
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    traj = run(cfg, raise_on_failure=False)
    files = export_series(traj, out, plots=cfg.plots and not args.no_plots)
    for name, path in files.items():
        print(f"{name}: {path}")
    if traj.failure:
        return _fail("step_failure", traj.failure, steps_completed=len(traj.reports),
                     output=str(out))
    return 0


def cmd_verify(args) -> int:
    from .verification import verify

    cfg = _load(args)
    report = verify(cfg, cfg.threads)
    doc = report.as_dict()
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    if args.report:
        Path(args.report).write_text(json.dumps(doc, indent=2, default=str) + "\n")
    if not report.passed:
        return _fail("verification", f"{len(report.failures())} check(s) failed",
                     failed=[c.name for c in report.failures()], report=doc)
    return 0


def cmd_converge(args) -> int:
    from .verification import convergence_csv, converge

    cfg = _load(args)
    try:
        grids = [int(g) for g in args.grids.split(",") if g.strip()]
    except ValueError:
        return _fail("usage", f"--grids must be comma-separated integers, got {args.grids!r}")
    if len(grids) < 2:
        return _fail("usage", "--grids needs at least two grid sizes")
    rows = converge(cfg, grids, args.field, cfg.threads)
    text = convergence_csv(rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "convergence.csv").write_text(text)
        if not args.no_plots:
            from .plotting import plot_series
            plot_series([r.n for r in rows], {"metric": [r.metric for r in rows],
                                              "Neumann functional": [r.neumann for r in rows]},
                        out / "convergence.svg", xlabel="n", logx=True, logy=True)
    metrics = [r.metric for r in rows]
    if not all(a > b for a, b in zip(metrics, metrics[1:])):
        return _fail("convergence", "metric does not decrease with n", metrics=metrics)
    return 0


def cmd_floor(args) -> int:
    from .integrator import run
    from .verification import floor_series

    cfg = _load(args)
    traj = run(cfg, raise_on_failure=False)
    data = floor_series(traj)
    lines = ["t,floor,min_theta,margin"]
    lines += [",".join(repr(float(v)) for v in row) for row in data]
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "floor.csv").write_text(text)
        if not args.no_plots and len(data):
            from .plotting import plot_series
            plot_series(data[:, 0], {"floor p(t)": data[:, 1], "min theta": data[:, 2]},
                        out / "floor.svg", xlabel="t", ylabel="temperature")
    else:
        sys.stdout.write(text)
    if traj.failure:
        return _fail("step_failure", traj.failure)
    if len(data) and np.min(data[:, 3]) < 0:
        print(f"note: floor undershoot {-np.min(data[:, 3])!r} at dt = {cfg.dt}", file=sys.stderr)
    return 0


def cmd_scenarios(args) -> int:
    for name, path in shipped_scenarios().items():
        print(f"{name}\t{path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beamfatigue",
                                 description="Thermo-visco-elasto-plastic beam with fatigue "
                                             "and melting-driven recovery.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario file, or a shipped scenario name")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for independent runs (SIM_THREADS overrides)")

    p = sub.add_parser("simulate", help="run a scenario and write CSV, JSON and SVG output")
    common(p)
    p.add_argument("--out", help="output directory (default: from the config)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the invariant suite; exit 0 iff every check passes")
    common(p)
    p.add_argument("--report", help="also write the JSON report to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="grid refinement table")
    common(p)
    p.add_argument("--grids", default="8,16,32")
    p.add_argument("--field", default="w", choices=("u", "w", "eps", "theta", "m", "chi"))
    p.add_argument("--out", help="directory for convergence.csv and convergence.svg")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("floor", help="temperature floor p(t) against min theta")
    common(p)
    p.add_argument("--out", help="directory for floor.csv and floor.svg (default: stdout)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_floor)

    p = sub.add_parser("scenarios", help="list the shipped scenarios")
    p.set_defaults(func=cmd_scenarios)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", "invalid configuration", source=exc.source, problems=exc.problems)
    except ExpressionError as exc:
        return _fail("expression", str(exc), offset=exc.offset)
    except (FileNotFoundError, OSError) as exc:
        return _fail("io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
