"""Command-line interface.

Subcommands: simulate, verify-solution, match-cauchy, benchmark, export.
Exit codes: 0 success, 1 numerical failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import InputError, NumericalError, RodSimError
from .scenarios import ScenarioConfig, Trajectory, run_scenario
from .solution_family import (
    CauchyTrace,
    family_to_json,
    match_boundary_trace,
    verify_trace_match,
)
from .verify import build_report

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodsim",
        description="Planar Kirchhoff rod simulator with a semi-analytic scheme.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single-cilium or carpet scenario")
    p.add_argument("config", help="scenario config JSON file")
    p.add_argument("--out", help="output path (overrides config output.path)")

    p = sub.add_parser(
        "verify-solution",
        help="run the analytic and reduction verification chains",
    )
    p.add_argument("--grid", type=int, default=101, help="nodes per direction")
    p.add_argument("--dt", type=float, default=1e-2, help="time spacing")
    p.add_argument("--seed", type=int, default=0, help="family draw seed")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser(
        "match-cauchy", help="fit the solution family to boundary-trace data"
    )
    p.add_argument("data_spec", help="trace data JSON file")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("benchmark", help="stability and speed comparison")
    p.add_argument("config", help="scenario config JSON file")
    p.add_argument("--horizon", type=float, default=2.0,
                   help="assessment horizon for the stability search")
    p.add_argument("--dt-min", type=float, default=1e-7)
    p.add_argument("--dt-max", type=float, default=1e-1)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("export", help="convert a trajectory file")
    p.add_argument("trajectory", help="trajectory file (JSON or CSV)")
    p.add_argument("--format", required=True, choices=("csv", "json"))
    p.add_argument("--out", help="output path (default: stdout)")
    return parser


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _trace_fn(spec, name):
    if not isinstance(spec, dict):
        raise InputError(f"trace {name} must be an object")
    unknown = set(spec) - {"const", "cos"}
    if unknown:
        raise InputError(f"unknown keys in trace {name}: {sorted(unknown)}")
    const = float(spec.get("const", 0.0))
    cos = spec.get("cos")
    if cos is None:
        return lambda t: const
    unknown = set(cos) - {"amp", "freq", "phase"}
    if unknown:
        raise InputError(f"unknown keys in trace {name}.cos: {sorted(unknown)}")
    amp = float(cos.get("amp", 1.0))
    freq = float(cos.get("freq", 1.0))
    phase = float(cos.get("phase", 0.0))
    return lambda t: const + amp * np.cos(freq * t + phase)


def _cmd_simulate(args) -> int:
    config = ScenarioConfig.from_json(_read(args.config))
    out_path = args.out or config.output.path
    from .errors import InstabilityError

    try:
        trajectory = run_scenario(config)
        failed = False
    except InstabilityError as err:
        trajectory = err.partial
        failed = True
        print(f"error: {err}", file=sys.stderr)
    text = (
        trajectory.to_csv()
        if config.output.format == "csv"
        else trajectory.to_json()
    )
    _emit(text, out_path or ("run.traj.csv" if config.output.format == "csv"
                             else "run.traj.json"))
    return 1 if failed else 0


def _cmd_verify(args) -> int:
    report = build_report(seed=args.seed, n_nodes=args.grid, dt=args.dt)
    _emit(json.dumps(report, indent=2), args.out)
    return 0 if report["pass"] else 1


def _cmd_match_cauchy(args) -> int:
    doc = json.loads(_read(args.data_spec))
    if not isinstance(doc, dict):
        raise InputError("data spec must be a JSON object")
    unknown = set(doc) - {"v1", "w1", "k1", "v2_origin", "u_max", "steps"}
    if unknown:
        raise InputError(f"unknown data-spec keys: {sorted(unknown)}")
    for key in ("v1", "w1", "k1", "v2_origin"):
        if key not in doc:
            raise InputError(f"data spec is missing {key!r}")
    trace = CauchyTrace(
        v1_trace=_trace_fn(doc["v1"], "v1"),
        w1_trace=_trace_fn(doc["w1"], "w1"),
        k1_trace=_trace_fn(doc["k1"], "k1"),
        v2_origin=float(doc["v2_origin"]),
    )
    u_max = float(doc.get("u_max", 0.5))
    steps = int(doc.get("steps", 1000))
    fam = match_boundary_trace(trace, u_max, steps)
    samples = np.linspace(0.0, u_max, 33)
    residual = verify_trace_match(fam, trace, samples)
    report = {
        "u_max": u_max,
        "steps": steps,
        "round_trip_residual": residual,
        "family": json.loads(family_to_json(fam)),
    }
    _emit(json.dumps(report, indent=2), args.out)
    return 0


def _cmd_benchmark(args) -> int:
    config = ScenarioConfig.from_json(_read(args.config))
    from .scenarios import benchmark_stability

    report = benchmark_stability(
        config, horizon=args.horizon, dt_bounds=(args.dt_min, args.dt_max)
    )
    _emit(json.dumps(report, indent=2), args.out)
    return 0


def _cmd_export(args) -> int:
    text = _read(args.trajectory)
    if text.lstrip().startswith("{"):
        trajectory = Trajectory.from_json(text)
    else:
        trajectory = Trajectory.from_csv(text)
    out = trajectory.to_csv() if args.format == "csv" else trajectory.to_json()
    _emit(out, args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "verify-solution": _cmd_verify,
    "match-cauchy": _cmd_match_cauchy,
    "benchmark": _cmd_benchmark,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as err:
        print(f"error: malformed JSON: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except RodSimError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
