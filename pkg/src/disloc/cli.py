"""Command-line front end: ``disloc run``, ``disloc examples``, ``disloc schema``."""

from __future__ import annotations

import argparse
import json
import math
import sys

from .errors import DislocError, QuadratureError, ScenarioError
from .examples import select_examples
from .runner import SCHEMA_VERSION, Settings, run_scenario
from .scenario import load_scenario, scenario_json_schema

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quadrature-order", type=int, default=5, metavar="N",
                   help="floor on simplex quadrature exactness (default 5)")
    p.add_argument("--fd-step", type=float, default=1e-5, metavar="H",
                   help="relative central-difference step for non-analytic fields (default 1e-5)")
    p.add_argument("--tolerance-scale", type=float, default=1.0, metavar="S",
                   help="multiply every check tolerance by S")
    p.add_argument("--resolution", type=int, default=8, metavar="R",
                   help="mesh and support-grid cells per axis (default 8)")
    p.add_argument("--report", choices=("text", "json"), default="text")
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte-identical JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the checks of a scenario file")
    run.add_argument("file")
    _common(run)
    ex = sub.add_parser("examples", help="run the built-in example scenarios")
    ex.add_argument("--filter", default=None, metavar="ID", help="example id or id fragment")
    _common(ex)
    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def _settings(args) -> Settings:
    if args.quadrature_order < 1:
        raise ScenarioError("--quadrature-order must be >= 1")
    if args.fd_step <= 0 or args.tolerance_scale <= 0:
        raise ScenarioError("--fd-step and --tolerance-scale must be positive")
    if args.resolution < 2:
        raise ScenarioError("--resolution must be >= 2")
    return Settings(args.quadrature_order, args.fd_step, args.tolerance_scale, args.resolution, args.timings)


def _fmt(x) -> str:
    return "n/a" if x is None or not math.isfinite(x) else repr(float(x))


def render_text(report, timings: bool = False) -> str:
    d = report.to_dict(timings)
    head = f"scenario {d['scenario']}"
    if d["topic"]:
        head += f" [{d['topic']}]"
    lines = [f"{head}: {d['verdict'].upper()}"]
    for c in d["checks"]:
        line = (f"  {c['verdict']:4s}  {c['name']}: residual {_fmt(c['residual'])}"
                f" tolerance {_fmt(c['tolerance'])} ({c['rung']}), expected {c['expect']},"
                f" observed {c['observed']}")
        if timings:
            line += f", {c['wall_time']:.3f} s"
        lines.append(line)
        if "error" in c:
            lines.append(f"        error: {c['error']}")
    return "\n".join(lines)


def _worst(report) -> float | None:
    vals = [c.residual for c in report.checks if math.isfinite(c.residual)]
    return max(vals) if vals else None


def render_table(reports) -> str:
    rows = [("example", "topic", "verdict", "residual")]
    for r in reports:
        rows.append((r.scenario_id, r.topic, "pass" if r.passed else "fail", _fmt(_worst(r))))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "schema":
            print(_dump(scenario_json_schema()))
            return EXIT_PASS
        settings = _settings(args)
        if args.command == "run":
            scenarios = [load_scenario(args.file)]
        else:
            scenarios = select_examples(args.filter)
        reports = [run_scenario(sc, settings) for sc in scenarios]
    except (ScenarioError, QuadratureError) as exc:
        print(f"disloc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DislocError as exc:
        print(f"disloc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.report == "json":
        if args.command == "run":
            print(_dump(reports[0].to_dict(settings.timings)))
        else:
            print(_dump({"schema_version": SCHEMA_VERSION,
                         "reports": [r.to_dict(settings.timings) for r in reports]}))
    else:
        if args.command == "examples":
            print(render_table(reports))
            print()
        print("\n\n".join(render_text(r, settings.timings) for r in reports))
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
