"""Command-line interface: gen-cases, run, report, stats, render."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import bench
from .builtin_cases import builtin_cases
from .errors import PhysloopError
from .geometry import parse_program
from .loadcase import parse_load_case
from .meshing import surface_mesh, tetrahedralize, voxelize
from .pipeline import analysis_bounds
from .render import ViewSpec, encode_ppm, render_view


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="physloop",
        description="physics-in-the-loop generative structural design benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-cases", help="write the built-in load cases as JSON files")
    p_gen.add_argument("--out", required=True, help="output directory")

    p_run = sub.add_parser("run", help="execute a benchmark sweep")
    p_run.add_argument("--config", help="JSON config file (flags override it)")
    p_run.add_argument("--cases", help="'builtin' or a directory of case files")
    p_run.add_argument("--backend", choices=["heuristic", "mock", "http"])
    p_run.add_argument("--model", dest="model_id", help="model identifier for records")
    p_run.add_argument("--provider", choices=["generic", "anthropic", "openai"])
    p_run.add_argument("--endpoint", help="chat endpoint URL for the http backend")
    p_run.add_argument("--credential-env", dest="credential_env",
                       help="environment variable holding the API credential")
    p_run.add_argument("--mock-responses", dest="mock_responses",
                       help="JSON file with the scripted response list")
    p_run.add_argument("--runs", dest="runs_per_case", type=int)
    p_run.add_argument("--max-iters", dest="max_iterations", type=int)
    p_run.add_argument("--resolution", type=int)
    p_run.add_argument("--out")
    p_run.add_argument("--parallel", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--geom-scales", dest="geom_scales",
                       help="comma-separated geometric scale factors")
    p_run.add_argument("--force-scales", dest="force_scales",
                       help="comma-separated force scale factors")
    p_run.add_argument("--disable-fea-feedback", dest="disable_fea_feedback",
                       action="store_true", default=None,
                       help="run FEA for metrics but keep its numbers out of prompts")
    p_run.add_argument("--single-agent", dest="single_agent",
                       action="store_true", default=None,
                       help="planner/reviewer ablation: one engineer with raw tool output")
    p_run.add_argument("--no-artifacts", dest="save_artifacts",
                       action="store_false", default=None,
                       help="skip writing renders and transcripts")

    p_rep = sub.add_parser("report", help="aggregate a results file into metric tables")
    p_rep.add_argument("results", help="results.jsonl path")
    p_rep.add_argument("--json-out", help="also write the report as JSON")

    p_stats = sub.add_parser("stats", help="statistical tests between result files")
    p_stats.add_argument("results", nargs="+", help="two files: Fisher + Welch; more: Kruskal-Wallis")
    p_stats.add_argument("--json-out", help="also write the test report as JSON")

    p_render = sub.add_parser("render", help="render load-case views (optionally with a design)")
    p_render.add_argument("--case", required=True,
                          help="problem id of a built-in case, or a case JSON file")
    p_render.add_argument("--program", help="geometry-program JSON file to voxelize and show")
    p_render.add_argument("--out", required=True, help="output directory for PPM files")
    p_render.add_argument("--size", type=int, default=512)
    p_render.add_argument("--resolution", type=int, default=48)
    return parser


def _bench_config(args: argparse.Namespace) -> bench.BenchConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text()))
    valid = {f.name for f in fields(bench.BenchConfig)}
    for key, value in vars(args).items():
        if key in valid and value is not None:
            data[key] = value
    for key in ("geom_scales", "force_scales"):
        if isinstance(data.get(key), str):
            data[key] = tuple(float(v) for v in data[key].split(","))
    return bench.BenchConfig.from_json(data)


def _resolve_case(spec: str):
    path = Path(spec)
    if path.exists():
        return parse_load_case(path.read_text())
    for case in builtin_cases():
        if case.problem_id == spec:
            return case
    raise PhysloopError(f"'{spec}' is neither a case file nor a built-in problem id")


def _cmd_render(args: argparse.Namespace) -> int:
    case = _resolve_case(args.case)
    mesh = None
    if args.program:
        program = parse_program(Path(args.program).read_text())
        grid = voxelize(program.contains_points, analysis_bounds(case), args.resolution)
        if grid.occupied_count:
            mesh = surface_mesh(tetrahedralize(grid))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for direction in ("+x", "+y", "+z", "iso"):
        image = render_view(
            mesh, case, ViewSpec(direction=direction, width=args.size, height=args.size)
        )
        name = direction.replace("+", "p").replace("-", "m")
        (out / f"view_{name}.ppm").write_bytes(encode_ppm(image))
    print(f"wrote 4 views to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-cases":
            written = bench.gen_cases(args.out)
            print(f"wrote {len(written)} files to {args.out}")
            return 0
        if args.command == "run":
            config = _bench_config(args)
            results = bench.run(config)
            print(f"results in {results}")
            return 0
        if args.command == "report":
            text, data = bench.report(args.results)
            print(text)
            if args.json_out:
                Path(args.json_out).write_text(json.dumps(data, indent=2) + "\n")
            return 0
        if args.command == "stats":
            text, data = bench.stats(args.results)
            print(text)
            if args.json_out:
                Path(args.json_out).write_text(json.dumps(data, indent=2) + "\n")
            return 0
        if args.command == "render":
            return _cmd_render(args)
    except PhysloopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
