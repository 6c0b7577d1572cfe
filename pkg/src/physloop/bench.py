"""Benchmark harness: configuration, case generation, runs, reports, stats.

Runs are appended to a JSONL results file (one RunRecord per line) so a
crashed or interrupted sweep resumes where it stopped: already-present
(model, case, variant, seed) tuples are skipped. Renders, programs and
transcripts land in a per-run directory tree next to the results file.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

from .agents.backends import AgentBackend, ScriptedBackend, HttpBackend
from .agents.heuristic import HeuristicBackend
from .agents.loop import LoopConfig, run_pipeline
from .builtin_cases import builtin_cases
from .errors import BackendUnavailable, EmptyResults
from .fem import Material
from .loadcase import (
    FORCE_SCALES,
    GEOM_SCALES,
    LoadCase,
    VariantSpec,
    apply_variant,
    parse_load_case,
    serialize_load_case,
    variant_label,
)
from .metrics import (
    RunRecord,
    design_quality,
    failure_event_histogram,
    failure_histogram,
    fisher_exact,
    fisher_exact_one_sided,
    kruskal_wallis,
    process_efficiency,
    reliability,
    welch_t,
)
from .pipeline import DEFAULT_RESOLUTION
from .validators import FAILURE_CATEGORIES


@dataclass
class BenchConfig:
    cases: str = "builtin"  # "builtin" or a directory of load-case JSON files
    backend: str = "heuristic"  # heuristic | mock | http
    model_id: str = ""  # defaults to the backend name
    provider: str = "generic"
    endpoint: str = ""
    credential_env: str = ""
    mock_responses: str = ""  # path to a JSON array of scripted responses
    runs_per_case: int = 3
    max_iterations: int = 10
    resolution: int = DEFAULT_RESOLUTION
    youngs_modulus_mpa: float = 70000.0
    poisson_ratio: float = 0.33
    yield_strength_mpa: float = 250.0
    sf_min: float = 2.0
    sf_max: float = 5.0
    geom_scales: tuple[float, ...] = GEOM_SCALES
    force_scales: tuple[float, ...] = FORCE_SCALES
    out: str = "bench_out"
    parallel: int = 1
    seed: int = 0
    disable_fea_feedback: bool = False
    single_agent: bool = False
    save_artifacts: bool = True
    render_size: int = 256

    @classmethod
    def from_json(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("geom_scales", "force_scales"):
            if key in coerced:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)

    def material(self) -> Material:
        return Material(
            youngs_modulus=self.youngs_modulus_mpa,
            poisson_ratio=self.poisson_ratio,
            yield_strength=self.yield_strength_mpa,
        )

    def effective_model_id(self) -> str:
        return self.model_id or self.backend

    def __post_init__(self):
        if self.runs_per_case < 1:
            raise ValueError("runs_per_case must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def load_cases(config: BenchConfig) -> list[LoadCase]:
    if config.cases == "builtin":
        return builtin_cases()
    case_dir = Path(config.cases)
    paths = sorted(case_dir.glob("*.json"))
    paths = [p for p in paths if p.name != "manifest.json"]
    if not paths:
        raise FileNotFoundError(f"no load-case JSON files under {case_dir}")
    return [parse_load_case(p.read_text()) for p in paths]


def gen_cases(out_dir: str | Path) -> list[Path]:
    """Write the 20 built-in cases plus a manifest of all 500 variants."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    cases = builtin_cases()
    for case in cases:
        path = out / f"{case.problem_id}.json"
        path.write_text(serialize_load_case(case) + "\n")
        written.append(path)
    configurations = [
        {"problem_id": case.problem_id, "geom_scale": g, "force_scale": f}
        for case in cases
        for g in GEOM_SCALES
        for f in FORCE_SCALES
    ]
    manifest = {
        "case_count": len(cases),
        "geom_scales": list(GEOM_SCALES),
        "force_scales": list(FORCE_SCALES),
        "configuration_count": len(configurations),
        "configurations": configurations,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    written.append(manifest_path)
    return written


def _backend_factory(config: BenchConfig) -> Callable[[], AgentBackend]:
    """Fresh backend per run, so no conversation state leaks across runs."""
    if config.backend == "heuristic":
        return HeuristicBackend
    if config.backend == "mock":
        responses_path = Path(config.mock_responses)
        responses = json.loads(responses_path.read_text())
        return lambda: ScriptedBackend(responses)
    if config.backend == "http":
        if not config.endpoint:
            raise ValueError("http backend requires an endpoint")
        return lambda: HttpBackend(
            endpoint=config.endpoint,
            provider=config.provider,
            credential_env=config.credential_env or None,
        )
    raise ValueError(f"unknown backend '{config.backend}'")


def _run_key(model_id: str, problem_id: str, variant: VariantSpec, seed: int) -> tuple:
    return (model_id, problem_id, variant_label(variant), seed)


def read_records(results_path: str | Path) -> list[RunRecord]:
    path = Path(results_path)
    records = []
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                records.append(RunRecord.from_json(json.loads(line)))
    return records


def run(config: BenchConfig) -> Path:
    """Execute the configured sweep; returns the results-file path."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.jsonl"
    done = {_run_key(r.model_id, r.problem_id, r.variant, r.run_seed) for r in read_records(results_path)}

    cases = load_cases(config)
    factory = _backend_factory(config)
    model_id = config.effective_model_id()
    deterministic = config.backend in ("heuristic", "mock")

    jobs = []
    for case in cases:
        for g in config.geom_scales:
            for f in config.force_scales:
                variant = VariantSpec(geom_scale=g, force_scale=f)
                for run_idx in range(config.runs_per_case):
                    seed = config.seed + run_idx
                    if _run_key(model_id, case.problem_id, variant, seed) in done:
                        continue
                    jobs.append((case, variant, seed))

    write_lock = threading.Lock()
    failures: list[str] = []

    def execute(job):
        case, variant, seed = job
        scaled = apply_variant(case, variant)
        artifact_dir = None
        if config.save_artifacts:
            artifact_dir = (
                out / model_id / case.problem_id / variant_label(variant) / f"run{seed}"
            )
        loop_config = LoopConfig(
            model_id=model_id,
            max_iterations=config.max_iterations,
            resolution=config.resolution,
            material=config.material(),
            sf_range=(config.sf_min, config.sf_max),
            physics_feedback=not config.disable_fea_feedback,
            single_agent=config.single_agent,
            run_seed=seed,
            variant=variant,
            render_size=config.render_size,
            deterministic_timing=deterministic,
            artifact_dir=artifact_dir,
        )
        try:
            record = run_pipeline(scaled, factory(), loop_config)
        except BackendUnavailable as exc:
            # infrastructure failure: the run is dropped, not recorded as a
            # design failure, and the sweep continues
            with write_lock:
                failures.append(f"{case.problem_id}/{variant_label(variant)}/run{seed}: {exc}")
            return
        with write_lock:
            with results_path.open("a") as fh:
                fh.write(json.dumps(record.to_json()) + "\n")

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            list(pool.map(execute, jobs))
    else:
        for job in jobs:
            execute(job)

    if failures:
        (out / "backend_failures.log").write_text("\n".join(failures) + "\n")
    return results_path


# -- reporting ---------------------------------------------------------------


def _fmt(value, width=7, percent=False) -> str:
    if value is None:
        return "-".rjust(width)
    if percent:
        return f"{value:.1f}%".rjust(width)
    return f"{value:.2f}".rjust(width)


def build_report(records: Sequence[RunRecord]) -> dict:
    if not records:
        raise EmptyResults("no run records to report on")
    by_model: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_model.setdefault(rec.model_id, []).append(rec)
    report = {}
    for model_id in sorted(by_model):
        group = by_model[model_id]
        rel = reliability(group)
        dq = design_quality(group)
        pe = process_efficiency(group)
        report[model_id] = {
            "runs": len(group),
            "reliability": {
                "n_iterations": rel.n_iterations,
                "r1_percent": rel.r1,
                "r2_percent": rel.r2,
                "r3_percent": rel.r3,
                "r2_unconditional_percent": rel.r2_unconditional,
                "r3_unconditional_percent": rel.r3_unconditional,
            },
            "design_quality": {
                "n_designs": dq.n_designs,
                "dq1_mean": dq.dq1_mean,
                "dq1_sd": dq.dq1_sd,
                "dq2_sf_per_cm3": dq.dq2,
                "dq3_mean_faces": dq.dq3,
                "dq4_violation_percent": dq.dq4_percent,
                "dq5_mean_percent": dq.dq5_mean_percent,
                "dq5_sd_percent": dq.dq5_sd_percent,
            },
            "process_efficiency": {
                "pe1_mean_iterations": pe.pe1,
                "failure_rate_percent": pe.failure_rate_percent,
                "n_success": pe.n_success,
                "n_failed": pe.n_failed,
            },
            "failure_categories_final": failure_histogram(group),
            "failure_events_per_iteration": failure_event_histogram(group),
        }
    return report


def format_report(report: dict) -> str:
    lines = []
    lines.append("== Reliability (stage success rates) ==")
    lines.append(f"{'model':24s} {'iters':>6s} {'R1':>7s} {'R2':>7s} {'R3':>7s}")
    for model_id, entry in report.items():
        rel = entry["reliability"]
        lines.append(
            f"{model_id:24s} {rel['n_iterations']:6d}"
            f" {_fmt(rel['r1_percent'], percent=True)}"
            f" {_fmt(rel['r2_percent'], percent=True)}"
            f" {_fmt(rel['r3_percent'], percent=True)}"
        )
    lines.append("")
    lines.append("== Design quality (final FEA-reaching designs) ==")
    lines.append(
        f"{'model':24s} {'n':>4s} {'DQ1':>7s} {'+/-':>6s} {'DQ2':>7s} {'DQ3':>7s}"
        f" {'DQ4':>7s} {'DQ5':>7s} {'+/-':>6s}"
    )
    for model_id, entry in report.items():
        dq = entry["design_quality"]
        sd1 = f"{dq['dq1_sd']:.2f}".rjust(6) if dq["dq1_sd"] is not None else "-".rjust(6)
        sd5 = (
            f"{dq['dq5_sd_percent']:.2f}".rjust(6)
            if dq["dq5_sd_percent"] is not None
            else "-".rjust(6)
        )
        lines.append(
            f"{model_id:24s} {dq['n_designs']:4d}"
            f" {_fmt(dq['dq1_mean'])} {sd1}"
            f" {_fmt(dq['dq2_sf_per_cm3'])}"
            f" {_fmt(dq['dq3_mean_faces'])}"
            f" {_fmt(dq['dq4_violation_percent'], percent=True)}"
            f" {_fmt(dq['dq5_mean_percent'], percent=True)} {sd5}"
        )
    lines.append("")
    lines.append("== Process efficiency ==")
    lines.append(f"{'model':24s} {'runs':>5s} {'PE1':>7s} {'fail':>7s}")
    for model_id, entry in report.items():
        pe = entry["process_efficiency"]
        runs = pe["n_success"] + pe["n_failed"]
        lines.append(
            f"{model_id:24s} {runs:5d} {_fmt(pe['pe1_mean_iterations'])}"
            f" {_fmt(pe['failure_rate_percent'], percent=True)}"
        )
    lines.append("")
    lines.append("== Failure categories ==")
    header = f"{'model':24s} " + " ".join(f"{c:>12s}" for c in FAILURE_CATEGORIES)
    lines.append(header + "   (final runs | iteration events)")
    for model_id, entry in report.items():
        final = entry["failure_categories_final"]
        events = entry["failure_events_per_iteration"]
        cells = " ".join(
            f"{final.get(c, 0):5d}/{events.get(c, 0):<6d}" for c in FAILURE_CATEGORIES
        )
        lines.append(f"{model_id:24s} {cells}")
    return "\n".join(lines)


def report(results_path: str | Path) -> tuple[str, dict]:
    records = read_records(results_path)
    data = build_report(records)
    return format_report(data), data


# -- statistics --------------------------------------------------------------


def _target_range_success(rec: RunRecord, sf_range=(2.0, 5.0)) -> bool | None:
    """None when the run never produced an FEA-evaluated design."""
    final = rec.final_fea_iteration()
    if final is None or final.safety_factor is None:
        return None
    return sf_range[0] <= final.safety_factor <= sf_range[1]


def compare(results_a: Sequence[RunRecord], results_b: Sequence[RunRecord]) -> dict:
    """Fisher exact on target-range successes, Welch t on iterations."""
    out: dict = {}
    table = []
    for group in (results_a, results_b):
        outcomes = [s for s in (_target_range_success(r) for r in group) if s is not None]
        table.append([sum(outcomes), len(outcomes) - sum(outcomes)])
    out["success_table"] = table
    if min(len(results_a), len(results_b)) == 0:
        out["fisher_p"] = None
        out["note"] = "insufficient data for Fisher exact"
    else:
        out["fisher_p"] = fisher_exact(table)
        out["fisher_p_one_sided"] = fisher_exact_one_sided(table)

    groups_iters = []
    for group in (results_a, results_b):
        groups_iters.append([r.iterations_to_valid for r in group if r.succeeded])
    out["iterations_to_valid"] = {
        "group_a": _summary(groups_iters[0]),
        "group_b": _summary(groups_iters[1]),
    }
    if all(len(g) >= 2 for g in groups_iters):
        from statistics import mean, stdev

        sds = [stdev(g) for g in groups_iters]
        if all(sd > 0 for sd in sds):
            t, df, p = welch_t(
                mean(groups_iters[0]), sds[0], len(groups_iters[0]),
                mean(groups_iters[1]), sds[1], len(groups_iters[1]),
            )
            out["welch"] = {"t": t, "df": df, "p": p}
        else:
            out["welch"] = {"note": "zero variance in a group"}
    else:
        out["welch"] = {"note": "needs >=2 successful runs per group"}
    return out


def _summary(values: list) -> dict:
    from statistics import mean, stdev

    if not values:
        return {"n": 0}
    return {
        "n": len(values),
        "mean": mean(values),
        "sd": stdev(values) if len(values) > 1 else 0.0,
    }


def stats(paths: Sequence[str | Path]) -> tuple[str, dict]:
    groups = [read_records(p) for p in paths]
    for path, group in zip(paths, groups):
        if not group:
            raise EmptyResults(f"no records in {path}")
    result: dict = {"files": [str(p) for p in paths]}
    lines = []
    if len(groups) == 2:
        cmp = compare(groups[0], groups[1])
        result["comparison"] = cmp
        (a_s, a_f), (b_s, b_f) = cmp["success_table"]
        lines.append(f"target-range successes: {a_s}/{a_s + a_f} vs {b_s}/{b_s + b_f}")
        if cmp["fisher_p"] is not None:
            lines.append(f"Fisher exact (two-sided): p = {cmp['fisher_p']:.6g}")
            lines.append(f"Fisher exact (one-sided): p = {cmp['fisher_p_one_sided']:.6g}")
        welch = cmp["welch"]
        if "t" in welch:
            lines.append(
                f"Welch t on iterations-to-valid: t = {welch['t']:.3f}, "
                f"df = {welch['df']:.2f}, p = {welch['p']:.6g}"
            )
        else:
            lines.append(f"Welch t: {welch['note']}")
    if len(groups) >= 3:
        samples = [[r.iterations_to_valid for r in g if r.succeeded] for g in groups]
        if all(samples):
            h, p = kruskal_wallis(samples)
            result["kruskal_wallis"] = {"h": h, "p": p}
            lines.append(f"Kruskal-Wallis on iterations-to-valid: H = {h:.3f}, p = {p:.6g}")
        else:
            result["kruskal_wallis"] = {"note": "a group has no successful runs"}
            lines.append("Kruskal-Wallis: a group has no successful runs")
    return "\n".join(lines), result
