"""Benchmark metrics (R1-R3, DQ1-DQ5, PE1) and statistical tests.

Reliability rates are per-iteration stage successes, design quality is
aggregated over the final FEA-reaching design of each run, and process
efficiency averages iterations-to-valid over successful runs. The tests
used in the ablation analyses (Fisher exact, Welch t, Kruskal-Wallis) are
implemented on exact enumeration / textbook formulas, with SciPy supplying
only the reference distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import mean, stdev
from typing import Sequence

import numpy as np
from scipy import stats as _sstats

from .loadcase import VariantSpec

STATUS_VALID = "valid"
STATUS_ITERATION_CAP = "iteration_cap"


def status_failed(category: str) -> str:
    return f"failed({category})"


@dataclass(frozen=True)
class IterationRecord:
    """One full plan/generate/review cycle of a run."""

    iteration_index: int
    compile_ok: bool
    mesh_ok: bool
    fea_ok: bool
    safety_factor: float | None = None
    volume_mm3: float | None = None
    face_count: int | None = None
    design_space_violated: bool = False
    violation_ratio: float = 0.0
    failure_category: str | None = None
    input_tokens: int = 0
    output_tokens: int = 0
    wall_seconds: float = 0.0

    def __post_init__(self):
        if self.mesh_ok and not self.compile_ok:
            raise ValueError("mesh_ok implies compile_ok")
        if self.fea_ok and not self.mesh_ok:
            raise ValueError("fea_ok implies mesh_ok")

    def to_json(self) -> dict:
        return {
            "iteration_index": self.iteration_index,
            "compile_ok": self.compile_ok,
            "mesh_ok": self.mesh_ok,
            "fea_ok": self.fea_ok,
            "safety_factor": self.safety_factor,
            "volume_mm3": self.volume_mm3,
            "face_count": self.face_count,
            "design_space_violated": self.design_space_violated,
            "violation_ratio": self.violation_ratio,
            "failure_category": self.failure_category,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "wall_seconds": self.wall_seconds,
        }

    @classmethod
    def from_json(cls, data: dict) -> "IterationRecord":
        return cls(**{k: data.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class RunRecord:
    """All iterations of one (model, case, variant, seed) run."""

    model_id: str
    problem_id: str
    variant: VariantSpec
    run_seed: int
    iterations: tuple[IterationRecord, ...]
    final_status: str
    iterations_to_valid: int | None = None

    def __post_init__(self):
        if self.final_status == STATUS_VALID and self.iterations_to_valid is None:
            raise ValueError("valid runs must carry iterations_to_valid")

    @property
    def succeeded(self) -> bool:
        return self.final_status == STATUS_VALID

    def total_tokens(self) -> tuple[int, int]:
        return (
            sum(it.input_tokens for it in self.iterations),
            sum(it.output_tokens for it in self.iterations),
        )

    def final_fea_iteration(self) -> IterationRecord | None:
        for it in reversed(self.iterations):
            if it.fea_ok:
                return it
        return None

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "problem_id": self.problem_id,
            "variant": {
                "geom_scale": self.variant.geom_scale,
                "force_scale": self.variant.force_scale,
            },
            "run_seed": self.run_seed,
            "iterations": [it.to_json() for it in self.iterations],
            "final_status": self.final_status,
            "iterations_to_valid": self.iterations_to_valid,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        return cls(
            model_id=data["model_id"],
            problem_id=data["problem_id"],
            variant=VariantSpec(**data["variant"]),
            run_seed=data["run_seed"],
            iterations=tuple(IterationRecord.from_json(it) for it in data["iterations"]),
            final_status=data["final_status"],
            iterations_to_valid=data.get("iterations_to_valid"),
        )


@dataclass(frozen=True)
class Reliability:
    """Stage success rates in percent; None when the denominator is zero."""

    r1: float | None  # compiled / all iterations
    r2: float | None  # meshed / compiled
    r3: float | None  # solved / meshed
    r2_unconditional: float | None = None
    r3_unconditional: float | None = None
    n_iterations: int = 0


@dataclass(frozen=True)
class DesignQuality:
    dq1_mean: float | None
    dq1_sd: float | None
    dq2: float | None  # mean(SF / volume_cm3)
    dq3: float | None  # mean face count
    dq4_percent: float | None  # share of designs violating the domain
    dq5_mean_percent: float | None
    dq5_sd_percent: float | None
    n_designs: int = 0


@dataclass(frozen=True)
class ProcessEfficiency:
    pe1: float | None  # mean iterations to valid over successful runs
    failure_rate_percent: float
    n_success: int = 0
    n_failed: int = 0


def _pct(num: int, den: int) -> float | None:
    return 100.0 * num / den if den else None


def reliability(records: Sequence[RunRecord]) -> Reliability:
    iterations = [it for rec in records for it in rec.iterations]
    if not iterations:
        raise ValueError("at least one iteration record required")
    n = len(iterations)
    compiled = sum(it.compile_ok for it in iterations)
    meshed = sum(it.mesh_ok for it in iterations)
    solved = sum(it.fea_ok for it in iterations)
    return Reliability(
        r1=_pct(compiled, n),
        r2=_pct(meshed, compiled),
        r3=_pct(solved, meshed),
        r2_unconditional=_pct(meshed, n),
        r3_unconditional=_pct(solved, n),
        n_iterations=n,
    )


def design_quality(records: Sequence[RunRecord]) -> DesignQuality:
    finals = [it for it in (rec.final_fea_iteration() for rec in records) if it is not None]
    if not finals:
        return DesignQuality(None, None, None, None, None, None, None, 0)
    sfs = [it.safety_factor for it in finals if it.safety_factor is not None]
    sfrs = [
        it.safety_factor / (it.volume_mm3 / 1000.0)
        for it in finals
        if it.safety_factor is not None and it.volume_mm3
    ]
    faces = [it.face_count for it in finals if it.face_count is not None]
    violated = [it.design_space_violated for it in finals]
    ratios = [100.0 * it.violation_ratio for it in finals]
    return DesignQuality(
        dq1_mean=mean(sfs) if sfs else None,
        dq1_sd=stdev(sfs) if len(sfs) > 1 else (0.0 if sfs else None),
        dq2=mean(sfrs) if sfrs else None,
        dq3=mean(faces) if faces else None,
        dq4_percent=100.0 * sum(violated) / len(violated),
        dq5_mean_percent=mean(ratios),
        dq5_sd_percent=stdev(ratios) if len(ratios) > 1 else 0.0,
        n_designs=len(finals),
    )


def process_efficiency(records: Sequence[RunRecord]) -> ProcessEfficiency:
    successes = [rec.iterations_to_valid for rec in records if rec.succeeded]
    failed = [rec for rec in records if not rec.succeeded]
    total = len(records)
    return ProcessEfficiency(
        pe1=mean(successes) if successes else None,
        failure_rate_percent=100.0 * len(failed) / total if total else 0.0,
        n_success=len(successes),
        n_failed=len(failed),
    )


def failure_histogram(records: Sequence[RunRecord]) -> dict[str, int]:
    """Final-status failure categories over runs (valid/cap-out excluded)."""
    counts: dict[str, int] = {}
    for rec in records:
        status = rec.final_status
        if status.startswith("failed(") and status.endswith(")"):
            category = status[len("failed(") : -1]
            counts[category] = counts.get(category, 0) + 1
    return counts


def failure_event_histogram(records: Sequence[RunRecord]) -> dict[str, int]:
    """Per-iteration failure categories across all runs."""
    counts: dict[str, int] = {}
    for rec in records:
        for it in rec.iterations:
            if it.failure_category:
                counts[it.failure_category] = counts.get(it.failure_category, 0) + 1
    return counts


def _fisher_weights(table: Sequence[Sequence[int]]):
    (a, b), (c, d) = table
    for v in (a, b, c, d):
        if v < 0 or int(v) != v:
            raise ValueError("table entries must be non-negative integers")
    a, b, c, d = int(a), int(b), int(c), int(d)
    r1, r2 = a + b, c + d
    c1 = a + c
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    weights = {k: math.comb(r1, k) * math.comb(r2, c1 - k) for k in range(lo, hi + 1)}
    return a, weights, math.comb(r1 + r2, c1)


def fisher_exact(table: Sequence[Sequence[int]]) -> float:
    """Two-sided Fisher exact p-value for a 2x2 count table.

    Sums hypergeometric probabilities no larger than the observed table's,
    using exact integer arithmetic so ties are handled without tolerance.
    """
    a, weights, total = _fisher_weights(table)
    if total == 0 or not weights:
        return 1.0
    observed = weights[a]
    return sum(w for w in weights.values() if w <= observed) / total


def fisher_exact_one_sided(table: Sequence[Sequence[int]]) -> float:
    """One-sided (greater) Fisher exact p: probability of an association at
    least as strong in the first row's favor. This directional form matches
    hypothesis-driven ablation comparisons; it is half-ish of the two-sided
    value for strongly unbalanced tables."""
    a, weights, total = _fisher_weights(table)
    if total == 0 or not weights:
        return 1.0
    return sum(w for k, w in weights.items() if k >= a) / total


def welch_t(
    mean1: float, sd1: float, n1: int, mean2: float, sd2: float, n2: int
) -> tuple[float, float, float]:
    """Welch t statistic, Welch-Satterthwaite df, two-sided p."""
    if n1 < 2 or n2 < 2:
        raise ValueError("both groups need at least two observations")
    if sd1 <= 0 or sd2 <= 0:
        raise ValueError("standard deviations must be positive")
    se1 = sd1**2 / n1
    se2 = sd2**2 / n2
    se = se1 + se2
    t = (mean1 - mean2) / math.sqrt(se)
    df = se**2 / (se1**2 / (n1 - 1) + se2**2 / (n2 - 1))
    p = student_t_two_sided_p(t, df)
    return t, df, p


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p for a t statistic at (possibly fractional) df."""
    if df <= 0:
        raise ValueError("df must be positive")
    return float(2.0 * _sstats.t.sf(abs(t), df))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Rank-based H with tie correction; p via the chi-squared approximation."""
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need at least two non-empty groups")
    pooled = np.concatenate([np.asarray(g, dtype=float) for g in groups])
    n = len(pooled)
    ranks = _sstats.rankdata(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + len(g)]
        h += r.sum() ** 2 / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    denom = 1.0 - tie_term / (n**3 - n)
    if denom <= 0:
        return 0.0, 1.0  # all observations identical
    h /= denom
    p = float(_sstats.chi2.sf(h, len(groups) - 1))
    return h, p
