"""A miniature benchmark sweep with reports and significance tests.

Runs the deterministic designer over five cases at nominal scale, prints
the R/DQ/PE tables, then compares two synthetic result sets with the
Fisher exact and Welch t machinery used for ablation analyses.
"""

import json
import tempfile
from pathlib import Path

from physloop import bench, fisher_exact, fisher_exact_one_sided, welch_t
from physloop.builtin_cases import builtin_cases
from physloop.loadcase import serialize_load_case

workdir = Path(tempfile.mkdtemp(prefix="physloop_demo_"))
cases_dir = workdir / "cases"
cases_dir.mkdir()
for case in builtin_cases()[:5]:
    (cases_dir / f"{case.problem_id}.json").write_text(serialize_load_case(case))

config = bench.BenchConfig(
    cases=str(cases_dir),
    backend="heuristic",
    runs_per_case=1,
    resolution=24,
    geom_scales=(1.0,),
    force_scales=(1.0,),
    out=str(workdir / "out"),
    save_artifacts=False,
    render_size=64,
)
results = bench.run(config)
text, _ = bench.report(results)
print(text)

print("\n--- ablation-style statistics ---")
table = [[49, 34], [6, 21]]  # target-range successes with/without FEA feedback
print(f"success table {table}")
print(f"  Fisher exact one-sided p = {fisher_exact_one_sided(table):.6f}")
print(f"  Fisher exact two-sided p = {fisher_exact(table):.6f}")

t, df, p = welch_t(4.44, 5.36, 80, 10.77, 10.11, 80)
print(f"iterations with vs without planning: t={t:.2f}, df={df:.1f}, p={p:.4f}")
