"""One call evaluates a candidate design against a load case.

The pipeline voxelizes the program over a margin-padded analysis box,
checks design-space compliance, region coverage and connectivity, meshes
the occupied voxels into tets and solves for stresses. The report's
verdict is valid only when every hard check passes; an out-of-range safety
factor is refinement feedback, not a failure.
"""

import json

from physloop import builtin_cases, parse_program
from physloop.pipeline import EvalConfig, evaluate_program

case = [c for c in builtin_cases() if c.problem_id == "CANTILEVER_END_LOAD"][0]
config = EvalConfig(resolution=24)

designs = {
    "full slab": {"op": "box", "min": [0, 0, 0], "max": [160, 60, 60]},
    "thin blade": {"op": "box", "min": [0, 24, 0], "max": [160, 36, 60]},
    "floating tip": {
        "op": "union",
        "children": [
            {"op": "box", "min": [0, 20, 0], "max": [80, 40, 60]},
            {"op": "box", "min": [120, 20, 0], "max": [160, 40, 60]},
        ],
    },
    "out of bounds": {"op": "box", "min": [0, 20, -20], "max": [160, 40, 60]},
}

for name, program_json in designs.items():
    outcome = evaluate_program(parse_program(json.dumps(program_json)), case, config)
    report = outcome.report
    sf = report.fea.safety_factor
    print(f"{name:14s} verdict={report.verdict:7s} "
          f"category={report.failure_category or '-':12s} "
          f"SF={f'{sf:.2f}' if sf else '-':>7s} "
          f"in_range={report.fea.in_target_range} "
          f"volume={outcome.volume_mm3 or 0:9.0f} mm^3")

print("\nhotspots of the thin blade (feedback payload for the agents):")
outcome = evaluate_program(
    parse_program(json.dumps(designs["thin blade"])), case, config
)
for i, (centroid, vm) in enumerate(outcome.hotspots, start=1):
    print(f"  {i}. ({centroid[0]:6.1f}, {centroid[1]:5.1f}, {centroid[2]:5.1f}) mm "
          f"-> {vm:.1f} MPa")
