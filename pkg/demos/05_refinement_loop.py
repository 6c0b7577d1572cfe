"""The Generate-Simulate-Refine loop, driven by the deterministic designer.

The heuristic plays all four agent roles (planner, engineer, geometry
reviewer, structural reviewer) through the same chat interface a language
model would use. It starts from the full hull connecting all supports and
loads, then bisects the cross-section until the safety factor lands in the
target range. Every run is bit-reproducible.
"""

from physloop import LoopConfig, builtin_cases, run_heuristic

config = LoopConfig(resolution=24, render_size=128)

for problem_id in ("ARCH_BRIDGE", "FIXED_BEAM_POINT_LOAD", "LUG_PLATE"):
    case = [c for c in builtin_cases() if c.problem_id == problem_id][0]
    record = run_heuristic(case, config)
    print(f"\n{problem_id}: {record.final_status} "
          f"after {len(record.iterations)} iterations")
    for it in record.iterations:
        sf = f"{it.safety_factor:.2f}" if it.safety_factor else "-"
        vol = f"{(it.volume_mm3 or 0) / 1000:.0f}" if it.volume_mm3 else "-"
        print(f"  iter {it.iteration_index}: SF={sf:>7s}  volume={vol:>6s} cm^3  "
              f"category={it.failure_category or '-'}")
    tokens = record.total_tokens()
    print(f"  tokens: {tokens[0]} in / {tokens[1]} out")
