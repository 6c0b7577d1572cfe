"""Load cases: the problem statements of the benchmark.

A load case fixes the design domain, the support regions with their locked
degrees of freedom, and the applied forces. 20 built-in cases x 5 geometric
scales x 5 force scales = 500 benchmark configurations.
"""

from physloop import (
    FORCE_SCALES,
    GEOM_SCALES,
    VariantSpec,
    apply_variant,
    builtin_cases,
    enumerate_variants,
    parse_load_case,
    serialize_load_case,
)

cases = builtin_cases()
print(f"built-in cases: {len(cases)}")
for case in cases[:6]:
    ex, ey, ez = case.domain_bounds.extent
    print(
        f"  {case.problem_id:26s} domain {ex:.0f}x{ey:.0f}x{ez:.0f} mm, "
        f"{len(case.boundary_conditions)} supports, {len(case.loads)} loads"
    )

bridge = cases[0]
print("\nround trip through the JSON schema keeps the case identical:",
      parse_load_case(serialize_load_case(bridge)) == bridge)

doubled = apply_variant(bridge, VariantSpec(geom_scale=2.0, force_scale=0.5))
print(f"geometric doubling: span {bridge.domain_bounds.x_max:.0f} -> "
      f"{doubled.domain_bounds.x_max:.0f} mm")
print(f"force halving: {bridge.loads[0].magnitude_newtons:.0f} -> "
      f"{doubled.loads[0].magnitude_newtons:.0f} N")

combos = list(enumerate_variants(cases, GEOM_SCALES, FORCE_SCALES))
print(f"\nfull benchmark grid: {len(combos)} configurations")
