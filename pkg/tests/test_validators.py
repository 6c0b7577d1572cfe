import json

import numpy as np
import pytest

from conftest import make_case
from physloop.geometry import parse_program
from physloop.loadcase import Box3, SpatialSelector
from physloop.meshing import VoxelGrid, connected_components, voxelize
from physloop.pipeline import EvalConfig, analysis_bounds, evaluate_program
from physloop.validators import (
    check_connectivity,
    check_design_space,
    check_region_coverage,
    region_voxels,
)

DOMAIN = Box3(0, 100, 0, 100, 0, 100)


def padded_grid(program, case_domain=DOMAIN, resolution=24):
    pad = 0.1 * max(case_domain.extent)
    return voxelize(program.contains_points, case_domain.inflate(pad), resolution)


def test_design_space_fully_inside():
    program = parse_program(json.dumps({"op": "box", "min": [10, 10, 10], "max": [60, 60, 60]}))
    check = check_design_space(padded_grid(program), DOMAIN)
    assert not check.violated
    assert check.outside_volume_mm3 == 0.0
    assert check.violation_ratio == 0.0


def test_design_space_half_protruding_box():
    # 20^3 box protruding half outside the 100^3 domain: 4000 mm^3 outside
    program = parse_program(
        json.dumps({"op": "box", "min": [40, 40, -10], "max": [60, 60, 10]})
    )
    grid = padded_grid(program)
    check = check_design_space(grid, DOMAIN)
    voxel_layer = grid.spacing**3 * (20.0 / grid.spacing) ** 2  # one layer under the box
    assert check.violated
    assert abs(check.outside_volume_mm3 - 4000.0) <= voxel_layer
    assert check.violation_ratio == pytest.approx(0.004, abs=voxel_layer / 1e6)


def test_design_space_fully_outside():
    program = parse_program(
        json.dumps({"op": "box", "min": [40, 40, -35], "max": [60, 60, -15]})
    )
    # grid must observe the stray geometry: cover domain and geometry alike
    grid = voxelize(program.contains_points, Box3(-20, 120, -20, 120, -50, 120), 28)
    check = check_design_space(grid, DOMAIN)
    occupied_volume = grid.occupied_count * grid.spacing**3
    assert check.violated
    assert check.outside_volume_mm3 == pytest.approx(occupied_volume)
    assert check.violation_ratio == pytest.approx(occupied_volume / 1e6)


def test_pipeline_observes_geometry_beyond_analysis_box():
    # material far outside the padded analysis box still counts as violation
    case = make_case()
    program = parse_program(
        json.dumps(
            {
                "op": "union",
                "children": [
                    {"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]},
                    {"op": "box", "min": [220, 0, 0], "max": [280, 60, 60]},
                ],
            }
        )
    )
    outcome = evaluate_program(program, case, EvalConfig(resolution=24))
    assert outcome.report.failure_category == "DesignSpace"
    expect_ratio = 60 * 60 * 60 / 1e6
    assert outcome.report.design_space.violation_ratio == pytest.approx(expect_ratio, rel=0.3)


def test_design_space_requires_margin():
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]}))
    tight = voxelize(program.contains_points, DOMAIN, 16)
    with pytest.raises(ValueError, match="margin"):
        check_design_space(tight, DOMAIN)


def test_violation_ratio_scale_invariant():
    for scale in (1.0, 2.0):
        program = parse_program(
            json.dumps(
                {
                    "op": "box",
                    "min": [40 * scale, 40 * scale, -10 * scale],
                    "max": [60 * scale, 60 * scale, 10 * scale],
                }
            )
        )
        domain = DOMAIN.scaled(scale)
        grid = voxelize(
            program.contains_points,
            domain.inflate(0.1 * max(domain.extent)),
            24,
        )
        check = check_design_space(grid, domain)
        assert check.violation_ratio == pytest.approx(0.004, rel=0.3)


# -- connectivity ----------------------------------------------------------------


def grid_from_mask(mask):
    return VoxelGrid(origin=(0.0, 0.0, 0.0), spacing=1.0, dims=mask.shape, occupancy=mask)


def test_connectivity_solid_beam():
    mask = np.ones((10, 2, 2), dtype=bool)
    grid = grid_from_mask(mask)
    labeling = connected_components(grid)
    left = region_voxels(grid, SpatialSelector("l", Box3(0, 1, 0, 2, 0, 2)))
    right = region_voxels(grid, SpatialSelector("r", Box3(9, 10, 0, 2, 0, 2)))
    check = check_connectivity(labeling, [left, right])
    assert check.component_count == 1
    assert check.all_regions_connected


def test_connectivity_two_islands():
    mask = np.zeros((10, 2, 2), dtype=bool)
    mask[:3] = True
    mask[7:] = True
    grid = grid_from_mask(mask)
    labeling = connected_components(grid)
    left = region_voxels(grid, SpatialSelector("l", Box3(0, 1, 0, 2, 0, 2)))
    right = region_voxels(grid, SpatialSelector("r", Box3(9, 10, 0, 2, 0, 2)))
    check = check_connectivity(labeling, [left, right])
    assert check.component_count == 2
    assert not check.all_regions_connected


def test_connectivity_third_region_isolated():
    mask = np.zeros((12, 2, 2), dtype=bool)
    mask[:8] = True  # spans regions 1 and 2
    mask[10:] = True  # isolated island under region 3
    grid = grid_from_mask(mask)
    labeling = connected_components(grid)
    regions = [
        region_voxels(grid, SpatialSelector("a", Box3(0, 1, 0, 2, 0, 2))),
        region_voxels(grid, SpatialSelector("b", Box3(6, 8, 0, 2, 0, 2))),
        region_voxels(grid, SpatialSelector("c", Box3(11, 12, 0, 2, 0, 2))),
    ]
    check = check_connectivity(labeling, regions)
    assert not check.all_regions_connected


def test_connectivity_empty_region_fails():
    mask = np.ones((4, 2, 2), dtype=bool)
    grid = grid_from_mask(mask)
    labeling = connected_components(grid)
    empty = region_voxels(grid, SpatialSelector("far", Box3(100, 101, 0, 1, 0, 1)))
    check = check_connectivity(labeling, [empty])
    assert not check.all_regions_connected


# -- coverage ---------------------------------------------------------------------


def test_coverage_solid_and_hole():
    program = parse_program(
        json.dumps(
            {
                "op": "difference",
                "children": [
                    {"op": "box", "min": [0, 0, 0], "max": [100, 100, 40]},
                    {"op": "box", "min": [40, 40, 0], "max": [60, 60, 40]},
                ],
            }
        )
    )
    grid = padded_grid(program)
    assert check_region_coverage(grid, SpatialSelector("solid", Box3(0, 20, 0, 20, 0, 20)))
    assert not check_region_coverage(grid, SpatialSelector("hole", Box3(45, 55, 45, 55, 5, 15)))


def test_coverage_plane_selector_at_flush_face():
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 40]}))
    grid = padded_grid(program)
    plane = SpatialSelector("face", Box3(0, 0, 0, 100, 0, 40))
    assert check_region_coverage(grid, plane)


# -- aggregated validation ----------------------------------------------------------


def case_for(program_dict, sf_range=(2.0, 5.0)):
    return make_case(
        problem_id="VAL",
        domain=(0, 100, 0, 100, 0, 100),
        selectors=(
            ("base", (0, 100, 0, 100, 0, 0)),
            ("top", (0, 100, 0, 100, 95, 100)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("top", "distributed_force", 50000.0, (0.0, 0.0, -1.0)),),
    )


def test_out_of_range_sf_is_not_a_taxonomy_failure():
    # stout column: all checks pass, SF far above range
    case = case_for(None)
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]}))
    outcome = evaluate_program(program, case, EvalConfig(resolution=16))
    report = outcome.report
    assert report.verdict == "valid"
    assert report.failure_category is None
    assert report.fea.succeeded
    assert not report.fea.in_target_range
    assert report.fea.safety_factor > 5.0


def test_disconnected_part_fails_connectivity_without_fea():
    case = case_for(None)
    program = parse_program(
        json.dumps(
            {
                "op": "union",
                "children": [
                    {"op": "box", "min": [0, 0, 0], "max": [100, 100, 30]},
                    {"op": "box", "min": [0, 0, 70], "max": [100, 100, 100]},
                ],
            }
        )
    )
    outcome = evaluate_program(program, case, EvalConfig(resolution=16))
    assert outcome.report.verdict == "failed"
    assert outcome.report.failure_category == "Connectivity"
    assert outcome.fem is None  # FEA never attempted
    assert not outcome.report.fea.succeeded


def test_in_range_design_is_valid():
    case = make_case(
        problem_id="VAL2",
        domain=(0, 100, 0, 100, 0, 100),
        selectors=(
            ("base", (0, 100, 0, 100, 0, 0)),
            ("top", (0, 100, 0, 100, 95, 100)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("top", "distributed_force", 600000.0, (0.0, 0.0, -1.0)),),
    )
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]}))
    outcome = evaluate_program(program, case, EvalConfig(resolution=16))
    assert outcome.report.verdict == "valid"
    assert outcome.report.fea.in_target_range
    assert outcome.accepted


def test_design_space_violation_still_reaches_fea():
    case = case_for(None)
    program = parse_program(
        json.dumps({"op": "box", "min": [0, 0, -8], "max": [100, 100, 100]})
    )
    outcome = evaluate_program(program, case, EvalConfig(resolution=16))
    assert outcome.report.failure_category == "DesignSpace"
    assert outcome.report.fea.succeeded  # stress feedback still computed


def test_validate_is_pure():
    case = case_for(None)
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]}))
    a = evaluate_program(program, case, EvalConfig(resolution=16))
    b = evaluate_program(program, case, EvalConfig(resolution=16))
    assert a.report == b.report
    assert a.volume_mm3 == b.volume_mm3


def test_evaluate_surface_ingests_stl_route():
    """The bridge route: an ingested watertight mesh runs the same stack."""
    from conftest import cube_stl_binary, make_case
    from physloop.pipeline import evaluate_surface
    from physloop.surface import load_stl

    case = make_case(
        problem_id="STL_ROUTE",
        domain=(0, 10, 0, 10, 0, 10),
        selectors=(("base", (0, 10, 0, 10, 0, 0)), ("top", (0, 10, 0, 10, 10, 10))),
        bcs=(("base", (True, True, True)),),
        loads=(("top", "distributed_force", 20000.0, (0.0, 0.0, -1.0)),),
    )
    mesh = load_stl(cube_stl_binary(side=10.0))
    outcome = evaluate_surface(mesh, case, EvalConfig(resolution=12))
    assert outcome.report.verdict == "valid"
    assert outcome.report.fea.succeeded
    assert outcome.volume_mm3 == pytest.approx(1000.0)
