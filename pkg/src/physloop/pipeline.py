"""Deterministic evaluation of a candidate design against a load case.

One call runs the full physics stack: voxelization over a margin-padded
analysis box, design-space / coverage / connectivity checks, Kuhn tet
meshing, and the tet4 solve. Results come back as a ValidationReport plus
the artifacts downstream consumers need (mesh, stress field, hotspots).

The analysis box pads the design domain by 10% of its longest extent on
every side so out-of-domain material is observable; `resolution` counts
voxels along the longest axis of that padded box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FixAreaEmpty, LoadAreaEmpty, SolveDiverged
from .fem import DEFAULT_MATERIAL, FemResult, Material, build_model, solve, stress_hotspots
from .geometry import GeometryProgram
from .loadcase import Box3, LoadCase
from .meshing import TetMesh, VoxelGrid, connected_components, surface_mesh, tetrahedralize, voxelize
from .surface import SurfaceMesh, count_faces, points_in_mesh
from .validators import (
    ConnectivityCheck,
    DesignSpaceCheck,
    FeaCheck,
    ValidationReport,
    assemble_report,
    check_design_space,
    check_region_coverage,
    check_connectivity,
    in_target_range,
    region_voxels,
)

DEFAULT_RESOLUTION = 48
DOMAIN_MARGIN_FRACTION = 0.1


@dataclass(frozen=True)
class EvalConfig:
    resolution: int = DEFAULT_RESOLUTION
    material: Material = DEFAULT_MATERIAL
    sf_range: tuple[float, float] = (2.0, 5.0)
    hotspot_count: int = 5


@dataclass(frozen=True)
class EvaluationOutcome:
    """Everything one design evaluation produced."""

    report: ValidationReport
    grid: VoxelGrid | None = None
    mesh: TetMesh | None = field(default=None, repr=False)
    surface: SurfaceMesh | None = field(default=None, repr=False)
    fem: FemResult | None = field(default=None, repr=False)
    volume_mm3: float | None = None
    face_count: int | None = None
    hotspots: list[tuple[tuple[float, float, float], float]] | None = None
    coverage: dict[str, bool] = field(default_factory=dict)  # per selector id

    @property
    def mesh_ok(self) -> bool:
        return self.report.meshable

    @property
    def fea_ok(self) -> bool:
        return self.report.fea.succeeded

    @property
    def accepted(self) -> bool:
        return self.report.verdict == "valid" and self.report.fea.in_target_range


def analysis_bounds(case: LoadCase, margin_fraction: float = DOMAIN_MARGIN_FRACTION) -> Box3:
    """Design domain padded by margin_fraction of its longest extent per side."""
    pad = margin_fraction * max(case.domain_bounds.extent)
    return case.domain_bounds.inflate(pad)


def _union_box(a: Box3, b: Box3) -> Box3:
    return Box3.from_bounds(
        [min(a.lo[i], b.lo[i]) for i in range(3)],
        [max(a.hi[i], b.hi[i]) for i in range(3)],
    )


def evaluate_membership(
    inside: Callable[[np.ndarray], np.ndarray],
    case: LoadCase,
    config: EvalConfig = EvalConfig(),
    geometry_bounds: Box3 | None = None,
) -> EvaluationOutcome:
    """Run the physics stack for any vectorized membership predicate.

    `geometry_bounds`, when known, lets the design-space check observe
    material beyond the padded analysis box (a second, coarser voxelization
    over the union box); meshing and FEA always use the analysis grid.
    """
    padded = analysis_bounds(case)
    grid = voxelize(inside, padded, config.resolution)
    volume = grid.occupied_count * grid.spacing**3 if grid.occupied_count else 0.0

    ds_grid = grid
    if geometry_bounds is not None:
        inside_padded = all(
            geometry_bounds.lo[i] >= padded.lo[i] - 1e-9
            and geometry_bounds.hi[i] <= padded.hi[i] + 1e-9
            for i in range(3)
        )
        if not inside_padded:
            ds_grid = voxelize(inside, _union_box(padded, geometry_bounds), config.resolution)
    design_space = check_design_space(ds_grid, case.domain_bounds)
    coverage = {
        sid: check_region_coverage(grid, case.selector(sid))
        for sid in dict.fromkeys((*case.support_selector_ids(), *case.load_selector_ids()))
    }
    fix_area_ok = all(coverage[sid] for sid in case.support_selector_ids())
    load_area_ok = all(coverage[sid] for sid in case.load_selector_ids())
    labeling = connected_components(grid)
    regions = [
        region_voxels(grid, case.selector(sid))
        for sid in (*case.support_selector_ids(), *case.load_selector_ids())
    ]
    connectivity = check_connectivity(labeling, regions)

    meshable = grid.occupied_count > 0
    mesh = None
    surf = None
    face_count = None
    if meshable:
        mesh = tetrahedralize(grid)
        surf = surface_mesh(mesh)
        face_count = count_faces(surf)

    fem_result = None
    hotspots = None
    fea = FeaCheck(succeeded=False, safety_factor=None, in_target_range=False)
    # a design-space violation alone does not block the solve: stress on a
    # violating design is still meaningful feedback, and the verdict already
    # records the violation
    attempt_fea = (
        meshable and fix_area_ok and load_area_ok and connectivity.all_regions_connected
    )
    if attempt_fea:
        try:
            model = build_model(mesh, case, config.material, tolerance=grid.spacing / 2)
            fem_result = solve(model, config.material)
            sf = fem_result.safety_factor
            fea = FeaCheck(
                succeeded=True,
                safety_factor=sf,
                in_target_range=in_target_range(sf, config.sf_range),
            )
            hotspots = stress_hotspots(fem_result, mesh, config.hotspot_count)
        except FixAreaEmpty:
            fix_area_ok = False
        except LoadAreaEmpty:
            load_area_ok = False
        except SolveDiverged:
            pass

    report = assemble_report(
        design_space=design_space,
        fix_area_ok=fix_area_ok,
        load_area_ok=load_area_ok,
        connectivity=connectivity,
        meshable=meshable,
        fea=fea,
    )
    return EvaluationOutcome(
        report=report,
        grid=grid,
        mesh=mesh,
        surface=surf,
        fem=fem_result,
        volume_mm3=volume if meshable else None,
        face_count=face_count,
        hotspots=hotspots,
        coverage=coverage,
    )


def evaluate_program(
    program: GeometryProgram, case: LoadCase, config: EvalConfig = EvalConfig()
) -> EvaluationOutcome:
    """Evaluate a CSG geometry program."""
    return evaluate_membership(
        program.contains_points, case, config, geometry_bounds=program.bounding_box()
    )


def evaluate_surface(
    mesh: SurfaceMesh, case: LoadCase, config: EvalConfig = EvalConfig()
) -> EvaluationOutcome:
    """Evaluate an ingested watertight surface mesh (e.g. a bridge STL)."""
    return evaluate_membership(
        lambda pts: points_in_mesh(mesh, pts),
        case,
        config,
        geometry_bounds=mesh.bounding_box(),
    )
