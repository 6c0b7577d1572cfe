"""Deterministic design checks and the five-way failure taxonomy.

A design is valid iff every hard check passes: material stays inside the
design domain, every support and load region is covered, the load path is
a single connected component, the geometry meshes, and FEA completes. The
safety factor being outside the target range is deliberately NOT a hard
failure: it is feedback for the refinement loop. Hard failures map to the
categories DesignSpace, Connectivity, FEA, LoadArea and FixArea; the first
failing stage (in the fixed order design-space, fix coverage, load
coverage, connectivity, mesh, FEA) names the category.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loadcase import Box3, LoadCase, SpatialSelector
from .meshing import ComponentLabeling, VoxelGrid

CATEGORY_DESIGN_SPACE = "DesignSpace"
CATEGORY_CONNECTIVITY = "Connectivity"
CATEGORY_FEA = "FEA"
CATEGORY_LOAD_AREA = "LoadArea"
CATEGORY_FIX_AREA = "FixArea"

FAILURE_CATEGORIES = (
    CATEGORY_DESIGN_SPACE,
    CATEGORY_CONNECTIVITY,
    CATEGORY_FEA,
    CATEGORY_LOAD_AREA,
    CATEGORY_FIX_AREA,
)

DEFAULT_SF_RANGE = (2.0, 5.0)


@dataclass(frozen=True)
class DesignSpaceCheck:
    violated: bool
    outside_volume_mm3: float
    violation_ratio: float

    def to_json(self) -> dict:
        return {
            "violated": self.violated,
            "outside_volume_mm3": self.outside_volume_mm3,
            "violation_ratio": self.violation_ratio,
        }


@dataclass(frozen=True)
class ConnectivityCheck:
    component_count: int
    all_regions_connected: bool

    def to_json(self) -> dict:
        return {
            "component_count": self.component_count,
            "all_regions_connected": self.all_regions_connected,
        }


@dataclass(frozen=True)
class FeaCheck:
    succeeded: bool
    safety_factor: float | None
    in_target_range: bool

    def to_json(self) -> dict:
        return {
            "succeeded": self.succeeded,
            "safety_factor": self.safety_factor,
            "in_target_range": self.in_target_range,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Aggregated check results; verdict 'valid' or 'failed' with category."""

    design_space: DesignSpaceCheck
    connectivity: ConnectivityCheck
    fix_area_ok: bool
    load_area_ok: bool
    meshable: bool
    fea: FeaCheck
    verdict: str
    failure_category: str | None

    def to_json(self) -> dict:
        return {
            "design_space": self.design_space.to_json(),
            "connectivity": self.connectivity.to_json(),
            "fix_area_ok": self.fix_area_ok,
            "load_area_ok": self.load_area_ok,
            "meshable": self.meshable,
            "fea": self.fea.to_json(),
            "verdict": self.verdict,
            "failure_category": self.failure_category,
        }


def check_design_space(grid: VoxelGrid, domain: Box3) -> DesignSpaceCheck:
    """Material volume outside the domain, normalized by domain volume.

    The grid must enclose the domain with at least a 10% margin per axis so
    out-of-bounds material is observable.
    """
    g_lo = np.asarray(grid.origin)
    g_hi = g_lo + np.asarray(grid.dims) * grid.spacing
    d_lo = np.asarray(domain.lo)
    d_hi = np.asarray(domain.hi)
    margin = 0.1 * np.asarray(domain.extent)
    if np.any(g_lo > d_lo - margin + 1e-9) or np.any(g_hi < d_hi + margin - 1e-9):
        raise ValueError("grid must enclose the domain with a >=10% margin per axis")
    occ = grid.occupied_indices()
    if len(occ) == 0:
        return DesignSpaceCheck(False, 0.0, 0.0)
    centers = grid.centers_of(occ)
    outside = ~np.all((centers >= d_lo) & (centers <= d_hi), axis=1)
    outside_volume = float(outside.sum()) * grid.spacing**3
    ratio = outside_volume / domain.volume()
    return DesignSpaceCheck(outside_volume > 0.0, outside_volume, ratio)


def region_voxels(grid: VoxelGrid, selector: SpatialSelector, inflation: float | None = None) -> np.ndarray:
    """Flat ids of occupied voxels whose centers fall in the inflated box."""
    if inflation is None:
        inflation = grid.spacing / 2.0
    box = selector.query.inflate(inflation)
    occ = grid.occupied_indices()
    if len(occ) == 0:
        return np.empty(0, dtype=np.int64)
    centers = grid.centers_of(occ)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    mask = np.all((centers >= lo) & (centers <= hi), axis=1)
    return grid.flat_ids(occ[mask])


def check_region_coverage(grid: VoxelGrid, selector: SpatialSelector) -> bool:
    """True iff at least one occupied voxel center lies in the selector box
    inflated by half the voxel spacing."""
    return len(region_voxels(grid, selector)) > 0


def check_connectivity(
    labeling: ComponentLabeling, region_voxel_sets: list[np.ndarray]
) -> ConnectivityCheck:
    """True iff every region holds >=1 occupied voxel and all region voxels
    share a single component id."""
    flat = labeling.labels.ravel()
    seen: set[int] = set()
    for ids in region_voxel_sets:
        if len(ids) == 0:
            return ConnectivityCheck(labeling.count, False)
        seen.update(int(c) for c in np.unique(flat[ids]))
    connected = len(seen) == 1
    return ConnectivityCheck(labeling.count, connected)


def in_target_range(safety_factor: float, sf_range: tuple[float, float] = DEFAULT_SF_RANGE) -> bool:
    return sf_range[0] <= safety_factor <= sf_range[1]


def assemble_report(
    design_space: DesignSpaceCheck,
    fix_area_ok: bool,
    load_area_ok: bool,
    connectivity: ConnectivityCheck,
    meshable: bool,
    fea: FeaCheck,
) -> ValidationReport:
    """Combine check outcomes; the first failure in stage order names the
    category. A safety factor outside the target range does not fail the
    report: it is routed back to the agents as structural feedback."""
    category = None
    if design_space.violated:
        category = CATEGORY_DESIGN_SPACE
    elif not fix_area_ok:
        category = CATEGORY_FIX_AREA
    elif not load_area_ok:
        category = CATEGORY_LOAD_AREA
    elif not connectivity.all_regions_connected:
        category = CATEGORY_CONNECTIVITY
    elif not meshable or not fea.succeeded:
        category = CATEGORY_FEA
    verdict = "valid" if category is None else "failed"
    return ValidationReport(
        design_space=design_space,
        connectivity=connectivity,
        fix_area_ok=fix_area_ok,
        load_area_ok=load_area_ok,
        meshable=meshable,
        fea=fea,
        verdict=verdict,
        failure_category=category,
    )
