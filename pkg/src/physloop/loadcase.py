"""Structured load cases: schema, parsing, validation, and scale variants.

A load case is the problem statement of the benchmark: an axis-aligned
design domain, box selectors naming regions of interest, fixed supports
(per-axis translation locks) and applied forces. All lengths are mm, all
forces N.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

from .errors import SchemaError

#: Dimensionless scale sets used to expand each base case into 25 variants.
#: Symmetric around 1.0; the benchmark ships 20 base cases x 5 x 5 = 500
#: configurations.
GEOM_SCALES: tuple[float, ...] = (0.5, 0.75, 1.0, 1.5, 2.0)
FORCE_SCALES: tuple[float, ...] = (0.5, 0.75, 1.0, 1.5, 2.0)

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box in mm. Zero extent on an axis is a plane/line/point."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box3":
        return cls(lo[0], hi[0], lo[1], hi[1], lo[2], hi[2])

    @property
    def lo(self) -> tuple[float, float, float]:
        return (self.x_min, self.y_min, self.z_min)

    @property
    def hi(self) -> tuple[float, float, float]:
        return (self.x_max, self.y_max, self.z_max)

    @property
    def extent(self) -> tuple[float, float, float]:
        return (self.x_max - self.x_min, self.y_max - self.y_min, self.z_max - self.z_min)

    @property
    def center(self) -> tuple[float, float, float]:
        return (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
            0.5 * (self.z_min + self.z_max),
        )

    def volume(self) -> float:
        ex, ey, ez = self.extent
        return ex * ey * ez

    def contains(self, p: Sequence[float]) -> bool:
        return (
            self.x_min <= p[0] <= self.x_max
            and self.y_min <= p[1] <= self.y_max
            and self.z_min <= p[2] <= self.z_max
        )

    def intersects(self, other: "Box3") -> bool:
        return (
            self.x_min <= other.x_max
            and other.x_min <= self.x_max
            and self.y_min <= other.y_max
            and other.y_min <= self.y_max
            and self.z_min <= other.z_max
            and other.z_min <= self.z_max
        )

    def inflate(self, margin: float) -> "Box3":
        return Box3(
            self.x_min - margin,
            self.x_max + margin,
            self.y_min - margin,
            self.y_max + margin,
            self.z_min - margin,
            self.z_max + margin,
        )

    def scaled(self, factor: float) -> "Box3":
        return Box3(*(v * factor for v in (self.x_min, self.x_max, self.y_min,
                                            self.y_max, self.z_min, self.z_max)))

    def to_json(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "z_min": self.z_min,
            "z_max": self.z_max,
        }


@dataclass(frozen=True)
class SpatialSelector:
    """Named box query identifying mesh regions for supports and loads."""

    id: str
    query: Box3


@dataclass(frozen=True)
class BoundaryCondition:
    """Fixed support: per-axis translation locks on the nodes of a region."""

    selector_id: str
    kind: str = "fixed_displacement"
    dof_lock: tuple[bool, bool, bool] = (True, True, True)


@dataclass(frozen=True)
class Load:
    """Force applied over a region, split across the selected nodes."""

    selector_id: str
    kind: str  # "distributed_force" | "point_force"
    magnitude_newtons: float
    direction: tuple[float, float, float]


@dataclass(frozen=True)
class VariantSpec:
    """Multiplier pair producing one of the 25 variants of a base case."""

    geom_scale: float
    force_scale: float

    def __post_init__(self):
        if self.geom_scale <= 0 or self.force_scale <= 0:
            raise ValueError("variant scale factors must be positive")


@dataclass(frozen=True)
class LoadCase:
    """Complete problem statement; immutable and safe to share across runs."""

    problem_id: str
    domain_bounds: Box3
    selectors: tuple[SpatialSelector, ...]
    boundary_conditions: tuple[BoundaryCondition, ...]
    loads: tuple[Load, ...]
    units: str = "mm"

    def selector(self, selector_id: str) -> SpatialSelector:
        for sel in self.selectors:
            if sel.id == selector_id:
                return sel
        raise KeyError(selector_id)

    def support_selector_ids(self) -> tuple[str, ...]:
        return tuple(bc.selector_id for bc in self.boundary_conditions)

    def load_selector_ids(self) -> tuple[str, ...]:
        return tuple(ld.selector_id for ld in self.loads)


LOAD_KINDS = ("distributed_force", "point_force")


def _validate(case: LoadCase) -> LoadCase:
    """Enforce all load-case invariants, raising SchemaError with a path."""
    ex, ey, ez = case.domain_bounds.extent
    if ex <= 0 or ey <= 0 or ez <= 0:
        raise SchemaError("design_domain.bounds", "domain must have positive extent on all axes")
    ids = [sel.id for sel in case.selectors]
    if len(set(ids)) != len(ids):
        raise SchemaError("spatial_selectors", "duplicate selector ids")
    known = set(ids)
    for i, sel in enumerate(case.selectors):
        qx, qy, qz = sel.query.extent
        if qx < 0 or qy < 0 or qz < 0:
            raise SchemaError(f"spatial_selectors[{i}].query", "negative extent")
        if not sel.query.intersects(case.domain_bounds):
            raise SchemaError(
                f"spatial_selectors[{i}].query",
                f"selector '{sel.id}' does not intersect the design domain",
            )
    if not case.boundary_conditions:
        raise SchemaError("boundary_conditions", "at least one boundary condition required")
    if not case.loads:
        raise SchemaError("loads", "at least one load required")
    for i, bc in enumerate(case.boundary_conditions):
        if bc.selector_id not in known:
            raise SchemaError(
                f"boundary_conditions[{i}].spatial_selector_id",
                f"unknown selector '{bc.selector_id}'",
            )
        if bc.kind != "fixed_displacement":
            raise SchemaError(f"boundary_conditions[{i}].type", f"unsupported type '{bc.kind}'")
        if not any(bc.dof_lock):
            raise SchemaError(f"boundary_conditions[{i}].dof_lock", "no locked degree of freedom")
    for i, load in enumerate(case.loads):
        if load.selector_id not in known:
            raise SchemaError(
                f"loads[{i}].spatial_selector_id", f"unknown selector '{load.selector_id}'"
            )
        if load.kind not in LOAD_KINDS:
            raise SchemaError(f"loads[{i}].type", f"unsupported type '{load.kind}'")
        if not load.magnitude_newtons > 0:
            raise SchemaError(f"loads[{i}].magnitude_newtons", "magnitude must be positive")
        norm = math.sqrt(sum(c * c for c in load.direction))
        if abs(norm - 1.0) > 1e-9:
            raise SchemaError(f"loads[{i}].direction", f"direction must be a unit vector (|d|={norm:.12g})")
    return case


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def _box_from_json(obj, path: str) -> Box3:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object with x/y/z min/max keys")
    vals = []
    for key in ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max"):
        v = _require(obj, key, path)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError(f"{path}.{key}", "expected a number")
        vals.append(float(v))
    return Box3(*vals)


def parse_load_case(json_text: str) -> LoadCase:
    """Parse and validate a load-case JSON document.

    Unknown fields are ignored so files with extra metadata still load.
    Raises SchemaError naming the offending field path.
    """
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("$", "top level must be an object")

    meta = data.get("meta", {})
    problem_id = str(meta.get("problem_id", "")) if isinstance(meta, dict) else ""
    if not problem_id:
        raise SchemaError("meta.problem_id", "missing required field")

    domain = _require(data, "design_domain", "")
    units = domain.get("units", "mm")
    if units != "mm":
        raise SchemaError("design_domain.units", f"unsupported unit '{units}' (only mm)")
    bounds = _box_from_json(_require(domain, "bounds", "design_domain"), "design_domain.bounds")

    selectors = []
    for i, sel in enumerate(data.get("spatial_selectors", [])):
        path = f"spatial_selectors[{i}]"
        sel_id = str(_require(sel, "id", path))
        query = _box_from_json(_require(sel, "query", path), f"{path}.query")
        selectors.append(SpatialSelector(id=sel_id, query=query))

    bcs = []
    for i, bc in enumerate(data.get("boundary_conditions", [])):
        path = f"boundary_conditions[{i}]"
        sel_id = str(_require(bc, "spatial_selector_id", path))
        kind = str(_require(bc, "type", path))
        lock_obj = _require(bc, "dof_lock", path)
        if not isinstance(lock_obj, dict):
            raise SchemaError(f"{path}.dof_lock", "expected an object with ux/uy/uz booleans")
        lock = tuple(bool(lock_obj.get(f"u{ax}", False)) for ax in AXES)
        bcs.append(BoundaryCondition(selector_id=sel_id, kind=kind, dof_lock=lock))

    loads = []
    for i, ld in enumerate(data.get("loads", [])):
        path = f"loads[{i}]"
        sel_id = str(_require(ld, "spatial_selector_id", path))
        kind = str(_require(ld, "type", path))
        mag = _require(ld, "magnitude_newtons", path)
        direction = _require(ld, "direction", path)
        if not isinstance(direction, (list, tuple)) or len(direction) != 3:
            raise SchemaError(f"{path}.direction", "expected a 3-vector")
        loads.append(
            Load(
                selector_id=sel_id,
                kind=kind,
                magnitude_newtons=float(mag),
                direction=tuple(float(c) for c in direction),
            )
        )

    case = LoadCase(
        problem_id=problem_id,
        domain_bounds=bounds,
        selectors=tuple(selectors),
        boundary_conditions=tuple(bcs),
        loads=tuple(loads),
        units=units,
    )
    return _validate(case)


def serialize_load_case(case: LoadCase) -> str:
    """Serialize to the canonical JSON format; inverse of parse_load_case."""
    doc = {
        "meta": {"problem_id": case.problem_id},
        "design_domain": {"units": case.units, "bounds": case.domain_bounds.to_json()},
        "spatial_selectors": [
            {"id": sel.id, "query": sel.query.to_json()} for sel in case.selectors
        ],
        "boundary_conditions": [
            {
                "spatial_selector_id": bc.selector_id,
                "type": bc.kind,
                "dof_lock": {"ux": bc.dof_lock[0], "uy": bc.dof_lock[1], "uz": bc.dof_lock[2]},
            }
            for bc in case.boundary_conditions
        ],
        "loads": [
            {
                "spatial_selector_id": ld.selector_id,
                "type": ld.kind,
                "magnitude_newtons": ld.magnitude_newtons,
                "direction": list(ld.direction),
            }
            for ld in case.loads
        ],
    }
    return json.dumps(doc, indent=2)


def apply_variant(case: LoadCase, variant: VariantSpec) -> LoadCase:
    """Scale all coordinates by geom_scale and all magnitudes by force_scale."""
    g, f = variant.geom_scale, variant.force_scale
    return replace(
        case,
        domain_bounds=case.domain_bounds.scaled(g),
        selectors=tuple(
            replace(sel, query=sel.query.scaled(g)) for sel in case.selectors
        ),
        loads=tuple(
            replace(ld, magnitude_newtons=ld.magnitude_newtons * f) for ld in case.loads
        ),
    )


def enumerate_variants(
    cases: Sequence[LoadCase],
    geom_scales: Sequence[float] = GEOM_SCALES,
    force_scales: Sequence[float] = FORCE_SCALES,
) -> Iterator[tuple[LoadCase, VariantSpec]]:
    """Cartesian product in deterministic order: case, then geom, then force."""
    if not cases or not geom_scales or not force_scales:
        raise ValueError("cases, geom_scales and force_scales must be non-empty")
    for case in cases:
        for g in geom_scales:
            for f in force_scales:
                spec = VariantSpec(geom_scale=g, force_scale=f)
                yield apply_variant(case, spec), spec


def variant_label(variant: VariantSpec) -> str:
    """Stable directory-safe label like 'g1.0_f0.5'."""
    return f"g{variant.geom_scale:g}_f{variant.force_scale:g}"
