"""CSG geometry programs: the JSON design language and its evaluation.

A geometry program is an expression tree of primitives (box, cylinder,
sphere, polygon extrusion) combined with boolean operators. Membership
testing is exact set-theoretic evaluation; volume is estimated on a voxel
grid over the program's bounding box. Boundary points may resolve either
way (primitives use non-strict comparisons).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyGeometry, SchemaError
from .loadcase import Box3

_EXTRUDE_PLANES = {
    # plane -> (u axis, v axis, extrusion axis)
    "xy": (0, 1, 2),
    "yz": (1, 2, 0),
    "zx": (2, 0, 1),
}


class Node:
    """Base class for CSG expression nodes."""

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (N, 3) array of mm points."""
        raise NotImplementedError

    def bounding_box(self) -> Box3:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class BoxNode(Node):
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.min_corner)
        hi = np.asarray(self.max_corner)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def bounding_box(self) -> Box3:
        return Box3.from_bounds(self.min_corner, self.max_corner)

    def to_json(self) -> dict:
        return {"op": "box", "min": list(self.min_corner), "max": list(self.max_corner)}


@dataclass(frozen=True)
class CylinderNode(Node):
    p0: tuple[float, float, float]
    p1: tuple[float, float, float]
    radius: float

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        a = np.asarray(self.p0)
        d = np.asarray(self.p1) - a
        len2 = float(d @ d)
        t = (pts - a) @ d / len2
        closest = a + t[:, None] * d
        radial2 = np.sum((pts - closest) ** 2, axis=1)
        return (t >= 0.0) & (t <= 1.0) & (radial2 <= self.radius**2)

    def bounding_box(self) -> Box3:
        a = np.asarray(self.p0)
        b = np.asarray(self.p1)
        d = b - a
        norm = math.sqrt(float(d @ d))
        # per-axis cap-circle half extent: r * sqrt(1 - (d_i/|d|)^2)
        pad = self.radius * np.sqrt(np.maximum(0.0, 1.0 - (d / norm) ** 2))
        lo = np.minimum(a, b) - pad
        hi = np.maximum(a, b) + pad
        return Box3.from_bounds(lo, hi)

    def to_json(self) -> dict:
        return {"op": "cylinder", "p0": list(self.p0), "p1": list(self.p1), "radius": self.radius}


@dataclass(frozen=True)
class SphereNode(Node):
    center: tuple[float, float, float]
    radius: float

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        return np.sum((pts - c) ** 2, axis=1) <= self.radius**2

    def bounding_box(self) -> Box3:
        c = np.asarray(self.center)
        return Box3.from_bounds(c - self.radius, c + self.radius)

    def to_json(self) -> dict:
        return {"op": "sphere", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class ExtrudeNode(Node):
    plane: str
    polygon: tuple[tuple[float, float], ...]
    lo: float
    hi: float

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        ui, vi, wi = _EXTRUDE_PLANES[self.plane]
        u = pts[:, ui]
        v = pts[:, vi]
        w = pts[:, wi]
        inside = np.zeros(len(pts), dtype=bool)
        poly = self.polygon
        m = len(poly)
        for i in range(m):
            u1, v1 = poly[i]
            u2, v2 = poly[(i + 1) % m]
            crosses = (v1 > v) != (v2 > v)
            with np.errstate(divide="ignore", invalid="ignore"):
                u_hit = u1 + (v - v1) * (u2 - u1) / (v2 - v1)
            inside ^= crosses & (u < u_hit)
        return inside & (w >= self.lo) & (w <= self.hi)

    def bounding_box(self) -> Box3:
        ui, vi, wi = _EXTRUDE_PLANES[self.plane]
        us = [p[0] for p in self.polygon]
        vs = [p[1] for p in self.polygon]
        lo = [0.0, 0.0, 0.0]
        hi = [0.0, 0.0, 0.0]
        lo[ui], hi[ui] = min(us), max(us)
        lo[vi], hi[vi] = min(vs), max(vs)
        lo[wi], hi[wi] = self.lo, self.hi
        return Box3.from_bounds(lo, hi)

    def to_json(self) -> dict:
        return {
            "op": "extrude",
            "plane": self.plane,
            "polygon": [list(p) for p in self.polygon],
            "lo": self.lo,
            "hi": self.hi,
        }


@dataclass(frozen=True)
class BooleanNode(Node):
    op: str  # "union" | "difference" | "intersection"
    children: tuple[Node, ...]

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        masks = None
        if self.op == "union":
            masks = self.children[0].contains_points(pts)
            for child in self.children[1:]:
                masks |= child.contains_points(pts)
        elif self.op == "intersection":
            masks = self.children[0].contains_points(pts)
            for child in self.children[1:]:
                masks &= child.contains_points(pts)
        elif self.op == "difference":
            masks = self.children[0].contains_points(pts)
            for child in self.children[1:]:
                masks &= ~child.contains_points(pts)
        else:  # pragma: no cover - guarded at parse time
            raise ValueError(self.op)
        return masks

    def bounding_box(self) -> Box3:
        boxes = [child.bounding_box() for child in self.children]
        if self.op == "difference":
            return boxes[0]
        if self.op == "intersection":
            lo = [max(b.lo[i] for b in boxes) for i in range(3)]
            hi = [min(b.hi[i] for b in boxes) for i in range(3)]
            # disjoint children: collapse to a zero box at the first child
            for i in range(3):
                if lo[i] > hi[i]:
                    lo[i] = hi[i] = boxes[0].lo[i]
            return Box3.from_bounds(lo, hi)
        lo = [min(b.lo[i] for b in boxes) for i in range(3)]
        hi = [max(b.hi[i] for b in boxes) for i in range(3)]
        return Box3.from_bounds(lo, hi)

    def to_json(self) -> dict:
        return {"op": self.op, "children": [c.to_json() for c in self.children]}


@dataclass(frozen=True)
class GeometryProgram:
    """A validated CSG expression tree; the agent's design output."""

    root: Node

    def contains(self, p: Sequence[float]) -> bool:
        pts = np.asarray([p], dtype=float)
        return bool(self.root.contains_points(pts)[0])

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        return self.root.contains_points(np.asarray(pts, dtype=float))

    def bounding_box(self) -> Box3:
        return self.root.bounding_box()

    def to_json_text(self) -> str:
        return json.dumps(self.root.to_json(), indent=2)


def contains(program: GeometryProgram, p: Sequence[float]) -> bool:
    """Exact set-theoretic membership of a single point."""
    return program.contains(p)


def _vec3(obj, path: str) -> tuple[float, float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 3:
        raise SchemaError(path, "expected a 3-vector")
    try:
        return tuple(float(v) for v in obj)
    except (TypeError, ValueError) as exc:
        raise SchemaError(path, "expected numeric components") from exc


def _positive(value, path: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(path, "expected a number") from exc
    if not v > 0:
        raise SchemaError(path, "must be strictly positive")
    return v


def _segments_properly_intersect(a, b, c, d) -> bool:
    """True if open segments ab and cd cross (shared endpoints excluded)."""

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def _validate_polygon(poly: Sequence[Sequence[float]], path: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(poly, (list, tuple)) or len(poly) < 3:
        raise SchemaError(path, "polygon needs at least 3 vertices")
    verts = []
    for i, v in enumerate(poly):
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            raise SchemaError(f"{path}[{i}]", "expected a 2-vector")
        verts.append((float(v[0]), float(v[1])))
    area2 = 0.0
    m = len(verts)
    for i in range(m):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % m]
        area2 += x1 * y2 - x2 * y1
    if abs(area2) < 1e-12:
        raise SchemaError(path, "polygon has zero area")
    for i in range(m):
        for j in range(i + 1, m):
            if j == i or (j + 1) % m == i or (i + 1) % m == j:
                continue  # adjacent edges share a vertex
            if _segments_properly_intersect(
                verts[i], verts[(i + 1) % m], verts[j], verts[(j + 1) % m]
            ):
                raise SchemaError(path, f"polygon is self-intersecting (edges {i} and {j})")
    return tuple(verts)


def _parse_node(obj, path: str) -> Node:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object with an 'op' field")
    op = obj.get("op")
    if op == "box":
        lo = _vec3(obj.get("min"), f"{path}.min")
        hi = _vec3(obj.get("max"), f"{path}.max")
        for axis in range(3):
            if not hi[axis] - lo[axis] > 0:
                raise SchemaError(f"{path}.max", "box must have positive extent on all axes")
        return BoxNode(lo, hi)
    if op == "cylinder":
        p0 = _vec3(obj.get("p0"), f"{path}.p0")
        p1 = _vec3(obj.get("p1"), f"{path}.p1")
        radius = _positive(obj.get("radius"), f"{path}.radius")
        if math.dist(p0, p1) <= 0:
            raise SchemaError(f"{path}.p1", "cylinder axis must have positive length")
        return CylinderNode(p0, p1, radius)
    if op == "sphere":
        center = _vec3(obj.get("center"), f"{path}.center")
        radius = _positive(obj.get("radius"), f"{path}.radius")
        return SphereNode(center, radius)
    if op == "extrude":
        plane = obj.get("plane")
        if plane not in _EXTRUDE_PLANES:
            raise SchemaError(f"{path}.plane", "plane must be one of xy, yz, zx")
        polygon = _validate_polygon(obj.get("polygon"), f"{path}.polygon")
        lo = obj.get("lo")
        hi = obj.get("hi")
        if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)):
            raise SchemaError(f"{path}.lo", "lo/hi must be numbers")
        if not float(hi) - float(lo) > 0:
            raise SchemaError(f"{path}.hi", "extrusion must have positive height")
        return ExtrudeNode(plane, polygon, float(lo), float(hi))
    if op in ("union", "difference", "intersection"):
        children_obj = obj.get("children")
        if not isinstance(children_obj, list) or not children_obj:
            raise SchemaError(f"{path}.children", "boolean node needs at least one child")
        if op == "difference" and len(children_obj) < 2:
            raise SchemaError(f"{path}.children", "difference needs at least two children")
        children = tuple(
            _parse_node(c, f"{path}.children[{i}]") for i, c in enumerate(children_obj)
        )
        return BooleanNode(op, children)
    raise SchemaError(f"{path}.op", f"unknown op '{op}'")


def parse_program(json_text: str) -> GeometryProgram:
    """Parse and validate a geometry-program JSON document."""
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    return GeometryProgram(root=_parse_node(data, "$"))


def program_from_dict(data: dict) -> GeometryProgram:
    """Build a program from an already-decoded JSON object."""
    return GeometryProgram(root=_parse_node(data, "$"))


def estimate_volume(program: GeometryProgram, resolution: int = 64) -> float:
    """Occupied-voxel volume over the program's bounding box, in mm^3."""
    from .meshing import voxelize

    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    grid = voxelize(program.contains_points, program.bounding_box(), resolution)
    occupied = int(grid.occupancy.sum())
    if occupied == 0:
        raise EmptyGeometry("program occupies no voxels at this resolution")
    return occupied * grid.spacing**3
