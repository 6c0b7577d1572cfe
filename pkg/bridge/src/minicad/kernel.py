"""Solid modeling core: CSG primitives, booleans, tessellation, STL export.

Lengths are mm. Every shape answers membership queries, tessellates to a
watertight triangle surface, reports its volume and its face count (the
number of bounding surfaces). Booleans tessellate through a deterministic
voxel-boundary extraction, so their surface is blocky but closed; their
face count merges coplanar patches of that surface.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

#: Voxels along the longest bounding-box axis when sampling boolean solids.
BOOLEAN_RESOLUTION = 128

_CIRCLE_SEGMENTS = 64
_SPHERE_RINGS = 32


class KernelError(Exception):
    """Raised for invalid profiles or degenerate modeling operations."""


@dataclass(frozen=True)
class _Bounds:
    lo: np.ndarray
    hi: np.ndarray

    def merged(self, other: "_Bounds") -> "_Bounds":
        return _Bounds(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))


class Shape:
    """Base class; shapes are immutable and composable."""

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> _Bounds:
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def face_count(self) -> int:
        raise NotImplementedError

    def tessellate(self) -> tuple[np.ndarray, np.ndarray]:
        """(vertices, triangles) with outward-facing winding."""
        raise NotImplementedError

    # boolean sugar mirroring common CAD APIs
    def union(self, other: "Shape") -> "Shape":
        return _Boolean("union", self, other)

    def cut(self, other: "Shape") -> "Shape":
        return _Boolean("cut", self, other)

    def intersect(self, other: "Shape") -> "Shape":
        return _Boolean("intersect", self, other)

    def export_stl(self, path) -> None:
        vertices, triangles = self.tessellate()
        write_stl(path, vertices, triangles)


class _Box(Shape):
    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(hi - lo <= 0):
            raise KernelError("box must have positive extent on all axes")
        self._lo, self._hi = lo, hi

    def contains(self, pts):
        return np.all((pts >= self._lo) & (pts <= self._hi), axis=1)

    def bounds(self):
        return _Bounds(self._lo.copy(), self._hi.copy())

    def volume(self):
        return float(np.prod(self._hi - self._lo))

    def face_count(self):
        return 6

    def tessellate(self):
        x0, y0, z0 = self._lo
        x1, y1, z1 = self._hi
        v = np.array(
            [
                [x0, y0, z0], [x1, y0, z0], [x0, y1, z0], [x1, y1, z0],
                [x0, y0, z1], [x1, y0, z1], [x0, y1, z1], [x1, y1, z1],
            ]
        )
        t = np.array(
            [
                (0, 2, 1), (1, 2, 3),
                (4, 5, 6), (5, 7, 6),
                (0, 1, 4), (1, 5, 4),
                (2, 6, 3), (3, 6, 7),
                (0, 4, 2), (2, 4, 6),
                (1, 3, 5), (3, 7, 5),
            ],
            dtype=np.int64,
        )
        return v, t


_AXES = {"x": 0, "y": 1, "z": 2}


class _Cylinder(Shape):
    def __init__(self, radius, height, origin=(0.0, 0.0, 0.0), axis="z",
                 segments=_CIRCLE_SEGMENTS):
        if radius <= 0 or height <= 0:
            raise KernelError("cylinder radius and height must be positive")
        if axis not in _AXES:
            raise KernelError("cylinder axis must be one of x, y, z")
        if segments < 8:
            raise KernelError("cylinder needs at least 8 segments")
        self.radius = float(radius)
        self.height = float(height)
        self.origin = np.asarray(origin, dtype=float)
        self.axis = _AXES[axis]
        self.segments = int(segments)

    def contains(self, pts):
        rel = pts - self.origin
        w = rel[:, self.axis]
        uv = np.delete(rel, self.axis, axis=1)
        return (w >= 0) & (w <= self.height) & (np.sum(uv**2, axis=1) <= self.radius**2)

    def bounds(self):
        lo = self.origin.copy()
        hi = self.origin.copy()
        for d in range(3):
            if d == self.axis:
                hi[d] += self.height
            else:
                lo[d] -= self.radius
                hi[d] += self.radius
        return _Bounds(lo, hi)

    def volume(self):
        return math.pi * self.radius**2 * self.height

    def face_count(self):
        return 3  # two caps plus the lateral surface

    def tessellate(self):
        n = self.segments
        # cyclic (u, v, w) axis mapping keeps the frame right-handed for
        # every extrusion axis, so one winding rule fits all
        u_axis = (self.axis + 1) % 3
        v_axis = (self.axis + 2) % 3
        verts = []
        for w in (0.0, self.height):
            for k in range(n):
                a = 2 * math.pi * k / n
                p = self.origin.copy()
                p[u_axis] += self.radius * math.cos(a)
                p[v_axis] += self.radius * math.sin(a)
                p[self.axis] += w
                verts.append(p)
        lo_c = len(verts)
        verts.append(self.origin.copy())
        hi_c = len(verts)
        top = self.origin.copy()
        top[self.axis] += self.height
        verts.append(top)
        tris = []
        for k in range(n):
            k2 = (k + 1) % n
            bot_a, bot_b = k, k2
            top_a, top_b = n + k, n + k2
            tris.append((bot_a, bot_b, top_b))  # lateral, outward
            tris.append((bot_a, top_b, top_a))
            tris.append((lo_c, bot_b, bot_a))  # bottom cap, outward -w
            tris.append((hi_c, top_a, top_b))  # top cap, outward +w
        return np.asarray(verts), np.asarray(tris, dtype=np.int64)


class _Sphere(Shape):
    def __init__(self, radius, center=(0.0, 0.0, 0.0), rings=_SPHERE_RINGS):
        if radius <= 0:
            raise KernelError("sphere radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.rings = int(rings)

    def contains(self, pts):
        return np.sum((pts - self.center) ** 2, axis=1) <= self.radius**2

    def bounds(self):
        return _Bounds(self.center - self.radius, self.center + self.radius)

    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius**3

    def face_count(self):
        return 1

    def tessellate(self):
        n_lat = self.rings
        n_lon = 2 * self.rings
        verts = [self.center + (0.0, 0.0, self.radius)]
        for i in range(1, n_lat):
            phi = math.pi * i / n_lat
            for j in range(n_lon):
                theta = 2 * math.pi * j / n_lon
                verts.append(
                    self.center
                    + self.radius
                    * np.array(
                        [
                            math.sin(phi) * math.cos(theta),
                            math.sin(phi) * math.sin(theta),
                            math.cos(phi),
                        ]
                    )
                )
        verts.append(self.center + (0.0, 0.0, -self.radius))
        south = len(verts) - 1
        tris = []
        ring = lambda i, j: 1 + (i - 1) * n_lon + (j % n_lon)
        for j in range(n_lon):
            tris.append((0, ring(1, j), ring(1, j + 1)))
            tris.append((south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)))
        for i in range(1, n_lat - 1):
            for j in range(n_lon):
                a, b = ring(i, j), ring(i, j + 1)
                c, d = ring(i + 1, j), ring(i + 1, j + 1)
                tris.append((a, c, b))
                tris.append((b, c, d))
        return np.asarray(verts), np.asarray(tris, dtype=np.int64)


def _signed_area(polygon) -> float:
    area = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return 0.5 * area


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    return orient(a, b, c) * orient(a, b, d) < 0 and orient(c, d, a) * orient(c, d, b) < 0


def _validate_profile(polygon) -> list[tuple[float, float]]:
    if polygon is None or len(polygon) < 3:
        raise KernelError("cannot extrude an open profile: need a closed outline "
                          "with at least 3 points")
    pts = [(float(u), float(v)) for u, v in polygon]
    if len({p for p in pts}) < 3:
        raise KernelError("cannot extrude an open profile: repeated points")
    if abs(_signed_area(pts)) < 1e-12:
        raise KernelError("cannot extrude an open profile: outline has zero area")
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                raise KernelError("cannot extrude a self-intersecting profile")
    if _signed_area(pts) < 0:
        pts.reverse()  # normalize to counter-clockwise
    return pts


def _ear_clip(polygon: list[tuple[float, float]]) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon by ear clipping."""
    indices = list(range(len(polygon)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def point_in_tri(p, a, b, c):
        d1 = cross(a, b, p)
        d2 = cross(b, c, p)
        d3 = cross(c, a, p)
        return d1 >= -1e-12 and d2 >= -1e-12 and d3 >= -1e-12

    guard = 0
    while len(indices) > 3 and guard < 10000:
        guard += 1
        n = len(indices)
        for k in range(n):
            i0, i1, i2 = indices[(k - 1) % n], indices[k], indices[(k + 1) % n]
            a, b, c = polygon[i0], polygon[i1], polygon[i2]
            if cross(a, b, c) <= 1e-12:
                continue  # reflex corner
            if any(
                point_in_tri(polygon[j], a, b, c)
                for j in indices
                if j not in (i0, i1, i2)
            ):
                continue
            tris.append((i0, i1, i2))
            indices.pop(k)
            break
        else:
            raise KernelError("profile triangulation failed")
    tris.append(tuple(indices))
    return tris


_PLANES = {"xy": (0, 1, 2), "yz": (1, 2, 0), "zx": (2, 0, 1)}


class _Extrude(Shape):
    def __init__(self, polygon, height, plane="xy", offset=0.0):
        if plane not in _PLANES:
            raise KernelError("extrude plane must be xy, yz or zx")
        if height <= 0:
            raise KernelError("extrusion height must be positive")
        self.polygon = _validate_profile(polygon)
        self.height = float(height)
        self.plane = plane
        self.offset = float(offset)

    def contains(self, pts):
        ui, vi, wi = _PLANES[self.plane]
        u, v, w = pts[:, ui], pts[:, vi], pts[:, wi]
        inside = np.zeros(len(pts), dtype=bool)
        poly = self.polygon
        n = len(poly)
        for i in range(n):
            u1, v1 = poly[i]
            u2, v2 = poly[(i + 1) % n]
            crosses = (v1 > v) != (v2 > v)
            with np.errstate(divide="ignore", invalid="ignore"):
                u_hit = u1 + (v - v1) * (u2 - u1) / (v2 - v1)
            inside ^= crosses & (u < u_hit)
        return inside & (w >= self.offset) & (w <= self.offset + self.height)

    def bounds(self):
        ui, vi, wi = _PLANES[self.plane]
        lo = np.zeros(3)
        hi = np.zeros(3)
        us = [p[0] for p in self.polygon]
        vs = [p[1] for p in self.polygon]
        lo[ui], hi[ui] = min(us), max(us)
        lo[vi], hi[vi] = min(vs), max(vs)
        lo[wi], hi[wi] = self.offset, self.offset + self.height
        return _Bounds(lo, hi)

    def volume(self):
        return abs(_signed_area(self.polygon)) * self.height

    def face_count(self):
        return len(self.polygon) + 2  # side walls plus two caps

    def tessellate(self):
        ui, vi, wi = _PLANES[self.plane]
        n = len(self.polygon)

        def lift(uv, w):
            p = np.zeros(3)
            p[ui], p[vi], p[wi] = uv[0], uv[1], w
            return p

        verts = [lift(p, self.offset) for p in self.polygon]
        verts += [lift(p, self.offset + self.height) for p in self.polygon]
        # every plane mapping is a cyclic permutation, so the (u, v, w)
        # frame is right-handed and one winding rule covers all planes
        tris = []
        for a, b, c in _ear_clip(self.polygon):
            tris.append((a, c, b))  # bottom cap faces -w
            tris.append((n + a, n + b, n + c))  # top cap faces +w
        for i in range(n):
            j = (i + 1) % n
            tris.append((i, j, n + j))  # lateral, outward for a CCW outline
            tris.append((i, n + j, n + i))
        return np.asarray(verts), np.asarray(tris, dtype=np.int64)


class _Boolean(Shape):
    def __init__(self, op, a: Shape, b: Shape):
        if op not in ("union", "cut", "intersect"):
            raise KernelError(f"unknown boolean op '{op}'")
        self.op = op
        self.a = a
        self.b = b

    def contains(self, pts):
        in_a = self.a.contains(pts)
        in_b = self.b.contains(pts)
        if self.op == "union":
            return in_a | in_b
        if self.op == "intersect":
            return in_a & in_b
        return in_a & ~in_b

    def bounds(self):
        if self.op == "cut":
            return self.a.bounds()
        if self.op == "intersect":
            a, b = self.a.bounds(), self.b.bounds()
            lo = np.maximum(a.lo, b.lo)
            hi = np.minimum(a.hi, b.hi)
            hi = np.maximum(hi, lo)  # possibly empty
            return _Bounds(lo, hi)
        return self.a.bounds().merged(self.b.bounds())

    def _voxels(self):
        bounds = self.bounds()
        extent = bounds.hi - bounds.lo
        longest = float(extent.max())
        if longest <= 0:
            raise KernelError("boolean result is empty")
        spacing = longest / BOOLEAN_RESOLUTION
        dims = tuple(max(1, int(math.ceil(e / spacing - 1e-9))) for e in extent)
        ix, iy, iz = np.meshgrid(
            np.arange(dims[0]), np.arange(dims[1]), np.arange(dims[2]), indexing="ij"
        )
        idx = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)
        centers = bounds.lo + (idx + 0.5) * spacing
        occ = np.zeros(len(centers), dtype=bool)
        chunk = 262144
        for s in range(0, len(centers), chunk):
            occ[s : s + chunk] = self.contains(centers[s : s + chunk])
        return bounds.lo, spacing, dims, occ.reshape(dims)

    def volume(self):
        _, spacing, _, occ = self._voxels()
        return float(occ.sum()) * spacing**3

    def tessellate(self):
        origin, spacing, dims, occ = self._voxels()
        if not occ.any():
            raise KernelError("boolean result is empty")
        padded = np.zeros((dims[0] + 2, dims[1] + 2, dims[2] + 2), dtype=bool)
        padded[1:-1, 1:-1, 1:-1] = occ
        verts: dict[tuple[int, int, int], int] = {}
        tris = []

        def vid(i, j, k):
            key = (i, j, k)
            if key not in verts:
                verts[key] = len(verts)
            return verts[key]

        # quad corner tables per face direction, wound outward
        faces = [
            ((1, 0, 0), lambda i, j, k: [(i + 1, j, k), (i + 1, j + 1, k),
                                         (i + 1, j + 1, k + 1), (i + 1, j, k + 1)]),
            ((-1, 0, 0), lambda i, j, k: [(i, j, k), (i, j, k + 1),
                                          (i, j + 1, k + 1), (i, j + 1, k)]),
            ((0, 1, 0), lambda i, j, k: [(i, j + 1, k), (i, j + 1, k + 1),
                                         (i + 1, j + 1, k + 1), (i + 1, j + 1, k)]),
            ((0, -1, 0), lambda i, j, k: [(i, j, k), (i + 1, j, k),
                                          (i + 1, j, k + 1), (i, j, k + 1)]),
            ((0, 0, 1), lambda i, j, k: [(i, j, k + 1), (i + 1, j, k + 1),
                                         (i + 1, j + 1, k + 1), (i, j + 1, k + 1)]),
            ((0, 0, -1), lambda i, j, k: [(i, j, k), (i, j + 1, k),
                                          (i + 1, j + 1, k), (i + 1, j, k)]),
        ]
        occupied = np.argwhere(occ)
        for i, j, k in occupied:
            for (dx, dy, dz), corners in faces:
                if padded[i + 1 + dx, j + 1 + dy, k + 1 + dz]:
                    continue
                quad = [vid(*c) for c in corners(i, j, k)]
                tris.append((quad[0], quad[1], quad[2]))
                tris.append((quad[0], quad[2], quad[3]))
        coords = np.empty((len(verts), 3))
        for (i, j, k), idx in verts.items():
            coords[idx] = origin + np.array([i, j, k]) * spacing
        return coords, np.asarray(tris, dtype=np.int64)

    def face_count(self):
        """Coplanar-patch count over the extracted boundary surface."""
        vertices, triangles = self.tessellate()
        normals = np.cross(
            vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
            vertices[triangles[:, 2]] - vertices[triangles[:, 0]],
        )
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        normals = normals / np.where(norms > 0, norms, 1.0)
        parent = list(range(len(triangles)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        edge_map: dict[tuple[int, int], list[int]] = {}
        for ti, tri in enumerate(triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                edge_map.setdefault((int(min(a, b)), int(max(a, b))), []).append(ti)
        for pair in edge_map.values():
            if len(pair) == 2:
                a, b = pair
                if float(normals[a] @ normals[b]) > 0.999:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        return len({find(i) for i in range(len(triangles))})


def write_stl(path, vertices: np.ndarray, triangles: np.ndarray) -> None:
    """Standard binary STL: 80-byte header, uint32 count, 50-byte records."""
    with open(path, "wb") as fh:
        fh.write(b"minicad export".ljust(80, b"\0"))
        fh.write(struct.pack("<I", len(triangles)))
        for tri in triangles:
            p = vertices[tri]
            normal = np.cross(p[1] - p[0], p[2] - p[0])
            norm = np.linalg.norm(normal)
            if norm > 0:
                normal = normal / norm
            fh.write(struct.pack("<3f", *normal))
            for vertex in p:
                fh.write(struct.pack("<3f", *vertex))
            fh.write(struct.pack("<H", 0))


# -- public constructors ------------------------------------------------------


def box(dx: float, dy: float, dz: float, origin=(0.0, 0.0, 0.0)) -> Shape:
    """Axis-aligned box with its min corner at `origin`."""
    o = np.asarray(origin, dtype=float)
    return _Box(o, o + np.array([dx, dy, dz], dtype=float))


def cylinder(radius: float, height: float, origin=(0.0, 0.0, 0.0), axis: str = "z",
             segments: int = _CIRCLE_SEGMENTS) -> Shape:
    """Circular cylinder from `origin` along +axis."""
    return _Cylinder(radius, height, origin, axis, segments)


def sphere(radius: float, center=(0.0, 0.0, 0.0)) -> Shape:
    return _Sphere(radius, center)


def extrude(polygon, height: float, plane: str = "xy", offset: float = 0.0) -> Shape:
    """Prism over a closed simple outline; raises KernelError on open or
    self-intersecting profiles."""
    return _Extrude(polygon, height, plane, offset)


def union(a: Shape, b: Shape) -> Shape:
    return _Boolean("union", a, b)


def cut(a: Shape, b: Shape) -> Shape:
    return _Boolean("cut", a, b)


def intersect(a: Shape, b: Shape) -> Shape:
    return _Boolean("intersect", a, b)
