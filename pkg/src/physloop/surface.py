"""Triangle surface meshes: STL ingestion, containment and face counting.

This is the ingestion path for externally produced geometry (the CAD-script
bridge exports binary STL) and the source of the render and face-count
inputs for meshes produced by the voxel pipeline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMesh, FormatError, NotWatertight

_DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class SurfaceMesh:
    """Indexed triangle mesh in mm; no degenerate triangles after cleanup."""

    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_normals(self, normalized: bool = True) -> np.ndarray:
        p = self.vertices[self.triangles]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        if normalized:
            norms = np.linalg.norm(n, axis=1, keepdims=True)
            n = n / np.where(norms > 0, norms, 1.0)
        return n

    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.triangle_normals(normalized=False), axis=1)

    def bounding_box(self):
        from .loadcase import Box3

        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return Box3.from_bounds(lo, hi)

    def edge_counts(self) -> dict[tuple[int, int], int]:
        edges = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        edges = np.sort(edges, axis=1)
        counts: dict[tuple[int, int], int] = {}
        for a, b in edges:
            key = (int(a), int(b))
            counts[key] = counts.get(key, 0) + 1
        return counts

    def is_watertight(self) -> bool:
        """Strict manifold closure: every edge shared by exactly 2 triangles."""
        edges = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def is_closed(self) -> bool:
        """Even edge counts: holds even where voxel blocks meet only along
        an edge (4 incident triangles), which breaks strict manifoldness."""
        edges = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts % 2 == 0))

    def compact(self) -> "SurfaceMesh":
        """Drop unreferenced vertices and reindex triangles."""
        used, inverse = np.unique(self.triangles.ravel(), return_inverse=True)
        return SurfaceMesh(
            vertices=self.vertices[used],
            triangles=inverse.reshape(-1, 3).astype(np.int64),
        )


def _clean(vertices: np.ndarray, triangles: np.ndarray) -> SurfaceMesh:
    """Deduplicate exact-coordinate vertices and drop degenerate triangles."""
    unique_verts, inverse = np.unique(vertices, axis=0, return_inverse=True)
    tris = inverse[triangles]
    # degenerate: repeated indices or zero area
    distinct = (
        (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    )
    tris = tris[distinct]
    if len(tris):
        p = unique_verts[tris]
        areas = 0.5 * np.linalg.norm(
            np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
        )
        tris = tris[areas > _DEGENERATE_AREA]
    if len(tris) == 0:
        raise EmptyMesh("no non-degenerate triangles")
    return SurfaceMesh(vertices=unique_verts, triangles=tris.astype(np.int64)).compact()


def _load_stl_binary(data: bytes) -> SurfaceMesh:
    if len(data) < 84:
        raise FormatError("binary STL shorter than its 84-byte header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise FormatError(
            f"binary STL truncated: {len(data)} bytes, {expected} required for {count} triangles"
        )
    if count == 0:
        raise EmptyMesh("binary STL declares zero triangles")
    records = np.frombuffer(
        data,
        dtype=np.dtype(
            [("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
        ),
        count=count,
        offset=84,
    )
    verts = records["verts"].reshape(-1, 3).astype(np.float64)
    tris = np.arange(len(verts), dtype=np.int64).reshape(-1, 3)
    return _clean(verts, tris)


def _load_stl_ascii(text: str) -> SurfaceMesh:
    verts: list[list[float]] = []
    in_loop = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("outer loop"):
            in_loop = 0
        elif line.startswith("vertex"):
            parts = line.split()
            if len(parts) != 4:
                raise FormatError(f"line {lineno}: malformed vertex record")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-numeric vertex") from exc
            in_loop += 1
        elif line.startswith("endloop"):
            if in_loop != 3:
                raise FormatError(f"line {lineno}: facet loop with {in_loop} vertices")
    if not verts:
        raise EmptyMesh("ASCII STL contains no facets")
    if len(verts) % 3:
        raise FormatError("ASCII STL vertex count not a multiple of three")
    arr = np.asarray(verts, dtype=np.float64)
    tris = np.arange(len(arr), dtype=np.int64).reshape(-1, 3)
    return _clean(arr, tris)


def load_stl(data: bytes) -> SurfaceMesh:
    """Parse binary or ASCII STL bytes into a cleaned SurfaceMesh."""
    if len(data) == 0:
        raise FormatError("empty STL payload")
    head = data[:512].lstrip()
    if head.startswith(b"solid"):
        # ASCII unless the byte budget says otherwise (some binary files
        # also begin with 'solid' in their comment header)
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            return _load_stl_binary(data)
        if "facet" in text or "endsolid" in text:
            return _load_stl_ascii(text)
    return _load_stl_binary(data)


def point_in_mesh(mesh: SurfaceMesh, p) -> bool:
    """Ray-crossing parity along +x, with deterministic grazing fallback."""
    if not mesh.is_watertight():
        raise NotWatertight("mesh has edges not shared by exactly two triangles")
    result = points_in_mesh(mesh, np.asarray([p], dtype=float))
    return bool(result[0])


def points_in_mesh(mesh: SurfaceMesh, pts: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Vectorized parity containment for an (N, 3) array of points.

    Grazing hits (ray through an edge/vertex, parallel triangles) are
    resolved by recasting the affected points along a fixed sequence of
    slightly tilted directions, keeping the result deterministic.
    """
    pts = np.asarray(pts, dtype=float)
    v0 = mesh.vertices[mesh.triangles[:, 0]]
    e1 = mesh.vertices[mesh.triangles[:, 1]] - v0
    e2 = mesh.vertices[mesh.triangles[:, 2]] - v0
    out = np.zeros(len(pts), dtype=bool)
    eps = 1e-9

    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        pending = np.arange(len(block))
        inside = np.zeros(len(block), dtype=bool)
        for attempt in range(24):
            direction = np.array([1.0, 3e-4 * attempt + 1e-5, 7e-4 * attempt + 2e-5])
            direction /= np.linalg.norm(direction)
            h = np.cross(direction, e2)  # (T, 3)
            det = np.einsum("tk,tk->t", e1, h)  # (T,)
            sub = block[pending]  # (P, 3)
            s = sub[:, None, :] - v0[None, :, :]  # (P, T, 3)
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.einsum("ptk,tk->pt", s, h) / det
                q = np.cross(s, e1[None, :, :])
                v = np.einsum("ptk,k->pt", q, direction) / det
                t = np.einsum("ptk,tk->pt", q, e2) / det
            parallel = np.abs(det) < eps
            hit = (
                (~parallel)
                & (u > eps)
                & (u < 1 - eps)
                & (v > eps)
                & (v < 1 - eps)
                & (u + v < 1 - eps)
                & (t > eps)
            )
            grazing = (
                (
                    (np.abs(u) <= eps)
                    | (np.abs(1 - u) <= eps)
                    | (np.abs(v) <= eps)
                    | (np.abs(1 - v) <= eps)
                    | (np.abs(1 - u - v) <= eps)
                    | (np.abs(t) <= eps)
                )
                & ~parallel
            ) | (parallel & (np.abs(np.einsum("ptk,tk->pt", s, np.cross(e1, e2))) <= eps))
            uncertain = grazing.any(axis=1)
            crossings = hit.sum(axis=1)
            settled = ~uncertain
            inside[pending[settled]] = (crossings[settled] % 2) == 1
            pending = pending[uncertain]
            if len(pending) == 0:
                break
        else:  # pragma: no cover - 24 tilted rays always settle in practice
            inside[pending] = False
        out[start : start + chunk] = inside
    return out


def count_faces(mesh: SurfaceMesh, crease_angle: float = 0.35) -> int:
    """Count surface patches after merging adjacent near-coplanar triangles.

    Adjacent triangles merge iff their dihedral angle is below
    `crease_angle` (radians). This is the geometric-complexity proxy for
    meshes without an exact B-Rep; disconnected components count separately.
    """
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot count faces of an empty mesh")
    normals = mesh.triangle_normals()
    parent = list(range(mesh.n_triangles))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    edge_tris: dict[tuple[int, int], list[int]] = {}
    for ti, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(min(a, b)), int(max(a, b)))
            edge_tris.setdefault(key, []).append(ti)

    cos_crease = np.cos(crease_angle)
    for tris in edge_tris.values():
        if len(tris) != 2:
            continue  # boundary or non-manifold edges never merge
        a, b = tris
        if float(normals[a] @ normals[b]) > cos_crease:
            union(a, b)

    return len({find(i) for i in range(mesh.n_triangles)})
