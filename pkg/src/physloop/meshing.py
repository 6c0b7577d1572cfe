"""Deterministic voxelization and conforming tet4 meshing.

Geometry is sampled at voxel centers on a cubic grid, occupied voxels are
split into six tetrahedra by the Kuhn subdivision (all six share the cube's
main diagonal, so faces conform across neighbors without parity logic), and
shared lattice nodes are deduplicated. Everything is pure and bit-stable:
identical inputs produce identical node ordering and tet lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import EmptyGeometry
from .loadcase import Box3, SpatialSelector

#: Corner numbering: corner c = dx + 2*dy + 4*dz for offsets (dx, dy, dz).
_CUBE_CORNERS = np.array(
    [(dx, dy, dz) for dz in (0, 1) for dy in (0, 1) for dx in (0, 1)]
)[np.argsort([dx + 2 * dy + 4 * dz for dz in (0, 1) for dy in (0, 1) for dx in (0, 1)])]

#: Kuhn subdivision: six positively oriented tets sharing diagonal 0-7.
KUHN_TETS = np.array(
    [
        (0, 1, 3, 7),
        (0, 1, 7, 5),
        (0, 2, 7, 3),
        (0, 2, 6, 7),
        (0, 4, 5, 7),
        (0, 4, 7, 6),
    ],
    dtype=np.int64,
)

#: Outward-oriented faces of a positively oriented tet (v0, v1, v2, v3).
TET_FACES = np.array([(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)], dtype=np.int64)


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic voxel grid with dense occupancy; origin at the grid's min corner."""

    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]
    occupancy: np.ndarray  # bool, shape dims

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.occupancy.shape != self.dims:
            raise ValueError("occupancy shape must match dims")

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    def centers(self) -> np.ndarray:
        """(nx*ny*nz, 3) array of voxel centers in C order."""
        nx, ny, nz = self.dims
        ix, iy, iz = np.meshgrid(
            np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
        )
        idx = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)
        return np.asarray(self.origin) + (idx + 0.5) * self.spacing

    def occupied_indices(self) -> np.ndarray:
        """(K, 3) integer voxel indices of occupied voxels, C order."""
        return np.argwhere(self.occupancy)

    def flat_ids(self, indices: np.ndarray) -> np.ndarray:
        nx, ny, nz = self.dims
        return (indices[:, 0] * ny + indices[:, 1]) * nz + indices[:, 2]

    def centers_of(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(self.origin) + (indices + 0.5) * self.spacing


@dataclass(frozen=True)
class ComponentLabeling:
    """Face-connectivity component ids, dense in [0, count)."""

    labels: np.ndarray  # int, shape dims; -1 for empty voxels
    count: int


@dataclass(frozen=True)
class TetMesh:
    """Linear tetrahedral mesh; conforming by construction."""

    nodes: np.ndarray  # (N, 3) float64, mm
    tets: np.ndarray  # (M, 4) int64, positively oriented
    element_voxel: np.ndarray  # (M,) int64 flat source-voxel ids

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def tet_volumes(self) -> np.ndarray:
        p = self.nodes[self.tets]
        e = p[:, 1:] - p[:, :1]
        return np.linalg.det(e) / 6.0

    def centroids(self) -> np.ndarray:
        return self.nodes[self.tets].mean(axis=1)


def voxelize(
    inside: Callable[[np.ndarray], np.ndarray],
    bounds: Box3,
    resolution: int,
    chunk: int = 262144,
) -> VoxelGrid:
    """Sample a membership predicate at voxel centers over `bounds`.

    `resolution` is the voxel count along the longest axis of `bounds`;
    other axes use as many cubic voxels as needed to cover their extent.
    The predicate receives an (N, 3) array and returns a boolean mask.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    extent = bounds.extent
    longest = max(extent)
    if longest <= 0:
        raise ValueError("bounds must have positive extent")
    spacing = longest / resolution
    dims = tuple(max(1, math.ceil(e / spacing - 1e-9)) for e in extent)
    nx, ny, nz = dims
    ix, iy, iz = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    idx = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)
    centers = np.asarray(bounds.lo) + (idx + 0.5) * spacing
    occ = np.empty(len(centers), dtype=bool)
    for start in range(0, len(centers), chunk):
        occ[start : start + chunk] = inside(centers[start : start + chunk])
    return VoxelGrid(
        origin=bounds.lo, spacing=spacing, dims=dims, occupancy=occ.reshape(dims)
    )


def connected_components(grid: VoxelGrid) -> ComponentLabeling:
    """6-connectivity (face neighbor) flood labeling of occupied voxels."""
    structure = ndimage.generate_binary_structure(3, 1)  # faces only
    raw, count = ndimage.label(grid.occupancy, structure=structure)
    labels = raw.astype(np.int64) - 1  # background 0 -> -1, components 0..count-1
    return ComponentLabeling(labels=labels, count=int(count))


def tetrahedralize(grid: VoxelGrid) -> TetMesh:
    """Split each occupied voxel into six Kuhn tets with shared lattice nodes."""
    vox = grid.occupied_indices()
    if len(vox) == 0:
        raise EmptyGeometry("no occupied voxels to mesh")
    nx, ny, nz = grid.dims
    lat_y = ny + 1
    lat_z = nz + 1

    # lattice ids of the 8 corners of each occupied voxel
    corners = vox[:, None, :] + _CUBE_CORNERS[None, :, :]  # (K, 8, 3)
    lattice_ids = (corners[:, :, 0] * lat_y + corners[:, :, 1]) * lat_z + corners[:, :, 2]

    unique_ids, inverse = np.unique(lattice_ids.ravel(), return_inverse=True)
    local = inverse.reshape(lattice_ids.shape)  # (K, 8) node ids per voxel

    lat_coords = np.stack(
        [
            unique_ids // (lat_y * lat_z),
            (unique_ids // lat_z) % lat_y,
            unique_ids % lat_z,
        ],
        axis=1,
    )
    nodes = np.asarray(grid.origin) + lat_coords * grid.spacing

    tets = local[:, KUHN_TETS].reshape(-1, 4).astype(np.int64)  # (K*6, 4)
    element_voxel = np.repeat(grid.flat_ids(vox), len(KUHN_TETS))
    return TetMesh(nodes=nodes, tets=tets, element_voxel=element_voxel)


def select_nodes(mesh: TetMesh, selector: SpatialSelector, tolerance: float) -> np.ndarray:
    """Sorted ids of nodes inside the selector box inflated by `tolerance`."""
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    box = selector.query.inflate(tolerance)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    mask = np.all((mesh.nodes >= lo) & (mesh.nodes <= hi), axis=1)
    return np.flatnonzero(mask)


def surface_mesh(mesh: TetMesh):
    """Boundary triangles (tet faces appearing exactly once), outward-oriented."""
    from .surface import SurfaceMesh

    faces = mesh.tets[:, TET_FACES].reshape(-1, 3)  # (4M, 3) oriented
    key = np.sort(faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    boundary = faces[counts[inverse] == 1]
    return SurfaceMesh(vertices=mesh.nodes.copy(), triangles=boundary).compact()


def mesh_to_json(mesh: TetMesh) -> dict:
    """Debug dump; not a stability-guaranteed format."""
    return {
        "nodes": mesh.nodes.tolist(),
        "tets": mesh.tets.tolist(),
        "element_voxel": mesh.element_voxel.tolist(),
    }
