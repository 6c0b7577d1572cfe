import json

import numpy as np
import pytest

from conftest import cube_stl_binary, cylinder_mesh
from physloop.errors import EmptyMesh, FormatError, NotWatertight
from physloop.geometry import parse_program
from physloop.surface import (
    SurfaceMesh,
    count_faces,
    load_stl,
    point_in_mesh,
    points_in_mesh,
)


def test_load_binary_cube():
    mesh = load_stl(cube_stl_binary(side=10.0))
    assert mesh.n_vertices == 8
    assert mesh.n_triangles == 12
    assert mesh.is_watertight()


def test_truncated_binary_rejected():
    data = cube_stl_binary()
    with pytest.raises(FormatError, match="truncated"):
        load_stl(data[:-30])


def test_empty_payload_rejected():
    with pytest.raises(FormatError):
        load_stl(b"")


def test_ascii_round_trip_with_duplicate_vertices():
    tri_sets = [
        ((0, 0, 0), (10, 0, 0), (0, 10, 0)),
        ((10, 0, 0), (10, 10, 0), (0, 10, 0)),
    ]
    lines = ["solid tester"]
    for tri in tri_sets:
        lines.append("  facet normal 0 0 1")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]} {v[1]} {v[2]}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid tester")
    mesh = load_stl("\n".join(lines).encode())
    # oracle: unique coordinate triples across all records
    coords = sorted({v for tri in tri_sets for v in tri})
    assert mesh.n_vertices == len(coords)
    assert mesh.n_triangles == 2


def test_degenerate_triangles_dropped():
    lines = [
        "solid z",
        "  facet normal 0 0 1",
        "    outer loop",
        "      vertex 0 0 0",
        "      vertex 1 0 0",
        "      vertex 2 0 0",  # collinear: zero area
        "    endloop",
        "  endfacet",
        "endsolid z",
    ]
    with pytest.raises(EmptyMesh):
        load_stl("\n".join(lines).encode())


# -- point containment ---------------------------------------------------------


def test_point_in_cube():
    mesh = load_stl(cube_stl_binary(side=10.0))
    assert point_in_mesh(mesh, (5, 5, 5))
    assert not point_in_mesh(mesh, (20, 5, 5))


def test_not_watertight_raises():
    mesh = load_stl(cube_stl_binary(side=10.0))
    open_mesh = SurfaceMesh(vertices=mesh.vertices, triangles=mesh.triangles[:-1])
    with pytest.raises(NotWatertight):
        point_in_mesh(open_mesh, (5, 5, 5))


def test_containment_matches_csg_oracle():
    mesh = load_stl(cube_stl_binary(side=10.0))
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [10, 10, 10]}))
    rng = np.random.default_rng(42)
    pts = rng.uniform(-3, 13, size=(1000, 3))
    # exclude points within 1e-6 mm of any face plane
    near = np.zeros(len(pts), dtype=bool)
    for axis in range(3):
        for plane in (0.0, 10.0):
            near |= np.abs(pts[:, axis] - plane) < 1e-6
    pts = pts[~near]
    got = points_in_mesh(mesh, pts)
    expect = program.contains_points(pts)
    assert np.array_equal(got, expect)


def test_grazing_rays_settle_deterministically():
    mesh = load_stl(cube_stl_binary(side=10.0))
    # ray from the center passes exactly through edge midpoints and corners
    tricky = np.array([[5.0, 5.0, 5.0], [5.0, 10.0 - 5e-10, 5.0], [-1e-12, 5.0, 5.0]])
    first = points_in_mesh(mesh, tricky)
    second = points_in_mesh(mesh, tricky)
    assert np.array_equal(first, second)
    assert first[0]


# -- face counting ---------------------------------------------------------------


def test_count_faces_box():
    mesh = load_stl(cube_stl_binary(side=10.0))
    assert count_faces(mesh, crease_angle=0.35) == 6


def test_count_faces_additive_disjoint_boxes():
    a = load_stl(cube_stl_binary(side=10.0))
    b = load_stl(cube_stl_binary(side=10.0, origin=(30.0, 0.0, 0.0)))
    merged = SurfaceMesh(
        vertices=np.vstack([a.vertices, b.vertices]),
        triangles=np.vstack([a.triangles, b.triangles + a.n_vertices]),
    )
    assert count_faces(merged, crease_angle=0.35) == 12


def _patch_count_oracle(mesh: SurfaceMesh, crease: float) -> int:
    """Independent BFS patch growing over the triangle adjacency graph."""
    normals = mesh.triangle_normals()
    edge_map = {}
    for ti, tri in enumerate(map(tuple, mesh.triangles)):
        for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edge_map.setdefault(tuple(sorted(e)), []).append(ti)
    adjacency = {i: [] for i in range(mesh.n_triangles)}
    for tris in edge_map.values():
        if len(tris) == 2:
            a, b = tris
            angle = np.arccos(np.clip(normals[a] @ normals[b], -1, 1))
            if angle < crease:
                adjacency[a].append(b)
                adjacency[b].append(a)
    seen = set()
    patches = 0
    for start in range(mesh.n_triangles):
        if start in seen:
            continue
        patches += 1
        stack = [start]
        while stack:
            t = stack.pop()
            if t in seen:
                continue
            seen.add(t)
            stack.extend(adjacency[t])
    return patches


def test_count_faces_cylinder_three_patches():
    verts, tris = cylinder_mesh(radius=10.0, height=30.0, segments=64)
    mesh = SurfaceMesh(vertices=verts, triangles=tris)
    assert count_faces(mesh, crease_angle=0.35) == 3
    assert _patch_count_oracle(mesh, 0.35) == 3


def test_count_faces_matches_oracle_on_voxel_surfaces():
    from physloop.geometry import parse_program
    from physloop.meshing import surface_mesh, tetrahedralize, voxelize

    program = parse_program(
        json.dumps(
            {
                "op": "union",
                "children": [
                    {"op": "box", "min": [0, 0, 0], "max": [20, 10, 10]},
                    {"op": "box", "min": [5, 0, 0], "max": [15, 10, 25]},
                ],
            }
        )
    )
    grid = voxelize(program.contains_points, program.bounding_box(), 16)
    surf = surface_mesh(tetrahedralize(grid))
    assert count_faces(surf, 0.35) == _patch_count_oracle(surf, 0.35)
