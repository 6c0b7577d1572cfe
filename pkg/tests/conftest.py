import struct

import numpy as np
import pytest

from physloop.loadcase import (
    BoundaryCondition,
    Box3,
    Load,
    LoadCase,
    SpatialSelector,
)


def make_case(
    problem_id="CASE",
    domain=(0, 100, 0, 100, 0, 100),
    selectors=(("base", (0, 100, 0, 100, 0, 0)), ("top", (0, 100, 0, 100, 100, 100))),
    bcs=(("base", (True, True, True)),),
    loads=(("top", "distributed_force", 1000.0, (0.0, 0.0, -1.0)),),
) -> LoadCase:
    return LoadCase(
        problem_id=problem_id,
        domain_bounds=Box3(*domain),
        selectors=tuple(SpatialSelector(i, Box3(*q)) for i, q in selectors),
        boundary_conditions=tuple(
            BoundaryCondition(selector_id=s, dof_lock=lock) for s, lock in bcs
        ),
        loads=tuple(
            Load(selector_id=s, kind=k, magnitude_newtons=m, direction=d)
            for s, k, m, d in loads
        ),
    )


@pytest.fixture
def bar_case():
    """10x10x100 bar fixed at z=0, pulled axially at z=100."""
    return make_case(
        problem_id="PATCH_BAR",
        domain=(0, 10, 0, 10, 0, 100),
        selectors=(
            ("base", (0, 10, 0, 10, 0, 0)),
            ("tip", (0, 10, 0, 10, 100, 100)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("tip", "distributed_force", 2500.0, (0.0, 0.0, 1.0)),),
    )


def cube_stl_binary(side=10.0, origin=(0.0, 0.0, 0.0)) -> bytes:
    """Hand-built binary STL of an axis-aligned cube (12 triangles)."""
    x0, y0, z0 = origin
    x1, y1, z1 = x0 + side, y0 + side, z0 + side
    v = {
        0: (x0, y0, z0), 1: (x1, y0, z0), 2: (x0, y1, z0), 3: (x1, y1, z0),
        4: (x0, y0, z1), 5: (x1, y0, z1), 6: (x0, y1, z1), 7: (x1, y1, z1),
    }
    faces = [
        (0, 2, 1), (1, 2, 3),  # z = z0, normal -z
        (4, 5, 6), (5, 7, 6),  # z = z1, normal +z
        (0, 1, 4), (1, 5, 4),  # y = y0
        (2, 6, 3), (3, 6, 7),  # y = y1
        (0, 4, 2), (2, 4, 6),  # x = x0
        (1, 3, 5), (3, 7, 5),  # x = x1
    ]
    payload = b"physloop test cube".ljust(80, b"\0")
    payload += struct.pack("<I", len(faces))
    for a, b, c in faces:
        pa, pb, pc = np.array(v[a]), np.array(v[b]), np.array(v[c])
        normal = np.cross(pb - pa, pc - pa)
        normal = normal / np.linalg.norm(normal)
        payload += struct.pack("<3f", *normal)
        for p in (pa, pb, pc):
            payload += struct.pack("<3f", *p)
        payload += struct.pack("<H", 0)
    return payload


def cylinder_mesh(radius=10.0, height=30.0, segments=64):
    """Closed cylinder tessellation: two cap fans plus a lateral strip.

    Returns (vertices, triangles) with outward-facing winding.
    """
    verts = []
    for z in (0.0, height):
        for k in range(segments):
            a = 2 * np.pi * k / segments
            verts.append((radius * np.cos(a), radius * np.sin(a), z))
    bottom_center = len(verts)
    verts.append((0.0, 0.0, 0.0))
    top_center = len(verts)
    verts.append((0.0, 0.0, height))
    tris = []
    for k in range(segments):
        k2 = (k + 1) % segments
        lo_a, lo_b = k, k2
        hi_a, hi_b = segments + k, segments + k2
        tris.append((lo_a, hi_a, lo_b))
        tris.append((lo_b, hi_a, hi_b))
        tris.append((bottom_center, lo_b, lo_a))  # bottom cap faces -z
        tris.append((top_center, hi_a, hi_b))  # top cap faces +z
    return np.asarray(verts, dtype=float), np.asarray(tris, dtype=np.int64)
