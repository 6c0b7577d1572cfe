"""Deterministic offscreen rendering of meshes with load-case overlays.

Orthographic z-buffer rasterization in pure numpy: geometry in flat-shaded
gray, the design domain as a gray wireframe, support selectors green and
load selectors red, matching the benchmark's visualization conventions.
Identical scenes produce bit-identical images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loadcase import Box3, LoadCase
from .surface import SurfaceMesh

DEFAULT_VIEWS = ("+x", "+y", "+z", "iso")

_BACKGROUND = (255, 255, 255)
_BODY_GRAY = np.array([158, 158, 164], dtype=float)
_DOMAIN_GRAY = (110, 110, 110)
_SUPPORT_GREEN = (40, 170, 60)
_LOAD_RED = (225, 45, 45)
_LIGHT = np.array([0.35, 0.45, 0.82])
_LIGHT_DIR = _LIGHT / np.linalg.norm(_LIGHT)
_FIT_MARGIN = 0.05


@dataclass(frozen=True)
class Image:
    """RGB8 image; pixel buffer is row-major with row 0 at the top."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError("pixel buffer shape must be (height, width, 3)")


@dataclass(frozen=True)
class ViewSpec:
    direction: str = "iso"  # +x, -x, +y, -y, +z, -z, iso
    width: int = 512
    height: int = 512
    show_domain: bool = True
    show_selectors: bool = True

    def __post_init__(self):
        if self.width < 64 or self.height < 64:
            raise ValueError("view must be at least 64x64 pixels")
        if self.direction not in ("+x", "-x", "+y", "-y", "+z", "-z", "iso"):
            raise ValueError(f"unknown view direction '{self.direction}'")


def _view_basis(direction: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(right, up, forward) world-space unit vectors; forward points into
    the screen."""
    if direction == "iso":
        forward = -np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
        up0 = np.array([0.0, 0.0, 1.0])
    else:
        sign = 1.0 if direction[0] == "+" else -1.0
        axis = "xyz".index(direction[1])
        forward = np.zeros(3)
        forward[axis] = -sign  # camera sits on the named side, looking in
        up0 = np.array([0.0, 0.0, 1.0]) if axis != 2 else np.array([0.0, 1.0, 0.0])
    up = up0 - (up0 @ forward) * forward
    up /= np.linalg.norm(up)
    right = np.cross(up, forward)
    return right, up, forward


def _fit_projection(domain: Box3, view: ViewSpec):
    """Uniform scale + offset mapping projected mm to pixel coordinates."""
    right, up, forward = _view_basis(view.direction)
    corners = np.array(
        [
            (x, y, z)
            for x in (domain.x_min, domain.x_max)
            for y in (domain.y_min, domain.y_max)
            for z in (domain.z_min, domain.z_max)
        ]
    )
    u = corners @ right
    v = corners @ up
    u_c, v_c = (u.min() + u.max()) / 2, (v.min() + v.max()) / 2
    half_u = max((u.max() - u.min()) / 2, 1e-9) * (1 + _FIT_MARGIN)
    half_v = max((v.max() - v.min()) / 2, 1e-9) * (1 + _FIT_MARGIN)
    scale = min(view.width / (2 * half_u), view.height / (2 * half_v))

    def project(points: np.ndarray) -> np.ndarray:
        """(N, 3) mm -> (N, 3) of (px, py, depth); py 0 is the top row."""
        p = np.atleast_2d(points)
        u = (p @ right - u_c) * scale + view.width / 2
        v = view.height / 2 - (p @ up - v_c) * scale
        depth = p @ forward
        return np.stack([u, v, depth], axis=1)

    return project, forward


def _raster_triangles(pixels, zbuf, tris_px, normals):
    """Z-buffer fill of projected triangles with flat directional shading."""
    h, w, _ = pixels.shape
    for tri, normal in zip(tris_px, normals):
        (x0, y0, d0), (x1, y1, d1), (x2, y2, d2) = tri
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-12:
            continue
        xa = max(int(np.floor(min(x0, x1, x2))), 0)
        xb = min(int(np.ceil(max(x0, x1, x2))), w - 1)
        ya = max(int(np.floor(min(y0, y1, y2))), 0)
        yb = min(int(np.ceil(max(y0, y1, y2))), h - 1)
        if xa > xb or ya > yb:
            continue
        xs, ys = np.meshgrid(
            np.arange(xa, xb + 1) + 0.5, np.arange(ya, yb + 1) + 0.5
        )
        l2 = ((x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0)) / area
        l1 = ((x0 - x2) * (ys - y2) - (y0 - y2) * (xs - x2)) / area
        l0 = 1.0 - l1 - l2
        inside = (l0 >= 0) & (l1 >= 0) & (l2 >= 0)
        if not inside.any():
            continue
        depth = l0 * d0 + l1 * d1 + l2 * d2
        intensity = 0.35 + 0.62 * abs(float(normal @ _LIGHT_DIR))
        color = np.clip(_BODY_GRAY * intensity, 0, 255).astype(np.uint8)
        sub_z = zbuf[ya : yb + 1, xa : xb + 1]
        update = inside & (depth < sub_z)
        sub_z[update] = depth[update]
        pixels[ya : yb + 1, xa : xb + 1][update] = color


def _draw_line(pixels, p0, p1, color):
    """DDA line in pixel space, drawn over everything (no depth test)."""
    h, w, _ = pixels.shape
    x0, y0 = p0
    x1, y1 = p1
    steps = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
    ts = np.linspace(0.0, 1.0, steps + 1)
    xs = np.round(x0 + (x1 - x0) * ts).astype(int)
    ys = np.round(y0 + (y1 - y0) * ts).astype(int)
    keep = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    pixels[ys[keep], xs[keep]] = color


_BOX_EDGES = (
    (0, 1), (0, 2), (1, 3), (2, 3),
    (4, 5), (4, 6), (5, 7), (6, 7),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


def _draw_box_wireframe(pixels, project, box: Box3, color):
    corners = np.array(
        [
            (x, y, z)
            for z in (box.z_min, box.z_max)
            for y in (box.y_min, box.y_max)
            for x in (box.x_min, box.x_max)
        ]
    )
    px = project(corners)
    for a, b in _BOX_EDGES:
        _draw_line(pixels, px[a, :2], px[b, :2], color)


def render_view(mesh: SurfaceMesh | None, case: LoadCase, view: ViewSpec) -> Image:
    """Render one orthographic view fitted to the design domain.

    An empty mesh still renders the domain and selector overlays, which is
    what the planning agent sees before any geometry exists.
    """
    pixels = np.empty((view.height, view.width, 3), dtype=np.uint8)
    pixels[:] = _BACKGROUND
    zbuf = np.full((view.height, view.width), np.inf)
    project, _forward = _fit_projection(case.domain_bounds, view)

    if mesh is not None and mesh.n_triangles:
        tris_px = project(mesh.vertices.reshape(-1, 3))[mesh.triangles]
        normals = mesh.triangle_normals()
        _raster_triangles(pixels, zbuf, tris_px, normals)

    if view.show_domain:
        _draw_box_wireframe(pixels, project, case.domain_bounds, _DOMAIN_GRAY)
    if view.show_selectors:
        support_ids = set(case.support_selector_ids())
        load_ids = set(case.load_selector_ids())
        for sel in case.selectors:
            if sel.id in support_ids:
                _draw_box_wireframe(pixels, project, sel.query, _SUPPORT_GREEN)
        for sel in case.selectors:
            if sel.id in load_ids:
                _draw_box_wireframe(pixels, project, sel.query, _LOAD_RED)

    return Image(width=view.width, height=view.height, pixels=pixels)


def encode_ppm(image: Image) -> bytes:
    """Binary PPM (P6): header then raw RGB rows, top row first."""
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def render_case_views(
    mesh: SurfaceMesh | None,
    case: LoadCase,
    directions=DEFAULT_VIEWS,
    size: int = 512,
) -> dict[str, Image]:
    """The default four-view set handed to the geometry reviewer."""
    return {
        d: render_view(mesh, case, ViewSpec(direction=d, width=size, height=size))
        for d in directions
    }
