import numpy as np
import pytest

from conftest import make_case
from physloop.render import Image, ViewSpec, encode_ppm, render_view
from physloop.surface import SurfaceMesh


def decode_ppm(data: bytes):
    """Independent minimal P6 decoder for round-trip checks."""
    assert data.startswith(b"P6")
    parts = data.split(b"\n", 3)
    w, h = map(int, parts[1].split())
    assert parts[2] == b"255"
    pixels = np.frombuffer(parts[3], dtype=np.uint8)
    assert len(pixels) == 3 * w * h
    return w, h, pixels.reshape(h, w, 3)


def test_encode_single_white_pixel():
    img = Image(width=1, height=1, pixels=np.full((1, 1, 3), 255, dtype=np.uint8))
    assert encode_ppm(img) == b"P6\n1 1\n255\n\xff\xff\xff"


def test_encode_two_by_one_row_major():
    px = np.zeros((1, 2, 3), dtype=np.uint8)
    px[0, 0] = (1, 2, 3)
    px[0, 1] = (4, 5, 6)
    img = Image(width=2, height=1, pixels=px)
    data = encode_ppm(img)
    assert data.endswith(bytes([1, 2, 3, 4, 5, 6]))
    assert len(data) - len(b"P6\n2 1\n255\n") == 6


def test_encode_decode_round_trip_random():
    rng = np.random.default_rng(0)
    for _ in range(3):
        px = rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8)
        img = Image(width=23, height=17, pixels=px)
        w, h, decoded = decode_ppm(encode_ppm(img))
        assert (w, h) == (23, 17)
        assert np.array_equal(decoded, px)


def test_view_spec_validation():
    with pytest.raises(ValueError):
        ViewSpec(direction="iso", width=32, height=32)
    with pytest.raises(ValueError):
        ViewSpec(direction="+w")


def test_empty_mesh_renders_overlays_only():
    case = make_case()
    img = render_view(None, case, ViewSpec(direction="iso", width=128, height=128))
    px = img.pixels.reshape(-1, 3)
    # mostly white background
    white = np.all(px == 255, axis=1)
    assert white.mean() > 0.5
    # green support wireframe and red load wireframe both present
    assert np.any((px[:, 1] > 150) & (px[:, 0] < 100))
    assert np.any((px[:, 0] > 200) & (px[:, 1] < 100))


def test_flat_shading_single_triangle_uniform_color():
    case = make_case()
    mesh = SurfaceMesh(
        vertices=np.array([[10.0, 10.0, 50.0], [90.0, 10.0, 50.0], [50.0, 90.0, 50.0]]),
        triangles=np.array([[0, 1, 2]]),
    )
    img = render_view(
        mesh, case, ViewSpec(direction="+z", width=128, height=128, show_domain=False,
                             show_selectors=False)
    )
    px = img.pixels.reshape(-1, 3)
    body = px[~np.all(px == 255, axis=1)]
    assert len(body) > 100
    assert len(np.unique(body, axis=0)) == 1  # constant normal -> one color


def test_determinism_bit_identical():
    case = make_case()
    mesh = SurfaceMesh(
        vertices=np.array(
            [[10.0, 10.0, 20.0], [90.0, 15.0, 30.0], [50.0, 90.0, 80.0], [20.0, 70.0, 90.0]]
        ),
        triangles=np.array([[0, 1, 2], [0, 2, 3]]),
    )
    view = ViewSpec(direction="iso", width=200, height=160)
    a = encode_ppm(render_view(mesh, case, view))
    b = encode_ppm(render_view(mesh, case, view))
    assert a == b


def test_zbuffer_occlusion():
    case = make_case()
    front = np.array([[20.0, 20.0, 80.0], [80.0, 20.0, 80.0], [50.0, 80.0, 80.0]])
    behind = front.copy()
    behind[:, 2] = 30.0  # strictly under the front triangle seen from +z
    both = SurfaceMesh(
        vertices=np.vstack([front, behind]),
        triangles=np.array([[0, 1, 2], [3, 4, 5]]),
    )
    only_front = SurfaceMesh(vertices=front, triangles=np.array([[0, 1, 2]]))
    view = ViewSpec(direction="+z", width=128, height=128, show_domain=False,
                    show_selectors=False)
    assert encode_ppm(render_view(both, case, view)) == encode_ppm(
        render_view(only_front, case, view)
    )


def test_all_view_directions_render():
    case = make_case()
    mesh = SurfaceMesh(
        vertices=np.array([[10.0, 10.0, 10.0], [90.0, 10.0, 10.0], [50.0, 90.0, 90.0]]),
        triangles=np.array([[0, 1, 2]]),
    )
    for direction in ("+x", "-x", "+y", "-y", "+z", "-z", "iso"):
        img = render_view(mesh, case, ViewSpec(direction=direction, width=96, height=96))
        assert img.pixels.shape == (96, 96, 3)


def test_image_buffer_invariant():
    with pytest.raises(ValueError):
        Image(width=2, height=2, pixels=np.zeros((2, 3, 3), dtype=np.uint8))
