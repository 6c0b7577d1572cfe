"""Minimal parametric CAD kernel for sandboxed design scripts.

Scripts build solids from primitives and booleans, assign the final solid
to a variable named `result`, and the bridge exports it as binary STL with
kernel-reported face count and volume. Primitives carry exact analytic
volume and face counts; boolean results fall back to deterministic voxel
sampling and surface-patch counting.
"""

from .kernel import (
    KernelError,
    Shape,
    box,
    cut,
    cylinder,
    extrude,
    intersect,
    sphere,
    union,
)

__all__ = [
    "KernelError",
    "Shape",
    "box",
    "cut",
    "cylinder",
    "extrude",
    "intersect",
    "sphere",
    "union",
]
