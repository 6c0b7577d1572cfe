"""Geometry programs: the JSON CSG language designs are written in.

Programs are boolean trees over boxes, cylinders, spheres and polygon
extrusions. Membership is exact set evaluation; volume comes from voxel
sampling over the program's bounding box.
"""

import json
import math

from physloop import contains, estimate_volume, parse_program

bracket = parse_program(json.dumps({
    "op": "difference",
    "children": [
        {"op": "union", "children": [
            {"op": "box", "min": [0, 0, 0], "max": [80, 20, 12]},
            {"op": "box", "min": [0, 0, 0], "max": [12, 20, 60]},
        ]},
        {"op": "cylinder", "p0": [60, -1, 6], "p1": [60, 21, 6], "radius": 5},
    ],
}))

print("point checks on an L-bracket with a bolt hole:")
for p in [(40, 10, 6), (60, 10, 6), (6, 10, 40), (70, 10, 40)]:
    print(f"  {p}: {'material' if contains(bracket, p) else 'void'}")

arm_volume = 80 * 20 * 12 + 12 * 20 * 48 - math.pi * 25 * 20
print(f"\nvolume (resolution 128): {estimate_volume(bracket, 128):.0f} mm^3")
print(f"analytic reference:      {arm_volume:.0f} mm^3")

sphere = parse_program('{"op": "sphere", "center": [0, 0, 0], "radius": 10}')
for res in (16, 32, 64, 128):
    v = estimate_volume(sphere, res)
    err = abs(v - 4 / 3 * math.pi * 1000) / (4 / 3 * math.pi * 1000)
    print(f"sphere volume at resolution {res:3d}: {v:8.1f} mm^3  (err {100 * err:.2f}%)")
