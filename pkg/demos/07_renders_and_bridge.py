"""Rendering for review prompts, and the external CAD-script bridge.

Renders are deterministic orthographic views with the benchmark's color
conventions (gray part and domain, green supports, red loads). When the
bridge package is installed, agent-style CAD scripts can be executed in a
sandbox and their STL output flows back through the same physics stack.
"""

import json
import subprocess
import tempfile
from pathlib import Path

from physloop import ViewSpec, builtin_cases, encode_ppm, load_stl, parse_program, render_view
from physloop.meshing import surface_mesh, tetrahedralize, voxelize
from physloop.pipeline import EvalConfig, analysis_bounds, evaluate_surface

workdir = Path(tempfile.mkdtemp(prefix="physloop_demo_"))
case = [c for c in builtin_cases() if c.problem_id == "A_FRAME"][0]

program = parse_program(json.dumps({"op": "box", "min": [0, 12, 0], "max": [240, 48, 160]}))
grid = voxelize(program.contains_points, analysis_bounds(case), 32)
mesh = surface_mesh(tetrahedralize(grid))
for direction in ("+x", "+y", "iso"):
    image = render_view(mesh, case, ViewSpec(direction=direction, width=384, height=384))
    path = workdir / f"view_{direction.replace('+', 'p').replace('-', 'm')}.ppm"
    path.write_bytes(encode_ppm(image))
    print(f"wrote {path}")

# the bridge route (requires the physloop-bridge package)
script = workdir / "design.py"
script.write_text(
    "import minicad as mc\n"
    "plate = mc.box(40, 40, 8)\n"
    "boss = mc.cylinder(8, 20, origin=(20, 20, 8))\n"
    "result = plate.union(boss)\n"
)
try:
    proc = subprocess.run(
        ["bridge", str(script), "--timeout", "60", "--workdir", str(workdir / "cad")],
        capture_output=True, text=True, check=False,
    )
    payload = json.loads(proc.stdout.strip().splitlines()[-1])
    print(f"\nbridge: status={payload['status']} "
          f"faces={payload['kernel_face_count']} "
          f"volume={payload['kernel_volume_mm3']:.0f} mm^3")
    stl_mesh = load_stl(Path(payload["stl_path"]).read_bytes())
    print(f"ingested STL: {stl_mesh.n_vertices} vertices, "
          f"{stl_mesh.n_triangles} triangles, watertight={stl_mesh.is_watertight()}")
except FileNotFoundError:
    print("\nbridge CLI not installed; `pip install -e ./bridge` to try this part")
