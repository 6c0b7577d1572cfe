"""Acceptance suite: one test per release criterion, with a printed verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Tolerances are fixed here and match the package contract.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import cube_stl_binary, cylinder_mesh, make_case
from physloop.agents.backends import ScriptedBackend
from physloop.agents.heuristic import first_iteration_program, run_heuristic
from physloop.agents.loop import LoopConfig, run_pipeline
from physloop.builtin_cases import builtin_cases
from physloop.fem import Material, build_model, solve
from physloop.geometry import parse_program
from physloop.loadcase import (
    FORCE_SCALES,
    GEOM_SCALES,
    VariantSpec,
    apply_variant,
    enumerate_variants,
    parse_load_case,
)
from physloop.meshing import connected_components, tetrahedralize, voxelize, VoxelGrid
from physloop.metrics import (
    fisher_exact_one_sided,
    student_t_two_sided_p,
)
from physloop.pipeline import EvalConfig, analysis_bounds, evaluate_program
from physloop.surface import SurfaceMesh, count_faces, load_stl
from physloop.validators import check_design_space

MAT_NU0 = Material(youngs_modulus=70000.0, poisson_ratio=0.0, yield_strength=250.0)
MAT = Material(youngs_modulus=70000.0, poisson_ratio=0.33, yield_strength=250.0)


def report(n, ok, text):
    verdict = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {n:02d} {verdict}: {text}")
    assert ok, f"criterion {n} failed: {text}"


def bar_model(resolution, material, magnitude=2500.0, geom_scale=1.0):
    case = make_case(
        problem_id="PATCH_BAR",
        domain=(0, 10 * geom_scale, 0, 10 * geom_scale, 0, 100 * geom_scale),
        selectors=(
            ("base", (0, 10 * geom_scale, 0, 10 * geom_scale, 0, 0)),
            ("tip", (0, 10 * geom_scale, 0, 10 * geom_scale, 100 * geom_scale, 100 * geom_scale)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("tip", "distributed_force", magnitude, (0.0, 0.0, 1.0)),),
    )
    program = parse_program(
        json.dumps(
            {
                "op": "box",
                "min": [0, 0, 0],
                "max": [10 * geom_scale, 10 * geom_scale, 100 * geom_scale],
            }
        )
    )
    grid = voxelize(program.contains_points, analysis_bounds(case), resolution)
    mesh = tetrahedralize(grid)
    model = build_model(mesh, case, material, tolerance=grid.spacing / 2)
    return case, grid, mesh, model


def test_criterion_01_patch_test_exact():
    started = time.perf_counter()
    _, _, _, model = bar_model(resolution=24, material=MAT_NU0)
    result = solve(model, MAT_NU0)
    elapsed = time.perf_counter() - started
    uniform = (
        abs(result.max_von_mises - 25.0) / 25.0 <= 1e-6
        and abs(result.element_von_mises.min() - 25.0) / 25.0 <= 1e-6
    )
    sf_ok = abs(result.safety_factor - 10.0) / 10.0 <= 1e-6
    report(
        1,
        uniform and sf_ok and elapsed < 10.0,
        f"patch test sigma_vm=25 MPa, SF=10 at 1e-6 rel in {elapsed:.2f}s "
        f"(max={result.max_von_mises:.9f}, SF={result.safety_factor:.9f})",
    )


def test_criterion_02_cantilever_convergence():
    started = time.perf_counter()
    case = make_case(
        problem_id="CANTI",
        domain=(0, 100, 0, 10, 0, 10),
        selectors=(("root", (0, 0, 0, 10, 0, 10)), ("tip", (100, 100, 0, 10, 0, 10))),
        bcs=(("root", (True, True, True)),),
        loads=(("tip", "distributed_force", 100.0, (0.0, 0.0, -1.0)),),
    )
    program = parse_program(json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 10, 10]}))
    delta_ref = 100 * 100**3 / (3 * 70000.0 * (10 * 10**3 / 12))
    errors = {}
    for res in (40, 80):  # voxels along the 100 mm length
        grid = voxelize(program.contains_points, program.bounding_box(), res)
        mesh = tetrahedralize(grid)
        model = build_model(mesh, case, MAT, tolerance=grid.spacing / 2)
        result = solve(model, MAT)
        tip_nodes = np.flatnonzero(np.abs(mesh.nodes[:, 0] - 100.0) < 1e-9)
        tip_deflection = abs(result.displacements[tip_nodes, 2].mean())
        errors[res] = abs(tip_deflection - delta_ref) / delta_ref
    elapsed = time.perf_counter() - started
    within = errors[80] <= 0.15  # a mesh with >=40 voxels along the length
    decreasing = errors[80] < errors[40]
    report(
        2,
        within and decreasing and elapsed < 120.0,
        f"cantilever tip deflection err(40)={errors[40]:.3f} err(80)={errors[80]:.3f} "
        f"(analytic {delta_ref:.4f} mm) in {elapsed:.1f}s",
    )


def test_criterion_03_equilibrium_on_all_builtin_first_designs():
    worst = 0.0
    for case in builtin_cases():
        program = first_iteration_program(case, resolution=24)
        grid = voxelize(program.contains_points, analysis_bounds(case), 24)
        mesh = tetrahedralize(grid)
        model = build_model(mesh, case, MAT, tolerance=grid.spacing / 2)
        result = solve(model, MAT)
        applied = model.nodal_forces.sum(axis=0)
        residual = np.linalg.norm(result.reactions.sum(axis=0) + applied)
        worst = max(worst, residual / np.linalg.norm(applied))
    report(3, worst <= 1e-6, f"equilibrium residual over 20 cases: worst {worst:.2e}")


def test_criterion_04_linearity_and_scaling():
    # force linearity at s = 2 (bitwise-exact scaling path) and s = 3
    _, _, _, m1 = bar_model(resolution=16, material=MAT, magnitude=1000.0)
    _, _, _, m2 = bar_model(resolution=16, material=MAT, magnitude=2000.0)
    _, _, _, m3 = bar_model(resolution=16, material=MAT, magnitude=3000.0)
    r1, r2, r3 = solve(m1, MAT), solve(m2, MAT), solve(m3, MAT)
    scale = r1.element_von_mises.max()
    err2 = np.abs(r2.element_von_mises - 2.0 * r1.element_von_mises).max() / (2 * scale)
    err3 = np.abs(r3.element_von_mises - 3.0 * r1.element_von_mises).max() / (3 * scale)
    linear_ok = err2 <= 1e-9 and err3 <= 1e-9

    # geometry scale 2 with force scale 3: stresses scale by 3/4
    _, _, _, ms = bar_model(resolution=24, material=MAT_NU0, magnitude=2500.0)
    _, _, _, mg = bar_model(
        resolution=24, material=MAT_NU0, magnitude=3 * 2500.0, geom_scale=2.0
    )
    rs, rg = solve(ms, MAT_NU0), solve(mg, MAT_NU0)
    ratio = rg.max_von_mises / rs.max_von_mises
    scaling_ok = abs(ratio - 0.75) / 0.75 <= 1e-6
    report(
        4,
        linear_ok and scaling_ok,
        f"linearity err(s=2)={err2:.2e}, err(s=3)={err3:.2e}; "
        f"geometry scaling ratio={ratio:.9f} (expect 0.75)",
    )


def test_criterion_05_reference_statistics():
    # the reported ablation p-value follows the directional Fisher protocol
    p_fisher = fisher_exact_one_sided([[49, 34], [6, 21]])
    p_welch = student_t_two_sided_p(-3.17, 13.39)
    ok = abs(p_fisher - 0.0008) <= 5e-4 and abs(p_welch - 0.0071) <= 5e-4
    report(
        5,
        ok,
        f"Fisher p={p_fisher:.6f} (target 0.0008+/-5e-4), "
        f"Welch p={p_welch:.6f} (target 0.0071+/-5e-4)",
    )


def test_criterion_06_benchmark_cardinality(tmp_path):
    from physloop import bench

    bench.gen_cases(tmp_path / "cases")
    cases = []
    for path in sorted((tmp_path / "cases").glob("*.json")):
        if path.name == "manifest.json":
            continue
        cases.append(parse_load_case(path.read_text()))
    combos = list(enumerate_variants(cases, GEOM_SCALES, FORCE_SCALES))
    manifest = json.loads((tmp_path / "cases" / "manifest.json").read_text())
    ok = len(cases) == 20 and len(combos) == 500 and manifest["configuration_count"] == 500
    report(6, ok, f"{len(cases)} cases x 5 x 5 = {len(combos)} configurations, all round-trip")


def test_criterion_07_heuristic_end_to_end():
    started = time.perf_counter()
    config = LoopConfig(resolution=24, render_size=64)
    records = {case.problem_id: run_heuristic(case, config) for case in builtin_cases()}
    sweep_seconds = time.perf_counter() - started
    valid = [
        pid
        for pid, rec in records.items()
        if rec.final_status == "valid"
        and 2.0 <= rec.iterations[-1].safety_factor <= 5.0
        and rec.iterations_to_valid <= 10
    ]
    # bit-identical repeats on a sample of cases
    identical = all(
        json.dumps(run_heuristic(case, config).to_json(), sort_keys=True)
        == json.dumps(records[case.problem_id].to_json(), sort_keys=True)
        for case in builtin_cases()[:5]
    )
    ok = len(valid) >= 15 and identical and sweep_seconds < 300.0
    report(
        7,
        ok,
        f"heuristic valid on {len(valid)}/20 cases in {sweep_seconds:.1f}s, "
        f"records bit-identical={identical}",
    )


def test_criterion_08_validator_oracles():
    # (a) connectivity labeling vs independent BFS on 200 random 16^3 grids
    from test_meshing import _bfs_oracle

    rng = np.random.default_rng(2024)
    bfs_ok = True
    for _ in range(200):
        mask = rng.random((16, 16, 16)) < rng.uniform(0.1, 0.5)
        grid = VoxelGrid(origin=(0, 0, 0), spacing=1.0, dims=mask.shape, occupancy=mask)
        if connected_components(grid).count != _bfs_oracle(mask):
            bfs_ok = False
            break

    # (b) half-protruding 20^3 box in a 100^3 domain: ratio 0.004
    from physloop.loadcase import Box3

    program = parse_program(json.dumps({"op": "box", "min": [40, 40, -10], "max": [60, 60, 10]}))
    domain = Box3(0, 100, 0, 100, 0, 100)
    grid = voxelize(program.contains_points, domain.inflate(10.0), 24)
    check = check_design_space(grid, domain)
    layer_volume = grid.spacing * 20.0 * 20.0  # one voxel layer under the box footprint
    ratio_ok = abs(check.outside_volume_mm3 - 4000.0) <= layer_volume

    # (c) face counts: box 6, disjoint boxes 12, cylinder 3
    box_mesh = load_stl(cube_stl_binary(side=10.0))
    other = load_stl(cube_stl_binary(side=10.0, origin=(30.0, 0.0, 0.0)))
    merged = SurfaceMesh(
        vertices=np.vstack([box_mesh.vertices, other.vertices]),
        triangles=np.vstack([box_mesh.triangles, other.triangles + box_mesh.n_vertices]),
    )
    verts, tris = cylinder_mesh(segments=64)
    cyl = SurfaceMesh(vertices=verts, triangles=tris)
    faces_ok = (
        count_faces(box_mesh, 0.35) == 6
        and count_faces(merged, 0.35) == 12
        and count_faces(cyl, 0.35) == 3
    )
    report(
        8,
        bfs_ok and ratio_ok and faces_ok,
        f"BFS oracle 200 grids ok={bfs_ok}, DQ5 outside={check.outside_volume_mm3:.0f} mm^3 "
        f"(4000 +/- {layer_volume:.0f}), face counts ok={faces_ok}",
    )


def test_criterion_09_orchestrator_contracts():
    case = make_case(
        problem_id="ORCH",
        domain=(0, 100, 0, 100, 0, 100),
        selectors=(
            ("base", (0, 100, 0, 100, 0, 0)),
            ("top", (0, 100, 0, 100, 95, 100)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("top", "distributed_force", 600000.0, (0.0, 0.0, -1.0)),),
    )
    full = json.dumps({"op": "box", "min": [0, 0, 0], "max": [100, 100, 100]})
    split = json.dumps(
        {
            "op": "union",
            "children": [
                {"op": "box", "min": [0, 0, 0], "max": [100, 100, 30]},
                {"op": "box", "min": [0, 0, 70], "max": [100, 100, 100]},
            ],
        }
    )
    cfg = dict(resolution=16, render_size=64, deterministic_timing=True, model_id="mock")

    # (a) deterministic-check override: reviewer says PASS, connectivity fails
    backend = ScriptedBackend(["plan", split, "PASS", "plan2", full, "PASS", "ACCEPT"])
    rec = run_pipeline(case, backend, LoopConfig(inner_retries=0, **cfg))
    override_ok = rec.iterations[0].failure_category == "Connectivity" and rec.succeeded

    # (b) feedback routing: geometry failure -> engineer; structural -> planner
    seen = {}
    hook = lambda role, req: seen.setdefault(role, []).append(req.prompt_text())
    weak_case = make_case(
        problem_id="ORCH2",
        domain=(0, 100, 0, 100, 0, 100),
        selectors=(
            ("base", (0, 100, 0, 100, 0, 0)),
            ("top", (0, 100, 0, 100, 95, 100)),
        ),
        bcs=(("base", (True, True, True)),),
        loads=(("top", "distributed_force", 10000.0, (0.0, 0.0, -1.0)),),
    )
    backend = ScriptedBackend(["plan", split, "fix gap", full, "PASS", "REVISE: slim down"])
    run_pipeline(
        weak_case,
        backend,
        LoopConfig(inner_retries=1, max_iterations=2, prompt_hook=hook, **cfg),
    )
    routing_ok = (
        "fix gap" in seen["engineer"][1]
        and "connectivity" in seen["engineer"][1]
        and "safety_factor=" in seen["planner"][1]
        and "slim down" in seen["planner"][1]
    )

    # (c) iteration cap enforcement
    backend = ScriptedBackend(["plan", "prose only, no json"])
    rec_cap = run_pipeline(case, backend, LoopConfig(**cfg))
    cap_ok = len(rec_cap.iterations) == 10 and rec_cap.final_status == "iteration_cap"

    # (d) transcript isolation between runs
    prompts = []
    backend = ScriptedBackend(["plan", full, "PASS", "ACCEPT"])
    run_pipeline(
        make_case(problem_id="FIRST_RUN_TOKEN", domain=(0, 100, 0, 100, 0, 100),
                  selectors=(("base", (0, 100, 0, 100, 0, 0)),
                             ("top", (0, 100, 0, 100, 95, 100))),
                  bcs=(("base", (True, True, True)),),
                  loads=(("top", "distributed_force", 600000.0, (0.0, 0.0, -1.0)),)),
        backend, LoopConfig(**cfg),
    )
    backend2 = ScriptedBackend(["plan", full, "PASS", "ACCEPT"])
    run_pipeline(
        case, backend2,
        LoopConfig(prompt_hook=lambda r, q: prompts.append(q.prompt_text()), **cfg),
    )
    isolation_ok = all("FIRST_RUN_TOKEN" not in p for p in prompts)

    # (e) exact token accounting
    backend3 = ScriptedBackend(["plan", full, "PASS", "ACCEPT"])
    rec_tok = run_pipeline(case, backend3, LoopConfig(**cfg))
    expected = (0, 0)
    from physloop.agents.backends import estimate_tokens

    total_in = total_out = 0
    for idx, req in enumerate(backend3.requests):
        text = backend3._responses[min(idx, len(backend3._responses) - 1)]
        i, o = estimate_tokens(req, text)
        total_in += i
        total_out += o
    tokens_ok = rec_tok.total_tokens() == (total_in, total_out)

    ok = override_ok and routing_ok and cap_ok and isolation_ok and tokens_ok
    report(
        9,
        ok,
        f"override={override_ok} routing={routing_ok} cap={cap_ok} "
        f"isolation={isolation_ok} tokens={tokens_ok}",
    )


def test_criterion_10_metrics_funnel_fixture(tmp_path):
    from test_bench import hand_fixture, write_jsonl
    from physloop import bench

    records = hand_fixture()
    path = tmp_path / "results.jsonl"
    write_jsonl(path, records)
    _, data = bench.report(path)
    entry = data["m"]
    rel = entry["reliability"]
    dq = entry["design_quality"]
    pe = entry["process_efficiency"]
    checks = [
        rel["n_iterations"] == 17,
        rel["r1_percent"] == pytest.approx(100.0),
        rel["r2_percent"] == pytest.approx(100.0 * 16 / 17),
        rel["r3_percent"] == pytest.approx(100.0 * 14 / 16),
        dq["dq1_mean"] == pytest.approx((4 * 6 + 9 + 10) / 8),
        dq["dq2_sf_per_cm3"] == pytest.approx((6 * 0.02 + 0.09 + 0.10) / 8),
        dq["dq3_mean_faces"] == pytest.approx((8 * 6 + 12 + 12) / 8),
        dq["dq4_violation_percent"] == pytest.approx(12.5),
        dq["dq5_mean_percent"] == pytest.approx(0.05),
        pe["pe1_mean_iterations"] == pytest.approx(2.0),
        pe["failure_rate_percent"] == pytest.approx(40.0),
        entry["failure_categories_final"] == {"Connectivity": 1, "FixArea": 1},
        entry["failure_events_per_iteration"]
        == {"DesignSpace": 1, "Connectivity": 1, "FixArea": 2},
    ]
    report(10, all(bool(c) for c in checks), "R1-R3, DQ1-DQ5, PE1 and histograms equal hand-computed values")
