"""Linear-elastic tet4 finite element solver.

Assembles constant-strain tetrahedron stiffness into a sparse symmetric
system, solves it with Jacobi-preconditioned conjugate gradients, and
reduces the stress field to the benchmark's feedback signals: per-element
von Mises stress and the safety factor (yield / max stress).

Units are mm, N and MPa throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import DegenerateElement, FixAreaEmpty, LoadAreaEmpty, SolveDiverged
from .loadcase import LoadCase
from .meshing import TetMesh, select_nodes, surface_mesh

#: Stress components use Voigt order (xx, yy, zz, xy, yz, zx) with
#: engineering shear strains.
VOIGT = ("xx", "yy", "zz", "xy", "yz", "zx")

#: Safety factor reported when the structure is essentially unstressed.
SAFETY_FACTOR_CAP = 1e6
_STRESS_FLOOR = 1e-9  # MPa

_MIN_TET_VOLUME = 1e-12  # mm^3


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material (generic aluminum by default)."""

    youngs_modulus: float = 70000.0  # MPa
    poisson_ratio: float = 0.33
    yield_strength: float = 250.0  # MPa

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError("Poisson ratio must be in [0, 0.5)")
        if self.yield_strength <= 0:
            raise ValueError("yield strength must be positive")


DEFAULT_MATERIAL = Material()


@dataclass(frozen=True)
class FemModel:
    """A mesh plus resolved boundary conditions and nodal forces."""

    mesh: TetMesh
    fixed_dofs: np.ndarray  # (N, 3) bool
    nodal_forces: np.ndarray  # (N, 3) float64, N

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_nodes * 3


@dataclass(frozen=True)
class FemResult:
    """Solver output: displacement and stress fields plus the safety factor."""

    displacements: np.ndarray  # (N, 3) mm
    element_von_mises: np.ndarray  # (M,) MPa
    max_von_mises: float
    safety_factor: float
    solver_iterations: int
    residual: float
    reactions: np.ndarray = field(repr=False, default=None)  # (N, 3) N at fixed dofs


def elasticity_matrix(material: Material) -> np.ndarray:
    """Isotropic 6x6 elasticity matrix D in Voigt notation."""
    e, nu = material.youngs_modulus, material.poisson_ratio
    lam = e * nu / ((1 + nu) * (1 - 2 * nu))
    mu = e / (2 * (1 + nu))
    d = np.zeros((6, 6))
    d[:3, :3] = lam
    d[np.diag_indices(3)] = lam + 2 * mu
    d[3, 3] = d[4, 4] = d[5, 5] = mu
    return d


def shape_gradients(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shape-function gradients and volumes for a batch of tets.

    coords: (M, 4, 3). Returns (grads (M, 4, 3), volumes (M,)).
    Raises DegenerateElement for flat or inverted tets before inversion.
    """
    m = coords.shape[0]
    aug = np.ones((m, 4, 4))
    aug[:, :, 1:] = coords
    det = np.linalg.det(aug)
    volumes = det / 6.0
    if np.any(volumes <= _MIN_TET_VOLUME):
        bad = int(np.argmax(volumes <= _MIN_TET_VOLUME))
        raise DegenerateElement(
            f"element {bad} volume {volumes[bad]:g} mm^3 below threshold"
        )
    inv = np.linalg.inv(aug)
    grads = inv[:, 1:4, :].transpose(0, 2, 1)  # (M, 4 nodes, 3 dims)
    return grads, volumes


def strain_displacement(grads: np.ndarray) -> np.ndarray:
    """B matrices (M, 6, 12) from shape gradients (M, 4, 3)."""
    m = grads.shape[0]
    b = np.zeros((m, 6, 12))
    gx, gy, gz = grads[:, :, 0], grads[:, :, 1], grads[:, :, 2]
    for a in range(4):
        c = 3 * a
        b[:, 0, c + 0] = gx[:, a]
        b[:, 1, c + 1] = gy[:, a]
        b[:, 2, c + 2] = gz[:, a]
        b[:, 3, c + 0] = gy[:, a]
        b[:, 3, c + 1] = gx[:, a]
        b[:, 4, c + 1] = gz[:, a]
        b[:, 4, c + 2] = gy[:, a]
        b[:, 5, c + 0] = gz[:, a]
        b[:, 5, c + 2] = gx[:, a]
    return b


def element_stiffness(coords: np.ndarray, material: Material) -> np.ndarray:
    """Dense 12x12 stiffness of a single tet; reference for the assembly."""
    grads, volumes = shape_gradients(coords[None, :, :])
    b = strain_displacement(grads)[0]
    d = elasticity_matrix(material)
    ke = volumes[0] * b.T @ d @ b
    return 0.5 * (ke + ke.T)  # kill fp asymmetry so K == K.T exactly


def assemble_stiffness(
    mesh: TetMesh, material: Material, chunk: int = 50000
) -> sparse.csr_matrix:
    """Global sparse stiffness matrix; symmetric by construction."""
    d = elasticity_matrix(material)
    n_dofs = mesh.n_nodes * 3
    rows_all = []
    cols_all = []
    vals_all = []
    for start in range(0, mesh.n_tets, chunk):
        tets = mesh.tets[start : start + chunk]
        coords = mesh.nodes[tets]
        grads, volumes = shape_gradients(coords)
        b = strain_displacement(grads)
        ke = np.einsum("eji,jk,ekl->eil", b, d, b) * volumes[:, None, None]
        dof = (3 * tets[:, :, None] + np.arange(3)[None, None, :]).reshape(-1, 12)
        rows_all.append(np.repeat(dof, 12, axis=1).ravel())
        cols_all.append(np.tile(dof, (1, 12)).ravel())
        vals_all.append(ke.ravel())
    k = sparse.coo_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n_dofs, n_dofs),
    ).tocsr()
    # duplicate summation order differs between (i, j) and (j, i); averaging
    # with the transpose restores exact bitwise symmetry
    return 0.5 * (k + k.T.tocsr())


def _distributed_weights(
    mesh: TetMesh,
    boundary,
    node_ids: np.ndarray,
    direction: np.ndarray,
) -> np.ndarray | None:
    """Per-node tributary weights for a distributed force over a surface.

    Boundary triangles fully inside the selection are weighted by area
    projected onto the load direction, which reproduces a uniform traction
    exactly on flat faces; falls back to raw area when the projection
    vanishes. Returns None when the selection touches no boundary triangle.
    """
    selected = np.zeros(mesh.n_nodes, dtype=bool)
    selected[node_ids] = True
    tri_nodes = boundary.node_ids  # (T, 3) ids into mesh.nodes
    inside = selected[tri_nodes].all(axis=1)
    if not inside.any():
        return None
    tris = tri_nodes[inside]
    p = mesh.nodes[tris]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    area = 0.5 * np.linalg.norm(cross, axis=1)
    normal = cross / np.where(area[:, None] > 0, 2 * area[:, None], 1.0)
    w_tri = area * np.abs(normal @ direction)
    if w_tri.sum() <= 1e-12:
        w_tri = area
    if w_tri.sum() <= 1e-12:
        return None
    weights = np.zeros(mesh.n_nodes)
    for corner in range(3):
        np.add.at(weights, tris[:, corner], w_tri / 3.0)
    return weights


@dataclass(frozen=True)
class _Boundary:
    node_ids: np.ndarray  # (T, 3) boundary triangles as mesh-node ids


def _boundary_triangles(mesh: TetMesh) -> _Boundary:
    from .meshing import TET_FACES

    faces = mesh.tets[:, TET_FACES].reshape(-1, 3)
    key = np.sort(faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return _Boundary(node_ids=faces[counts[inverse] == 1])


def build_model(
    mesh: TetMesh,
    case: LoadCase,
    material: Material = DEFAULT_MATERIAL,
    tolerance: float = 0.5,
) -> FemModel:
    """Resolve a load case against a mesh into fixed dofs and nodal forces.

    `tolerance` (mm) inflates every selector box; the pipeline passes half
    the voxel spacing so plane selectors capture the boundary node layer.

    Point forces split the magnitude equally across all selected nodes;
    distributed forces use tributary (projected-area) weighting over the
    boundary triangles inside the selection, so a uniform traction on a
    flat face is reproduced exactly.
    """
    fixed = np.zeros((mesh.n_nodes, 3), dtype=bool)
    for bc in case.boundary_conditions:
        sel = case.selector(bc.selector_id)
        ids = select_nodes(mesh, sel, tolerance)
        if len(ids) == 0:
            raise FixAreaEmpty(
                f"boundary condition on '{bc.selector_id}' selects no nodes"
            )
        for axis in range(3):
            if bc.dof_lock[axis]:
                fixed[ids, axis] = True

    forces = np.zeros((mesh.n_nodes, 3))
    boundary = None
    for load in case.loads:
        sel = case.selector(load.selector_id)
        ids = select_nodes(mesh, sel, tolerance)
        if len(ids) == 0:
            raise LoadAreaEmpty(f"load on '{load.selector_id}' selects no nodes")
        direction = np.asarray(load.direction)
        if load.kind == "distributed_force":
            if boundary is None:
                boundary = _boundary_triangles(mesh)
            weights = _distributed_weights(mesh, boundary, ids, direction)
            if weights is None:
                weights = np.zeros(mesh.n_nodes)
                weights[ids] = 1.0
        else:  # point_force
            weights = np.zeros(mesh.n_nodes)
            weights[ids] = 1.0
        weights = weights / weights.sum()
        forces += load.magnitude_newtons * weights[:, None] * direction[None, :]

    return FemModel(mesh=mesh, fixed_dofs=fixed, nodal_forces=forces)


def _pcg(a: sparse.csr_matrix, b: np.ndarray, tol: float, maxiter: int):
    """Jacobi-preconditioned conjugate gradients from a zero start."""
    x = np.zeros_like(b)
    r = b.copy()
    diag = a.diagonal()
    if np.any(diag <= 0):
        return x, 0, np.inf, False
    minv = 1.0 / diag
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return x, 0, 0.0, True
    target = tol * b_norm
    r_norm = float(np.linalg.norm(r))
    best = r_norm
    last_check = r_norm
    iterations = 0
    for k in range(1, maxiter + 1):
        ap = a @ p
        pap = float(p @ ap)
        if not np.isfinite(pap) or pap <= 0:
            return x, k, r_norm / b_norm, False
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        r_norm = float(np.linalg.norm(r))
        iterations = k
        if r_norm <= target:
            return x, k, r_norm / b_norm, True
        best = min(best, r_norm)
        # stagnation guard: a singular (floating) system plateaus long
        # before the formal iteration cap
        if k % 2000 == 0:
            if best > 0.9 * last_check:
                return x, k, r_norm / b_norm, False
            last_check = best
        z = minv * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return x, iterations, r_norm / b_norm, False


def von_mises(stress: np.ndarray) -> np.ndarray | float:
    """Von Mises invariant of stress in Voigt order (xx, yy, zz, xy, yz, zx)."""
    s = np.asarray(stress, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    sx, sy, sz, txy, tyz, tzx = (s[:, i] for i in range(6))
    vm = np.sqrt(
        sx**2 + sy**2 + sz**2 - sx * sy - sy * sz - sz * sx
        + 3.0 * (txy**2 + tyz**2 + tzx**2)
    )
    return float(vm[0]) if single else vm


def element_stresses(mesh: TetMesh, material: Material, u: np.ndarray) -> np.ndarray:
    """Constant per-element stress sigma = D B u_e, shape (M, 6)."""
    d = elasticity_matrix(material)
    out = np.empty((mesh.n_tets, 6))
    chunk = 50000
    for start in range(0, mesh.n_tets, chunk):
        tets = mesh.tets[start : start + chunk]
        coords = mesh.nodes[tets]
        grads, _ = shape_gradients(coords)
        b = strain_displacement(grads)
        ue = u.reshape(-1, 3)[tets].reshape(len(tets), 12)
        out[start : start + chunk] = np.einsum("eij,ej->ei", b, ue) @ d.T
    return out


def solve(
    model: FemModel,
    material: Material = DEFAULT_MATERIAL,
    rel_tol: float = 1e-8,
    max_iter: int | None = None,
) -> FemResult:
    """Solve K u = f with fixed dofs eliminated; raises SolveDiverged.

    Divergence (residual target unreachable) signals an under-constrained
    or disconnected structure and maps to the FEA failure category.
    """
    if not model.fixed_dofs.any():
        raise SolveDiverged("no fixed degrees of freedom")
    if not np.any(model.nodal_forces):
        raise SolveDiverged("no applied forces")

    k = assemble_stiffness(model.mesh, material)
    f = model.nodal_forces.ravel()
    fixed = model.fixed_dofs.ravel()
    free = ~fixed
    free_idx = np.flatnonzero(free)
    k_ff = k[free_idx][:, free_idx]
    b = f[free_idx]
    cap = max_iter if max_iter is not None else 20 * model.n_dofs

    u_free, iterations, residual, converged = _pcg(k_ff, b, rel_tol, cap)
    if not converged:
        raise SolveDiverged(
            f"PCG stalled at relative residual {residual:.3e} after {iterations} iterations"
        )

    u = np.zeros(model.n_dofs)
    u[free_idx] = u_free

    stresses = element_stresses(model.mesh, material, u)
    vm = von_mises(stresses)
    max_vm = float(vm.max())
    if max_vm < _STRESS_FLOOR:
        safety = SAFETY_FACTOR_CAP
    else:
        safety = min(material.yield_strength / max_vm, SAFETY_FACTOR_CAP)

    reactions = np.zeros(model.n_dofs)
    reactions[fixed] = (k @ u - f)[fixed]

    return FemResult(
        displacements=u.reshape(-1, 3),
        element_von_mises=vm,
        max_von_mises=max_vm,
        safety_factor=float(safety),
        solver_iterations=iterations,
        residual=residual,
        reactions=reactions.reshape(-1, 3),
    )


def result_to_json(result: FemResult) -> dict:
    """Debug dump of the solution fields; not a stability-guaranteed format."""
    return {
        "displacements": result.displacements.tolist(),
        "element_von_mises": result.element_von_mises.tolist(),
        "max_von_mises": result.max_von_mises,
        "safety_factor": result.safety_factor,
        "solver_iterations": result.solver_iterations,
        "residual": result.residual,
    }


def stress_hotspots(
    result: FemResult, mesh: TetMesh, k: int = 5
) -> list[tuple[tuple[float, float, float], float]]:
    """Top-k elements by von Mises stress, descending; ties by element index."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vm = result.element_von_mises
    k = min(k, len(vm))
    order = np.lexsort((np.arange(len(vm)), -vm))[:k]
    centroids = mesh.centroids()
    return [(tuple(float(c) for c in centroids[i]), float(vm[i])) for i in order]
