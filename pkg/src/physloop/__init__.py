"""Physics-in-the-loop generative structural design.

Structured load cases in; agent-generated geometry programs evaluated by a
deterministic CSG -> voxel -> tet4 FEA pipeline; physics feedback routed
back to the agents until a design reaches the target safety-factor range;
benchmark metrics and statistics out.
"""

from .errors import (
    BackendUnavailable,
    DegenerateElement,
    EmptyGeometry,
    EmptyMesh,
    EmptyResults,
    ExtractionFailed,
    FixAreaEmpty,
    FormatError,
    LoadAreaEmpty,
    NotWatertight,
    PhysloopError,
    SchemaError,
    SolveDiverged,
)
from .loadcase import (
    FORCE_SCALES,
    GEOM_SCALES,
    BoundaryCondition,
    Box3,
    Load,
    LoadCase,
    SpatialSelector,
    VariantSpec,
    apply_variant,
    enumerate_variants,
    parse_load_case,
    serialize_load_case,
)
from .geometry import GeometryProgram, contains, estimate_volume, parse_program
from .surface import SurfaceMesh, count_faces, load_stl, point_in_mesh
from .meshing import (
    ComponentLabeling,
    TetMesh,
    VoxelGrid,
    connected_components,
    select_nodes,
    surface_mesh,
    tetrahedralize,
    voxelize,
)
from .fem import (
    DEFAULT_MATERIAL,
    FemModel,
    FemResult,
    Material,
    assemble_stiffness,
    build_model,
    solve,
    stress_hotspots,
    von_mises,
)
from .validators import (
    ValidationReport,
    check_connectivity,
    check_design_space,
    check_region_coverage,
)
from .pipeline import EvalConfig, EvaluationOutcome, evaluate_program, evaluate_surface
from .metrics import (
    IterationRecord,
    RunRecord,
    design_quality,
    fisher_exact,
    fisher_exact_one_sided,
    kruskal_wallis,
    process_efficiency,
    reliability,
    welch_t,
)
from .render import Image, ViewSpec, encode_ppm, render_view
from .builtin_cases import builtin_cases
from .agents import (
    HeuristicBackend,
    HttpBackend,
    LoopConfig,
    ScriptedBackend,
    run_heuristic,
    run_pipeline,
    single_agent_pipeline,
)

__version__ = "0.1.0"
