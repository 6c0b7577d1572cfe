"""The 20 built-in benchmark load cases.

Standard mechanical design situations: beams, brackets, frames, columns
and plates under bending, tension, compression and mixed loading. Load
magnitudes are calibrated so the full selector-hull design starts
over-engineered (safety factor above the target range) at benchmark
resolution, leaving the refinement loop real work to do. Selector layouts
exercise non-convex load paths (L-bracket, A-frame, T-beam) and
internal-clearance constraints (bracket with a marked hole region).

All cases are expressed in the load-case JSON schema and validated on
construction; mm and N throughout.
"""

from __future__ import annotations

from .loadcase import (
    BoundaryCondition,
    Box3,
    Load,
    LoadCase,
    SpatialSelector,
)
from .loadcase import _validate  # shared invariant enforcement

_LOCK_ALL = (True, True, True)
_LOCK_Z = (False, False, True)


def _box(x0, x1, y0, y1, z0, z1) -> Box3:
    return Box3(x0, x1, y0, y1, z0, z1)


def _case(problem_id, domain, selectors, bcs, loads) -> LoadCase:
    return _validate(
        LoadCase(
            problem_id=problem_id,
            domain_bounds=domain,
            selectors=tuple(SpatialSelector(i, q) for i, q in selectors),
            boundary_conditions=tuple(
                BoundaryCondition(selector_id=s, dof_lock=lock) for s, lock in bcs
            ),
            loads=tuple(
                Load(selector_id=s, kind=k, magnitude_newtons=m, direction=d)
                for s, k, m, d in loads
            ),
        )
    )


_DOWN = (0.0, 0.0, -1.0)
_UP = (0.0, 0.0, 1.0)
_PLUS_X = (1.0, 0.0, 0.0)


def _arch_bridge() -> LoadCase:
    return _case(
        "ARCH_BRIDGE",
        _box(0, 1000, 0, 300, 0, 400),
        [
            ("support_left", _box(0, 50, 0, 300, 0, 60)),
            ("support_right", _box(950, 1000, 0, 300, 0, 60)),
            ("deck_surface", _box(0, 1000, 0, 300, 340, 400)),
        ],
        [("support_left", _LOCK_ALL), ("support_right", _LOCK_ALL)],
        [("deck_surface", "distributed_force", 1800000.0, _DOWN)],
    )


def _fixed_beam_point_load() -> LoadCase:
    return _case(
        "FIXED_BEAM_POINT_LOAD",
        _box(0, 200, 0, 60, 0, 60),
        [
            ("end_left", _box(0, 10, 0, 60, 0, 60)),
            ("end_right", _box(190, 200, 0, 60, 0, 60)),
            ("midspan_top", _box(90, 110, 0, 60, 50, 60)),
        ],
        [("end_left", _LOCK_ALL), ("end_right", _LOCK_ALL)],
        [("midspan_top", "point_force", 30000.0, _DOWN)],
    )


def _bracket_internal_hole() -> LoadCase:
    return _case(
        "BRACKET_INTERNAL_HOLE",
        _box(0, 120, 0, 80, 0, 120),
        [
            ("wall_face", _box(0, 0, 0, 80, 0, 120)),
            ("shelf_front", _box(100, 120, 0, 80, 55, 65)),
            # clearance region a pipe must pass through; not load-bearing
            ("pipe_clearance", _box(40, 70, 0, 80, 75, 105)),
        ],
        [("wall_face", _LOCK_ALL)],
        [("shelf_front", "distributed_force", 15000.0, _DOWN)],
    )


def _t_bending_beam() -> LoadCase:
    return _case(
        "T_BENDING_BEAM",
        _box(0, 160, 0, 50, 0, 160),
        [
            ("stem_base", _box(60, 100, 0, 50, 0, 0)),
            ("tip_left", _box(0, 20, 0, 50, 150, 160)),
            ("tip_right", _box(140, 160, 0, 50, 150, 160)),
        ],
        [("stem_base", _LOCK_ALL)],
        [
            ("tip_left", "point_force", 14000.0, _DOWN),
            ("tip_right", "point_force", 14000.0, _DOWN),
        ],
    )


def _l_bracket_design_space() -> LoadCase:
    return _case(
        "L_BRACKET_DESIGN_SPACE",
        _box(0, 120, 0, 60, 0, 120),
        [
            ("wall_upper", _box(0, 0, 0, 60, 90, 120)),
            ("ledge_front", _box(100, 120, 0, 60, 0, 15)),
        ],
        [("wall_upper", _LOCK_ALL)],
        [("ledge_front", "distributed_force", 5000.0, _DOWN)],
    )


def _a_frame() -> LoadCase:
    return _case(
        "A_FRAME",
        _box(0, 240, 0, 60, 0, 160),
        [
            ("foot_left", _box(0, 30, 0, 60, 0, 20)),
            ("foot_right", _box(210, 240, 0, 60, 0, 20)),
            ("apex", _box(100, 140, 0, 60, 140, 160)),
        ],
        [("foot_left", _LOCK_ALL), ("foot_right", _LOCK_ALL)],
        [("apex", "distributed_force", 125000.0, _DOWN)],
    )


def _cantilever_end_load() -> LoadCase:
    return _case(
        "CANTILEVER_END_LOAD",
        _box(0, 160, 0, 60, 0, 60),
        [
            ("wall_face", _box(0, 0, 0, 60, 0, 60)),
            ("tip_pad", _box(150, 160, 20, 40, 0, 60)),
        ],
        [("wall_face", _LOCK_ALL)],
        [("tip_pad", "point_force", 8800.0, _DOWN)],
    )


def _cantilever_distributed() -> LoadCase:
    return _case(
        "CANTILEVER_DISTRIBUTED",
        _box(0, 160, 0, 60, 0, 80),
        [
            ("wall_face", _box(0, 0, 0, 60, 0, 80)),
            ("top_surface", _box(0, 160, 0, 60, 70, 80)),
        ],
        [("wall_face", _LOCK_ALL)],
        [("top_surface", "distributed_force", 20000.0, _DOWN)],
    )


def _simply_supported_udl() -> LoadCase:
    return _case(
        "SIMPLY_SUPPORTED_UDL",
        _box(0, 240, 0, 80, 0, 80),
        [
            ("bearing_left", _box(0, 15, 0, 80, 0, 15)),
            ("bearing_right", _box(225, 240, 0, 80, 0, 15)),
            ("deck", _box(0, 240, 0, 80, 70, 80)),
        ],
        [("bearing_left", _LOCK_ALL), ("bearing_right", _LOCK_Z)],
        [("deck", "distributed_force", 60000.0, _DOWN)],
    )


def _tie_rod_tension() -> LoadCase:
    return _case(
        "TIE_ROD_TENSION",
        _box(0, 200, 0, 50, 0, 50),
        [
            ("anchor_face", _box(0, 0, 0, 50, 0, 50)),
            ("pull_face", _box(195, 200, 0, 50, 0, 50)),
        ],
        [("anchor_face", _LOCK_ALL)],
        [("pull_face", "point_force", 60000.0, _PLUS_X)],
    )


def _column_compression() -> LoadCase:
    return _case(
        "COLUMN_COMPRESSION",
        _box(0, 60, 0, 60, 0, 200),
        [
            ("base_plate", _box(0, 60, 0, 60, 0, 0)),
            ("cap_plate", _box(0, 60, 0, 60, 195, 200)),
        ],
        [("base_plate", _LOCK_ALL)],
        [("cap_plate", "distributed_force", 80000.0, _DOWN)],
    )


def _shelf_bracket() -> LoadCase:
    return _case(
        "SHELF_BRACKET",
        _box(0, 140, 0, 80, 0, 100),
        [
            ("wall_upper", _box(0, 0, 0, 80, 40, 100)),
            ("shelf_edge", _box(110, 140, 0, 80, 90, 100)),
        ],
        [("wall_upper", _LOCK_ALL)],
        [("shelf_edge", "distributed_force", 10000.0, _DOWN)],
    )


def _portal_frame() -> LoadCase:
    return _case(
        "PORTAL_FRAME",
        _box(0, 200, 0, 50, 0, 150),
        [
            ("foot_left", _box(0, 25, 0, 50, 0, 10)),
            ("foot_right", _box(175, 200, 0, 50, 0, 10)),
            ("beam_mid", _box(75, 125, 0, 50, 140, 150)),
        ],
        [("foot_left", _LOCK_ALL), ("foot_right", _LOCK_ALL)],
        [("beam_mid", "distributed_force", 90000.0, _DOWN)],
    )


def _three_point_bending() -> LoadCase:
    return _case(
        "THREE_POINT_BENDING",
        _box(0, 200, 0, 60, 0, 60),
        [
            ("roller_left", _box(0, 10, 0, 60, 0, 10)),
            ("roller_right", _box(190, 200, 0, 60, 0, 10)),
            ("punch", _box(90, 110, 0, 60, 50, 60)),
        ],
        [("roller_left", _LOCK_ALL), ("roller_right", _LOCK_Z)],
        [("punch", "point_force", 25000.0, _DOWN)],
    )


def _overhang_beam() -> LoadCase:
    return _case(
        "OVERHANG_BEAM",
        _box(0, 240, 0, 60, 0, 60),
        [
            ("bearing_left", _box(0, 15, 0, 60, 0, 15)),
            ("bearing_mid", _box(130, 160, 0, 60, 0, 15)),
            ("tip_top", _box(225, 240, 0, 60, 50, 60)),
        ],
        [("bearing_left", _LOCK_ALL), ("bearing_mid", _LOCK_ALL)],
        [("tip_top", "point_force", 17000.0, _DOWN)],
    )


def _balcony_slab() -> LoadCase:
    return _case(
        "BALCONY_SLAB",
        _box(0, 160, 0, 160, 0, 40),
        [
            ("wall_edge", _box(0, 0, 0, 160, 0, 40)),
            ("floor_surface", _box(0, 160, 0, 160, 35, 40)),
        ],
        [("wall_edge", _LOCK_ALL)],
        [("floor_surface", "distributed_force", 30000.0, _DOWN)],
    )


def _lug_plate() -> LoadCase:
    return _case(
        "LUG_PLATE",
        _box(0, 100, 0, 30, 0, 120),
        [
            ("base_weld", _box(0, 100, 0, 30, 0, 0)),
            ("pin_hole", _box(40, 60, 0, 30, 95, 115)),
        ],
        [("base_weld", _LOCK_ALL)],
        [("pin_hole", "point_force", 20000.0, (0.6, 0.0, 0.8))],
    )


def _bridge_two_span() -> LoadCase:
    return _case(
        "BRIDGE_TWO_SPAN",
        _box(0, 300, 0, 80, 0, 100),
        [
            ("pier_left", _box(0, 15, 0, 80, 0, 15)),
            ("pier_center", _box(140, 160, 0, 80, 0, 15)),
            ("pier_right", _box(285, 300, 0, 80, 0, 15)),
            ("roadway", _box(0, 300, 0, 80, 90, 100)),
        ],
        [
            ("pier_left", _LOCK_ALL),
            ("pier_center", _LOCK_ALL),
            ("pier_right", _LOCK_Z),
        ],
        [("roadway", "distributed_force", 280000.0, _DOWN)],
    )


def _crane_jib() -> LoadCase:
    return _case(
        "CRANE_JIB",
        _box(0, 240, 0, 60, 0, 120),
        [
            ("mast_face", _box(0, 0, 0, 60, 0, 120)),
            ("hook_zone", _box(225, 240, 15, 45, 0, 25)),
        ],
        [("mast_face", _LOCK_ALL)],
        [("hook_zone", "point_force", 24000.0, _DOWN)],
    )


def _corbel_support() -> LoadCase:
    return _case(
        "CORBEL_SUPPORT",
        _box(0, 80, 0, 80, 0, 120),
        [
            ("column_face", _box(0, 0, 0, 80, 0, 120)),
            ("seat_top", _box(55, 80, 0, 80, 110, 120)),
        ],
        [("column_face", _LOCK_ALL)],
        [("seat_top", "distributed_force", 40000.0, _DOWN)],
    )


_BUILDERS = (
    _arch_bridge,
    _fixed_beam_point_load,
    _bracket_internal_hole,
    _t_bending_beam,
    _l_bracket_design_space,
    _a_frame,
    _cantilever_end_load,
    _cantilever_distributed,
    _simply_supported_udl,
    _tie_rod_tension,
    _column_compression,
    _shelf_bracket,
    _portal_frame,
    _three_point_bending,
    _overhang_beam,
    _balcony_slab,
    _lug_plate,
    _bridge_two_span,
    _crane_jib,
    _corbel_support,
)


def builtin_cases() -> list[LoadCase]:
    """All 20 benchmark cases, in stable order."""
    return [build() for build in _BUILDERS]
