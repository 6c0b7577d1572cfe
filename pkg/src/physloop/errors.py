"""Exception hierarchy shared across the pipeline."""


class PhysloopError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(PhysloopError):
    """Load-case or geometry-program document violates the schema.

    The message always names the JSON path of the offending field.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class EmptyGeometry(PhysloopError):
    """Geometry occupies zero voxels at the working resolution."""


class FormatError(PhysloopError):
    """Malformed binary or ASCII STL payload."""


class EmptyMesh(PhysloopError):
    """Surface mesh has no usable triangles after cleanup."""


class NotWatertight(PhysloopError):
    """Surface mesh has edges not shared by exactly two triangles."""


class FixAreaEmpty(PhysloopError):
    """A boundary condition selected zero mesh nodes."""


class LoadAreaEmpty(PhysloopError):
    """A load selected zero mesh nodes."""


class DegenerateElement(PhysloopError):
    """Tetrahedron volume below the assembly threshold."""


class SolveDiverged(PhysloopError):
    """Conjugate gradient failed to reach the residual target.

    Signals an under-constrained or disconnected structure.
    """


class ExtractionFailed(PhysloopError):
    """No parseable geometry program found in an agent response."""


class BackendUnavailable(PhysloopError):
    """Chat backend transport failed after bounded retries."""


class EmptyResults(PhysloopError):
    """Results file contains no run records."""
