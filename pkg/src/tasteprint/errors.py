"""Exception hierarchy shared across the toolchain.

Two broad families matter for the CLI exit codes: ``InputError`` covers
malformed files and I/O trouble (exit 2), ``ValidationError`` covers inputs
that parsed fine but violate a domain rule (exit 1).
"""

from __future__ import annotations


class TastePrintError(Exception):
    """Base class for all toolchain errors."""


class InputError(TastePrintError):
    """A file or stream could not be parsed or read."""


class ValidationError(TastePrintError):
    """An input parsed but violates a domain constraint."""


class MeshParseError(InputError):
    def __init__(self, message: str, *, path: str | None = None,
                 line: int | None = None, offset: int | None = None):
        where = []
        if path:
            where.append(path)
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.path = path
        self.line = line
        self.offset = offset


class EmptyMeshError(ValidationError):
    pass


class OpenContourError(ValidationError):
    """A slicing plane produced a chain that does not close into a ring."""

    def __init__(self, layer_index: int, detail: str = ""):
        msg = f"open contour on layer {layer_index}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.layer_index = layer_index


class CalibrationDomainError(ValidationError):
    pass


class InvalidCalibrationError(ValidationError):
    pass


class DegenerateDesignError(ValidationError):
    """The regression design matrix is rank-deficient."""


class DegenerateCorrespondenceError(ValidationError):
    """Marker correspondences do not pin down a unique homography."""


class SingularMatrixError(ValidationError):
    pass


class EmptySpotError(ValidationError):
    """No foreground pixels found inside the measurement ROI."""


class PlacementError(ValidationError):
    pass


class InvalidFootprintError(ValidationError):
    pass


class CapacityError(ValidationError):
    def __init__(self, message: str, achievable_mass_mg: float):
        super().__init__(message)
        self.achievable_mass_mg = achievable_mass_mg


class GcodeParseError(InputError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


class OrphanSprayError(ValidationError):
    """A spray command appears before any positioning move."""


class SynchronizationError(ValidationError):
    pass


class BoundsError(ValidationError):
    pass


class StaleDesignError(ValidationError):
    """A design references a mesh other than the one currently loaded."""
