"""Exception types raised across the package."""


class FlutterBeamError(Exception):
    """Base class for all package errors."""


class InvalidParams(FlutterBeamError, ValueError):
    """Raised when a BeamParams/BoundaryConfig pair fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(f"{v.field}: {v.message}" for v in report.violations))


class BracketingFailure(FlutterBeamError):
    pass


class NormalizationFailure(FlutterBeamError):
    pass


class DimensionMismatch(FlutterBeamError, ValueError):
    pass


class EigenSolveFailure(FlutterBeamError):
    pass


class NoInstabilityInRange(FlutterBeamError):
    pass


class InvalidResolution(FlutterBeamError, ValueError):
    pass


class MissingBasis(FlutterBeamError, ValueError):
    pass


class NonpositiveEnergy(FlutterBeamError, ValueError):
    pass


class InsufficientPeaks(FlutterBeamError):
    pass


class ParseError(FlutterBeamError):
    pass


class SchemaError(FlutterBeamError):
    """Scenario document does not match the schema; ``path`` names the offending key."""

    def __init__(self, path, message=""):
        self.path = path
        super().__init__(f"{path}: {message}" if message else str(path))
