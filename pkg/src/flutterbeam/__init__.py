"""Flutter onset and post-flutter dynamics of extensible piston-theoretic beams."""

__version__ = "0.1.0"

from .errors import FlutterBeamError  # noqa: E402
from .params import BeamParams, BoundaryConfig, Config, FreeEnd, InitialData, validate_params  # noqa: E402

__all__ = ["BeamParams", "BoundaryConfig", "Config", "FreeEnd", "FlutterBeamError", "InitialData",
           "validate_params", "__version__"]
