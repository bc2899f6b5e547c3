"""
Exception hierarchy for the pipe inversion toolkit
"""


class PipeScanError(Exception):
    """Base class for every domain error raised by the toolkit"""


class ConfigError(PipeScanError):
    """Invalid configuration file or override"""


class GeometryError(PipeScanError):
    """Base class for ellipse and rotation primitives"""


class DegenerateConic(GeometryError):
    """The conic coefficients do not describe a real axis-aligned ellipse"""


class PointInsideEllipse(GeometryError):
    """A projection was requested for a point inside or on the ellipse"""


class InvalidAngle(GeometryError):
    """A rotation angle would lift a signature point above the surface"""


class FitError(PipeScanError):
    """Base class for curve fitting failures"""


class FitFailed(FitError):
    """The fitting problem has no admissible solution"""


class DegenerateInput(FitError):
    """The point set cannot determine the requested curve"""


class ClusterTooNarrow(PipeScanError):
    """Fewer than six signature points could be extracted from a cluster"""


class SceneOutOfGrid(PipeScanError):
    """The synthetic signature apex does not fit inside the grid"""


class BScanFormatError(PipeScanError):
    """A B-scan data file or its JSON sidecar is missing or malformed"""


class UnknownSegment(PipeScanError):
    """The pipeline map holds no segment with the requested id"""


class EstimateIncomplete(PipeScanError):
    """A pipe estimate lacks the bearing needed for map revision"""


class MapFormatError(PipeScanError):
    """A pipeline map file is missing or malformed"""
