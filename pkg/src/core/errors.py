"""
Exception hierarchy for the hazard toolkit.
Every error the command line can surface carries its exit code.
"""

EXIT_USAGE = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_VALIDATION = 3


class HazardToolkitError(Exception):
    """Base class for all toolkit errors"""

    exit_code = EXIT_VALIDATION


class InvalidParameterError(HazardToolkitError, ValueError):
    """A parameter object violates its invariants"""


class DomainError(HazardToolkitError, ValueError):
    """A query falls outside the extent of a grid"""


class ShapeMismatchError(HazardToolkitError, ValueError):
    """Two grids that must be aligned have different shapes"""


class NormalizationError(HazardToolkitError, ValueError):
    """Normalization range is empty (min == max)"""


class TrainingError(HazardToolkitError):
    """Training cannot start or produced an unusable model"""


class CalibrationError(HazardToolkitError):
    """Uncertainty threshold calibration had nothing to pool"""


class ConfigError(HazardToolkitError):
    """Run configuration failed validation"""


class GridFormatError(HazardToolkitError):
    """A grid file could not be parsed"""


class MalformedHeaderError(GridFormatError):
    """Grid header is missing, unknown or inconsistent"""


class TruncatedPayloadError(GridFormatError):
    """Grid payload is shorter than the header claims"""


class NonFiniteValueError(GridFormatError):
    """Grid payload holds NaN or infinite values"""


class MissingArtifactError(HazardToolkitError):
    """An upstream pipeline artifact does not exist"""

    exit_code = EXIT_MISSING_ARTIFACT

    def __init__(self, stage: str, path):
        self.stage = stage
        self.path = path
        super().__init__(f"Missing artifact {path}; run `{stage}` first")


class ArtifactExistsError(HazardToolkitError):
    """Refusing to overwrite an existing artifact without --force"""

    exit_code = EXIT_USAGE
