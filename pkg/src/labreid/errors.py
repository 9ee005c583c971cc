"""Exception hierarchy shared by the whole pipeline.

Every error exposes a stable machine-readable ``code`` (the snake_cased
class name) so the CLI and HTTP layer can map failures without string
matching.
"""

import re

_CAMEL = re.compile(r"(?<!^)(?=[A-Z])")


class LabReidError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def code(self) -> str:
        return _CAMEL.sub("_", type(self).__name__).lower()


class ConfigError(LabReidError):
    pass


class DecodeError(LabReidError):
    pass


class DimensionMismatch(LabReidError):
    pass


class UnknownLabel(LabReidError):
    pass


class EmptyRegion(LabReidError):
    pass


class ModelLoadError(LabReidError):
    pass


class PatchTooSmall(LabReidError):
    pass


class RegionAbsent(LabReidError):
    pass


class NoCommonRegions(LabReidError):
    pass


class EmptyGallery(LabReidError):
    pass


class LayoutError(LabReidError):
    pass


class FilenameParseError(LabReidError):
    pass


class NoValidQueries(LabReidError):
    pass


class UnknownColorName(LabReidError):
    pass


class EmptyDescription(LabReidError):
    pass


class MissingMask(LabReidError):
    pass


class EmptyCorpus(LabReidError):
    pass


class FingerprintMismatch(LabReidError):
    pass
