"""Exception types raised across the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class MissingFile(PipelineError):
    pass


class ManifestError(PipelineError):
    """Manifest is malformed or lacks required fields (byte order, dtype, ...)."""


class LengthMismatch(PipelineError):
    pass


class UnknownChannelLabel(PipelineError):
    pass


class OverlappingEvents(PipelineError):
    pass


class IoFailure(PipelineError):
    pass


class ZeroTestSet(PipelineError):
    pass


class UnstableFilter(PipelineError):
    pass


class BandOutOfRange(PipelineError):
    pass


class NoEvents(PipelineError):
    pass


class TooShort(PipelineError):
    pass


class MissingElectrode(PipelineError):
    pass


class DegenerateLabels(PipelineError):
    pass


class DimensionMismatch(PipelineError):
    pass


class ShapeMismatch(PipelineError):
    pass


class EmptyClass(PipelineError):
    pass


class TooFewEpochs(PipelineError):
    pass


class SingleSubject(PipelineError):
    pass


class InvalidPlantTarget(PipelineError):
    pass


class ConfigError(PipelineError):
    pass
