"""Exception hierarchy shared by the pipeline stages."""


class VrSaccadeError(Exception):
    """Base class for every error raised by this package."""


# ingest / table format
class MalformedDocument(VrSaccadeError, ValueError):
    pass


class MissingField(VrSaccadeError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing field"


class NonMonotonicTimestamps(VrSaccadeError, ValueError):
    pass


class HeaderMismatch(VrSaccadeError, ValueError):
    pass


class RowArity(VrSaccadeError, ValueError):
    pass


class UnparseableNumber(VrSaccadeError, ValueError):
    pass


class UnlabeledData(VrSaccadeError, ValueError):
    pass


# numerics
class EmptyInput(VrSaccadeError, ValueError):
    pass


class TooFewSamples(VrSaccadeError, ValueError):
    pass


class ZeroVariance(VrSaccadeError, ValueError):
    pass


class EmptyAfterFiltering(VrSaccadeError, ValueError):
    pass


class AllRemoved(VrSaccadeError, ValueError):
    pass


class InvalidSample(VrSaccadeError, ValueError):
    pass


class TooFewRows(VrSaccadeError, ValueError):
    pass


class ZeroVarianceColumn(VrSaccadeError, ValueError):
    pass


class DimensionMismatch(VrSaccadeError, ValueError):
    pass


class KOutOfRange(VrSaccadeError, ValueError):
    pass


class SingleClass(VrSaccadeError, ValueError):
    pass


class NonConvergence(VrSaccadeError, RuntimeWarning):
    """Emitted as a warning; the trainer still returns a model."""


# model selection
class KTooLarge(VrSaccadeError, ValueError):
    pass


class DegenerateFold(VrSaccadeError, ValueError):
    pass


class LengthMismatch(VrSaccadeError, ValueError):
    pass


class EmptyMatrix(VrSaccadeError, ValueError):
    pass


class WrongDimensionality(VrSaccadeError, ValueError):
    pass


# synth / plotting
class InvalidConfig(VrSaccadeError, ValueError):
    pass


class OutOfRange(VrSaccadeError, ValueError):
    pass


class ShapeMismatch(VrSaccadeError, ValueError):
    pass
