"""Exception hierarchy shared by all modules."""


class AdvRobustError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(AdvRobustError, ValueError):
    pass


class ArgumentError(AdvRobustError, ValueError):
    pass


class DegenerateGradientError(AdvRobustError, ArithmeticError):
    """All logit-difference gradients vanished; DeepFool cannot take a step."""


# weight files
class WeightsMissingError(AdvRobustError, FileNotFoundError):
    pass


class MalformedPayloadError(AdvRobustError, ValueError):
    pass


class ShapeInconsistencyError(AdvRobustError, ValueError):
    pass


# IDX files
class IdxError(AdvRobustError, ValueError):
    pass


class WrongMagicError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


# CVSS vector strings
class VectorError(AdvRobustError, ValueError):
    pass


class BadPrefixError(VectorError):
    pass


class MissingMetricError(VectorError):
    pass


class DuplicateMetricError(VectorError):
    pass


class UnknownCodeError(VectorError):
    pass


class ConfigError(AdvRobustError, ValueError):
    """Invalid run configuration (unknown keys, missing seeds, bad values)."""
