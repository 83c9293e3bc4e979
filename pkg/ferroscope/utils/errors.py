"""
Ferroscope Error Types
======================

Every failure the pipeline raises on purpose derives from FerroscopeError.
Each class carries the CLI exit code it maps to:

- 1: usage / configuration problems
- 2: bad data, shapes or file formats
- 3: numerical failure (non-finite loss, degenerate calibration)
"""


class FerroscopeError(Exception):
    """Base class for all ferroscope errors."""

    exit_code = 2


class ConfigError(FerroscopeError):
    """Invalid or unknown configuration key/value."""

    exit_code = 1


class InvalidArgumentError(FerroscopeError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(FerroscopeError, ValueError):
    """Array shape does not match what a layer or model expects."""


class StateError(FerroscopeError, RuntimeError):
    """Operation called in the wrong object state (e.g. backward before forward)."""


class TooSmallError(InvalidArgumentError):
    """Image is smaller than one tile under the drop-partial policy."""


class FormatError(FerroscopeError):
    """A binary or text file has the wrong magic, version or layout."""


class DescriptorMismatchError(FormatError):
    """Checkpoint parameters do not fit the target network architecture."""


class CorruptCorpusError(FormatError):
    """Corpus directory disagrees with its manifest."""


class StratificationError(InvalidArgumentError):
    """A class has too few examples to appear on both sides of a split."""


class UndefinedMetricError(FerroscopeError, ArithmeticError):
    """Precision/recall/accuracy with a zero denominator."""

    def __init__(self, message: str, class_index: int = -1) -> None:
        super().__init__(message)
        self.class_index = class_index


class NonFiniteError(FerroscopeError, ArithmeticError):
    """NaN or infinity where finite numbers are required."""

    exit_code = 3

    def __init__(self, message: str, name: str = "") -> None:
        super().__init__(message)
        self.name = name


class TrainingDivergedError(NonFiniteError):
    """Training produced a non-finite loss; the last good parameters were restored."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class DegenerateCalibrationError(FerroscopeError, ArithmeticError):
    """Calibration set produced max v == min v."""

    exit_code = 3
