"""
Exception hierarchy shared by every ``prism`` sub-package.

None of these derive from ``ValueError``: pydantic wraps ``ValueError`` raised
inside validators into its own ``ValidationError`` and lets any other exception
propagate, so a ``ConfigError`` raised by a config validator reaches the caller
unchanged.
"""


class PrismError(Exception):
    """
    Base class for all domain errors raised by the package.
    """


class DimensionError(PrismError):
    """
    Operand shapes are incompatible (matmul contraction, FFT length, stamps).
    """


class ContractError(PrismError):
    """
    A caller broke an API precondition (e.g. backward on a non-scalar root).
    """


class NumericError(PrismError):
    """
    NaN or Inf appeared where finite values are required.
    """


class ConfigError(PrismError):
    """
    A configuration violates a cross-field invariant.
    """


class ConfigParseError(ConfigError):
    """
    A JSON config file could not be parsed; carries the failing position.
    """

    def __init__(self, path: str, line: int, column: int, message: str) -> None:
        """
        Record the file, line and column of the parse failure.
        """
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class SizingError(PrismError):
    """
    A series is too short for the requested windows, lags or horizons.
    """


class EmptySeriesError(PrismError):
    """
    No trace records remain after filtering, so no series can be built.
    """


class RecordValidationError(PrismError):
    """
    One or more trace records are malformed (e.g. end before start).
    """

    def __init__(self, job_ids: list[str], message: str) -> None:
        """
        Keep the offending job ids so callers can report them.
        """
        self.job_ids = job_ids
        super().__init__(f"{message}: {', '.join(job_ids)}" if job_ids else message)


class UndefinedRatioError(PrismError):
    """
    A ratio statistic has no meaning for the series (all-zero demand).
    """


class DegenerateVarianceError(PrismError):
    """
    R² is undefined because the target has zero variance.
    """


class CheckpointError(PrismError):
    """
    A checkpoint or training state on disk is missing, corrupt or incompatible.
    """


class SeriesFormatError(PrismError):
    """
    A trace or series file does not follow the declared CSV layout.
    """
