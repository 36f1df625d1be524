"""Exception hierarchy shared across the engine.

Exit-code categories mirror the CLI contract: 1 config, 2 data, 3 adapter,
4 internal.
"""


class StresscastError(Exception):
    """Base class for all engine errors."""

    exit_code = 4


class ConfigError(StresscastError):
    """Invalid or inconsistent run configuration."""

    exit_code = 1


class DataError(StresscastError):
    """Problem with the dataset or derived arrays."""

    exit_code = 2


class AdapterError(StresscastError):
    """Problem talking to an external model adapter."""

    exit_code = 3


class FileNotFound(DataError):
    """A configured input file does not exist."""


class ParseError(DataError):
    """Input table failed to parse; carries the first offending position."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None:
            message = f"{message} (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message)


class NonMonotoneTimestamps(DataError):
    pass


class AllRowsDropped(DataError):
    pass


class SegmentTooSmall(DataError):
    def __init__(self, role, message=""):
        self.role = role
        super().__init__(message or f"segment '{role}' is too small")


class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class NonFiniteLoss(DataError):
    pass


class NoApplicableScenario(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class DivergenceDetected(StresscastError):
    """Training loss became non-finite."""

    def __init__(self, epoch, batch, message=""):
        self.epoch = epoch
        self.batch = batch
        super().__init__(message or f"non-finite training loss at epoch {epoch}, batch {batch}")


class HandshakeTimeout(AdapterError):
    pass


class ProtocolViolation(AdapterError):
    pass


class AdapterCrashed(AdapterError):
    def __init__(self, returncode, message=""):
        self.returncode = returncode
        super().__init__(message or f"adapter process exited with code {returncode}")
