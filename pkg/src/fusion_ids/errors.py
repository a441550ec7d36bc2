"""Exception hierarchy shared across the toolkit."""


class FusionIdsError(Exception):
    """Base class for data/model errors (CLI exit code 2)."""


class ParseError(FusionIdsError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class BalanceError(FusionIdsError):
    pass


class SplitError(FusionIdsError):
    pass


class TrainingError(FusionIdsError):
    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")


class DimensionError(FusionIdsError, ValueError):
    pass


class RateError(FusionIdsError, ZeroDivisionError):
    pass


class FusionError(FusionIdsError):
    pass


class ExperimentError(FusionIdsError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
