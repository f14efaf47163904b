class DualWebError(ValueError):
    """Base class for every error raised by the dualweb pipeline."""


class GraphError(DualWebError):
    """A graph invariant does not hold (asymmetry, self-loops, size cap, empty intersection)."""


class UnknownNodeError(DualWebError):
    def __init__(self, offenders, context: str = "node set"):
        self.offenders = sorted(str(o) for o in offenders)
        shown = ", ".join(self.offenders[:10])
        more = f" (+{len(self.offenders) - 10} more)" if len(self.offenders) > 10 else ""
        super().__init__(f"{len(self.offenders)} id(s) not in {context}: {shown}{more}")


class DataValidationError(DualWebError):
    """Malformed input file. `lines` holds 1-based file line numbers of the bad rows."""

    def __init__(self, message: str, lines=None):
        self.lines = list(lines or [])
        if self.lines:
            message = f"{message} (line(s) {', '.join(str(n) for n in self.lines[:10])})"
        super().__init__(message)


class UndefinedStatisticError(DualWebError):
    """The requested statistic is undefined for this input (n too small, zero variance, m == 0)."""


class StageError(DualWebError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
