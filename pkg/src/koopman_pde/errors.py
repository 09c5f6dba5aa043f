"""Exception hierarchy shared across the package.

The CLI maps each family onto a process exit code, so new error types should
subclass one of the three families below.
"""


class KoopmanPDEError(Exception):
    exit_code = 1


class ConfigError(KoopmanPDEError, ValueError):
    exit_code = 2


class DataError(KoopmanPDEError, ValueError):
    exit_code = 3


class NumericError(KoopmanPDEError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericError):
    """QR iteration did not converge; ``block`` is the (lo, hi) active window."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class SolverDivergence(NumericError):
    def __init__(self, message, step=None, rows=None):
        super().__init__(message)
        self.step = step
        self.rows = rows


class TrainingDiverged(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ArchitectureMismatch(DataError):
    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)
