"""Exceptions and warnings raised by rsgd_lab."""

__all__ = [
    "RsgdLabError",
    "InvalidArgumentError",
    "NumericalDegeneracyError",
    "NondifferentiablePointError",
    "DivergedError",
    "InfeasibleBudgetError",
    "ConfigError",
    "DataFormatError",
    "DegenerateSubspaceWarning",
    "DuplicateEntryWarning",
    "SparseMaskWarning",
]


class RsgdLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(RsgdLabError, ValueError):
    pass


class NumericalDegeneracyError(RsgdLabError, ArithmeticError):
    """A factorization or normalization broke down (rank-deficient x + v)."""


class NondifferentiablePointError(RsgdLabError, ArithmeticError):

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class DivergedError(RsgdLabError, FloatingPointError):
    """A run produced a non-finite loss, gradient or iterate."""

    def __init__(self, iteration, label=None, what="value"):
        self.iteration = int(iteration)
        self.label = label
        self.what = what
        where = f"run '{label}' " if label else ""
        super().__init__(f"{where}diverged at iteration {self.iteration}: non-finite {what}")


class InfeasibleBudgetError(RsgdLabError, ValueError):
    pass


class ConfigError(RsgdLabError, ValueError):

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DataFormatError(RsgdLabError, ValueError):

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class DegenerateSubspaceWarning(UserWarning):
    """Eigenvalues r and r+1 tie, so the dominant subspace is not unique."""


class DuplicateEntryWarning(UserWarning):
    pass


class SparseMaskWarning(UserWarning):
    pass
