"""Exception hierarchy shared by the model builders, solvers and CLI."""


class ModelError(ValueError):
    """Invalid physical parameters or operator shapes."""


class InvalidStateError(ValueError):
    """A state violates the density-matrix or state-vector invariants."""


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonUniqueSteadyStateError(SolverError):
    pass


class TruncationError(SolverError):
    def __init__(self, message, tail=None):
        super().__init__(message)
        self.tail = tail


class FilteredOutError(RuntimeError):
    """The filtering measurement succeeds with negligible probability."""


class ConfigError(ValueError):
    pass
