"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateStateError(RuntimeError):
    """A denominator or moment needed by a rate formula vanished."""


class DivergenceError(RuntimeError):
    """A branching-process computation was requested at spectral radius >= 1."""


class ConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap without converging."""
