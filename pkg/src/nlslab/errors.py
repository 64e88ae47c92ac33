"""Exception types shared across the package."""


class LevyError(ValueError):
    """Invalid jump-law specification or sampling parameters."""


class PhiDomainError(ValueError):
    """Argument outside the analyticity domain of the jump transform."""


class ResolutionError(ValueError):
    """Grid too coarse to resolve the requested object."""


class AlignmentError(ValueError):
    """Trajectories sampled at incompatible times or on different grids."""


class DivergenceError(RuntimeError):
    """Time stepping produced a non-finite state."""

    def __init__(self, message: str, last_good_time: float):
        super().__init__(message)
        self.last_good_time = last_good_time


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class ExperimentError(RuntimeError):
    """An experiment-level guard failed (e.g. boundary leakage)."""
