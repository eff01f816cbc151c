"""Exception types shared across the package."""


class PkmoptError(Exception):
    """Base class for all package errors."""


class DegeneratePoseError(PkmoptError, ValueError):
    """A mechanism solver hit a degenerate configuration (zero-length leg)."""


class NoFeasiblePointError(PkmoptError, ValueError):
    """The actuator bracket selection received no records."""


class NoFeasibleDesignError(PkmoptError):
    """Every start of a multi-start run ended without a feasible design.

    ``diagnostics`` maps constraint names to how often they fired on the
    final points of the run.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UnsupportedDimensionError(PkmoptError, ValueError):
    """Requested Sobol dimension is beyond the embedded direction numbers."""


class ConfigError(PkmoptError, ValueError):
    """Invalid problem configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
