"""Exception types shared across the simulator."""


class ResconError(Exception):
    """Base class for all package errors."""


class ConfigError(ResconError):
    """A scenario document failed to parse or violated a hard invariant."""


class TraceError(ResconError):
    """A trace file is missing, truncated, or malformed."""


class BudgetInfeasibleError(ResconError):
    """A denial-of-service budget cannot accommodate any attack interval."""


class SingularityFault(ResconError):
    """A plant denominator fell below the safe magnitude threshold."""

    def __init__(self, message: str, step: int | None = None, agent: int | None = None):
        super().__init__(message)
        self.step = step
        self.agent = agent


class DivergenceFault(ResconError):
    """A simulated quantity became non-finite or exceeded the magnitude cap."""

    def __init__(self, message: str, step: int | None = None, agent: int | None = None):
        super().__init__(message)
        self.step = step
        self.agent = agent
