"""Exception types shared across the package."""


class SolverError(RuntimeError):
    """A numerical solve failed (singular system, non-convergence, all-dry domain)."""


class TraceSolveError(SolverError):
    """Newton iteration for an interface trace did not converge."""


class ConfigError(ValueError):
    """Invalid run configuration. Carries the full list of violations."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))
