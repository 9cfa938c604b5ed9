"""Exception types shared across the package."""
from __future__ import annotations


class IntegrationDivergedError(RuntimeError):
    """Raised when a simulated state stops being finite (integration blow-up)."""

    def __init__(self, t: float, state_norm: float):
        self.t = t
        self.state_norm = state_norm
        super().__init__(
            f"non-finite state at t={t:.6g} (last finite state norm {state_norm:.6g}); "
            "reduce dt or check the filter poles"
        )


class ScenarioValidationError(ValueError):
    """Raised with the complete list of scenario validation failures."""

    def __init__(self, errors: list[str], source: str = "<scenario>"):
        self.errors = list(errors)
        self.source = source
        lines = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"invalid scenario {source}:\n{lines}")
