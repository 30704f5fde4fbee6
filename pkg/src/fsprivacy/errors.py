"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SupportMismatchError(DomainError):
    """Two Gaussians live on different supports, so their KL divergence is infinite."""


class ScenarioError(DomainError):
    """A coefficient pair violates the matching constraints on corrupted agents and honest sum."""


class DivergenceError(RuntimeError):
    """Iterates became non-finite during an optimization run."""

    def __init__(self, round_index: int, message: str | None = None):
        self.round_index = round_index
        super().__init__(message or f"non-finite iterate at round {round_index}")
