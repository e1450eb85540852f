"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inputs violate a documented precondition or schema."""


class RegionEmptyError(RuntimeError):
    """A patch region needed by the controller contains no atoms."""


class IntegrationError(RuntimeError):
    """Time integration failed (step underflow, non-finite state, wall limit)."""


class AnalysisError(RuntimeError):
    """Root finding or spectral analysis could not complete."""


class ConstructionError(RuntimeError):
    """The slow-manifold linear system was singular or did not converge."""
