"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Invalid model, configuration or input data."""


class PopulationOverflowError(OverflowError):
    """Population count exceeded the configured integer cap."""

    def __init__(self, generation, value, cap):
        self.generation = generation
        self.value = value
        self.cap = cap
        super().__init__(
            f"population {value} exceeds cap {cap} at generation {generation}"
        )


class CappedModeError(RuntimeError):
    """Per-individual simulation hit its population cap."""

    def __init__(self, generation, population, cap):
        self.generation = generation
        self.population = population
        self.cap = cap
        super().__init__(
            f"population {population} at generation {generation} exceeds the "
            f"per-individual cap {cap}; use mode='aggregate' for large populations"
        )


class DegenerateEstimatorError(ArithmeticError):
    """The least squares denominator is zero, so the estimator is undefined."""


class IndeterminateThetaError(ValueError):
    """The limiting theta cannot be classified; pass it explicitly."""


class QuadratureError(RuntimeError):
    def __init__(self, achieved, requested):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"quadrature did not converge: error estimate {achieved:.3g} "
            f"> requested {requested:.3g}"
        )


class ExperimentError(RuntimeError):
    """Too many replications failed for the summary to be meaningful."""


class DecompositionError(RuntimeError):
    """The three-part error decomposition does not reproduce V_k."""
