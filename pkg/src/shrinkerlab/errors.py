"""Exception hierarchy used across the package."""


class ShrinkerLabError(Exception):
    """Base class for all package errors."""


class ParameterError(ShrinkerLabError):
    """Invalid construction parameters (dimension, truncation degree, ...)."""


class DegenerateMetricError(ShrinkerLabError):
    """A perturbed metric failed positive definiteness on the grid."""


class PerturbationTooLargeError(ShrinkerLabError):
    """Input perturbation exceeds the validity threshold of the caller."""


class ResonanceError(ShrinkerLabError):
    """An elliptic solve hit (or nearly hit) an eigenvalue of its operator."""


class SpectralClearanceError(ShrinkerLabError):
    """A decay target sits too close to the spectrum."""


class NonConvergenceError(ShrinkerLabError):
    """An iteration failed to reach its tolerance.

    Carries the last measured residual in ``residual`` when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GaugeDegenerationError(ShrinkerLabError):
    """A gauge map lost strict monotonicity."""


class CapabilityError(ShrinkerLabError):
    """The requested computation is outside the supported background class."""


class StepSizeUnderflowError(ShrinkerLabError):
    """Adaptive time stepping shrank dt below the configured floor."""


class ContractionFailureError(ShrinkerLabError):
    """The fixed-point smallness gate could not be satisfied."""


class ConfigError(ShrinkerLabError):
    """Experiment configuration failed schema validation."""
