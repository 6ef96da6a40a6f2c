"""Exception hierarchy. The CLI maps each family onto an exit code."""


class FisherStabError(Exception):
    """Base class for all package errors."""


class ConfigError(FisherStabError, ValueError):
    """Malformed or out-of-range configuration."""


class WindowError(FisherStabError, ValueError):
    """Observation window is empty, inverted, or too narrow for the grid."""


class GainSynthesisError(FisherStabError):
    """The feedback law cannot be assembled."""


class GainConfigError(GainSynthesisError, ValueError):
    pass


class ResonanceError(GainSynthesisError, ValueError):
    """A shift constant coincides with an eigenvalue."""


class SingularGainError(GainSynthesisError):
    """Sum of the B_k matrices is numerically singular."""


class DegenerateInputError(GainSynthesisError, ValueError):
    pass


class LiftingError(FisherStabError):
    """The lifting boundary-value problem could not be solved."""


class BoundaryMismatchError(FisherStabError, ValueError):
    """State does not satisfy u(0) = 0 and u(1) = F(u)."""


class StepSizeError(FisherStabError, ValueError):
    pass


class SimulationError(FisherStabError):
    """Numerical failure while integrating the PDE."""


class InsufficientDataError(FisherStabError, ValueError):
    pass


class VerificationError(FisherStabError):
    """One or more verification checks failed."""
