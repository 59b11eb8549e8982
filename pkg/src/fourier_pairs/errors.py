"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` so the command-line front end can map
failures without a lookup table: configuration and precondition problems
exit with 2, verification failures with 3.
"""


class FourierPairsError(Exception):
    exit_code = 2


class ParameterError(FourierPairsError, ValueError):
    """Invalid numeric parameter (exponent, density, tolerance...)."""


class InsufficientDataError(FourierPairsError, ValueError):
    """Too few nodes or samples for a statistic or a fit."""


class RangeError(FourierPairsError, ValueError):
    """Point or interval outside the represented grid or node range."""


class DomainError(FourierPairsError, ValueError):
    """Input outside the mathematical domain of an operation."""


class AliasingError(FourierPairsError):
    """Function carries too much energy near the grid boundary."""


class ConditioningError(FourierPairsError):
    """A Gram or sample matrix is numerically singular."""


class DegenerateFrameError(FourierPairsError):
    """Lower frame constant too small for a meaningful pseudo-inverse."""


class ConfigurationError(FourierPairsError):
    """Inconsistent run configuration (empty node sets, bad basis size...)."""


class PreconditionError(FourierPairsError):
    """Documented precondition of an inequality check is not met."""


class ClassificationError(FourierPairsError):
    """Node pair has the wrong criticality for the requested construction."""


class KSmoothnessError(FourierPairsError):
    """Zero set does not match the ray densities of the K_p function."""


class TruncationError(FourierPairsError):
    """Truncated product does not stabilise; a larger radius is needed."""


class ConstructionError(FourierPairsError):
    """Internal consistency check of a constructed object failed."""


class NormalizationError(FourierPairsError):
    """Derivative of the product at a node underflows."""


class DivergenceError(FourierPairsError):
    """Residual iteration failed to contract."""

    exit_code = 3


class InputError(FourierPairsError, KeyError):
    """Sample keys do not match the interpolation basis nodes."""

    def __str__(self):
        return Exception.__str__(self)


class VerificationFailure(FourierPairsError):
    exit_code = 3


class DivergenceWarning(RuntimeWarning):
    """A weighted integral does not converge on the grid."""
