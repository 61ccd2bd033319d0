"""Exception hierarchy for hjsolve."""


class HJError(Exception):
    """Base class for all hjsolve errors."""


class ModelEvaluationError(HJError):
    """A Hamiltonian model returned a non-finite value."""


class ConjugationError(HJError):
    """Newton iteration for the Legendre transform failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConstantsError(HJError):
    """Scheme constants could not be computed (non-finite probe)."""


class ConfigurationError(HJError):
    """Invalid configuration, e.g. the CFL condition is violated."""


class StabilityError(HJError):
    """Discrete gradient left the a priori bound."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class OutOfDomainError(HJError):
    """A space-time query lies outside the solved region or horizon."""


class OutOfConeError(OutOfDomainError):
    """A query needs data outside the stored dependence cone."""


class InputError(HJError):
    """Invalid initial data."""


class NegativeProbabilityError(HJError):
    """A control is outside the admissible box so some transition probability is negative."""


class EnumerationTooLargeError(HJError):
    """Exact path enumeration would exceed the configured cap; use Monte Carlo."""


class UnsupportedOracleError(HJError):
    """The exact oracle only supports (x, t)-independent Hamiltonians."""


class AmbiguousCharacteristicError(HJError):
    """The query point is not regular: several minimizers were found."""

    def __init__(self, message, minimizers=None):
        super().__init__(message)
        self.minimizers = minimizers


class ContractionError(HJError):
    """The L1-contraction inequality failed at some level."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level
