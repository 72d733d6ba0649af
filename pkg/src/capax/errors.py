"""Exception types raised across the package."""


class CapaxError(Exception):
    """Base class for all package errors."""


class InvalidParameter(CapaxError, ValueError):
    pass


class InvalidInput(CapaxError, ValueError):
    """A discrete input distribution violates its invariants."""


class NonConvergence(CapaxError, RuntimeError):
    pass


class NonFiniteEvaluation(CapaxError, ArithmeticError):
    """An integrand returned NaN or infinity at a quadrature node."""


class NormalizationFailure(CapaxError, ValueError):
    pass


class CrossCheckFailure(CapaxError, ArithmeticError):
    """Two independent routes to the same quantity disagree."""


class CertificateNeverPassed(CapaxError, RuntimeError):
    """The outer solver loop reached its support-size limit uncertified.

    The best result found so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
