"""Exception hierarchy.

Input problems derive from ``ValueError``; numerical failures derive from
``RouterNumericalError`` so the CLI can map them to distinct exit codes.
"""


class RouterError(Exception):
    """Base class for all package errors."""


class RouterNumericalError(RouterError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class DegenerateDenominator(RouterNumericalError):
    """Closed-form denominator vanished (fully decoupled resonant device)."""


class ConservationViolation(RouterNumericalError):
    """Routing probabilities do not sum to one."""


class UndefinedAsymmetry(RouterError, ValueError):
    """Coupling asymmetry requested with both rates zero."""


class SingularSystem(RouterNumericalError):
    """Laplace-domain emitter system is (numerically) singular."""


class StabilityViolation(RouterNumericalError):
    """Time stepping blew up or the step size violates the stability bound."""


class NotConverged(RouterNumericalError):
    """Emitters still hold excitation at the end of the simulation."""

    def __init__(self, message, occupation=None, result=None):
        super().__init__(message)
        self.occupation = occupation
        self.result = result


class NormDrift(RouterNumericalError):
    """Total single-excitation norm drifted during unitary evolution."""


class BudgetExhausted(RouterError):
    """Design search ran out of evaluations; ``result`` holds the best so far."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SchemaError(RouterError, ValueError):
    """Malformed configuration document."""


class UnknownParameter(RouterError, ValueError):
    """Sweep axis or frozen-parameter name does not address a parameter."""
