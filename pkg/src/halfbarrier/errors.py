"""Exception hierarchy.

Every error raised by the library derives from :class:`BohmError`.  The
numeric errors (nodes, singular points, failed convergence) also derive from
:class:`ArithmeticError` so the CLI can map them to a single exit category.
"""


class BohmError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(BohmError, ValueError):
    """Non-finite or otherwise malformed numeric input."""


class DomainError(BohmError, ValueError):
    """Argument outside the domain where the quantity is defined (t <= 0, y < 0, ...)."""


class RangeError(BohmError, ValueError):
    """Argument outside the documented evaluation range."""


class ContractError(BohmError, ValueError):
    """Caller violated a documented precondition."""


class ConfigError(BohmError, ValueError):
    """Invalid scenario or run configuration."""


class AsymptoticRangeError(BohmError, ValueError):
    """Point is not deep enough in the far field for the asymptotic formulas."""


class NodeError(BohmError, ArithmeticError):
    """The wave function (nearly) vanishes, so the Bohmian velocity is undefined.

    Attributes
    ----------
    modulus : float
        |psi| (or the modulus of the relevant interference factor) at the point.
    position : tuple or None
        Where the node was hit, if known.
    """

    def __init__(self, message, modulus, position=None):
        super().__init__(message)
        self.modulus = float(modulus)
        self.position = position


class SingularPointError(BohmError, ArithmeticError):
    """Evaluation at a hard singularity (the barrier tip)."""


class AccuracyError(BohmError, ArithmeticError):
    """Quadrature failed to converge; carries the last two estimates."""

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = tuple(estimates)
