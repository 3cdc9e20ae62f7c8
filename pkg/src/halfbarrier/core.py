"""Small value types shared by every module."""

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant and particle mass.

    The defaults (hbar = 1, m = 1/2) are the plotting units used throughout.
    """

    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise InvalidArgumentError(
                f"hbar and mass must be > 0, got hbar={self.hbar}, mass={self.mass}")


DEFAULT_CONSTANTS = PhysicalConstants()


class BoundaryCondition(Enum):
    """Boundary condition on the wall / barrier.

    ``epsilon`` is the relative sign between the direct and the image (or
    diffracted) contributions: +1 for Neumann, -1 for Dirichlet.
    """

    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"

    @property
    def epsilon(self) -> int:
        return 1 if self is BoundaryCondition.NEUMANN else -1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidArgumentError(
                f"unknown boundary condition {value!r} (expected 'neumann' or 'dirichlet')"
            ) from None


NEUMANN = BoundaryCondition.NEUMANN
DIRICHLET = BoundaryCondition.DIRICHLET
