"""Free particle: propagator, evolving Gaussian packets and their velocity fields.

The 2D packet is the product of two 1D packets with the same width, so
every 2D quantity here is assembled from the 1D formulas.
"""

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_CONSTANTS
from .errors import DomainError, InvalidArgumentError


@dataclass(frozen=True)
class GaussianPacket1D:
    center: float
    momentum: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError(f"packet width must be > 0, got {self.width}")


@dataclass(frozen=True)
class GaussianPacket2D:
    center: tuple
    momentum: tuple
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError(f"packet width must be > 0, got {self.width}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "momentum", tuple(float(p) for p in self.momentum))
        if len(self.center) != 2 or len(self.momentum) != 2:
            raise InvalidArgumentError("center and momentum must be 2-vectors")

    def axis(self, i):
        """The 1D factor along axis ``i`` (0 = x, 1 = y)."""
        return GaussianPacket1D(self.center[i], self.momentum[i], self.width)


def as_points(x):
    """Coerce to a float array of shape (..., 2)."""
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1:] != (2,):
        raise InvalidArgumentError(f"expected 2-vectors, got shape {pts.shape}")
    return pts


def _check_positive_time(t):
    if not t > 0:
        raise DomainError(f"propagator is singular as t -> 0+; need t > 0, got {t}")


def spreading_rate(width, consts=DEFAULT_CONSTANTS):
    """kappa = hbar / (2 m sigma^2); the dimensionless spreading is kappa * t."""
    return consts.hbar / (2.0 * consts.mass * width**2)


def free_propagator_1d(x, x0, t, consts=DEFAULT_CONSTANTS):
    """sqrt(m / 2 pi i hbar t) * exp(i m (x - x0)^2 / 2 hbar t)."""
    _check_positive_time(t)
    m, hbar = consts.mass, consts.hbar
    pref = np.sqrt(m / (2j * np.pi * hbar * t))
    return pref * np.exp(1j * m * (np.asarray(x) - x0) ** 2 / (2 * hbar * t))


def free_propagator(x, x0, t, consts=DEFAULT_CONSTANTS):
    """Free 2D propagator K(x, t | x0, 0) = (m / 2 pi i hbar t) exp(i m |x - x0|^2 / 2 hbar t)."""
    _check_positive_time(t)
    d = as_points(x) - as_points(x0)
    m, hbar = consts.mass, consts.hbar
    out = m / (2j * np.pi * hbar * t) * np.exp(1j * m * np.sum(d * d, axis=-1) / (2 * hbar * t))
    return complex(out) if np.ndim(out) == 0 else out


def free_propagator_velocity(x, x0, t):
    """Velocity field of the free propagator, (x - x0) / t: straight rays from x0."""
    _check_positive_time(t)
    return (as_points(x) - as_points(x0)) / t


def free_gaussian_psi_1d(x, t, packet, consts=DEFAULT_CONSTANTS):
    """Free evolution of the normalized 1D Gaussian packet.

    Written so that t = 0 needs no special case: with tau = kappa t,

        psi = exp(i p xbar / hbar) / ((2 pi sigma^2)^(1/4) sqrt(1 + i tau))
              * exp([-(x - xbar)^2 / 4 sigma^2 + i p (x - xbar) / hbar
                     - i p^2 t / (2 m hbar)] / (1 + i tau)).
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    m, hbar = consts.mass, consts.hbar
    sigma, xbar, p = packet.width, packet.center, packet.momentum
    one_itau = 1.0 + 1j * spreading_rate(sigma, consts) * t
    d = np.asarray(x, dtype=float) - xbar
    expo = (-(d**2) / (4 * sigma**2) + 1j * p * d / hbar - 1j * p**2 * t / (2 * m * hbar)) / one_itau
    out = (np.exp(1j * p * xbar / hbar + expo)
           / ((2 * np.pi * sigma**2) ** 0.25 * np.sqrt(one_itau)))
    return complex(out) if np.ndim(out) == 0 else out


def free_gaussian_psi(x, t, packet, consts=DEFAULT_CONSTANTS):
    """2D packet as the product of its x and y factors."""
    pts = as_points(x)
    return (free_gaussian_psi_1d(pts[..., 0], t, packet.axis(0), consts)
            * free_gaussian_psi_1d(pts[..., 1], t, packet.axis(1), consts))


def free_gaussian_density_1d(x, t, packet, consts=DEFAULT_CONSTANTS):
    """|psi|^2: a normalized Gaussian centred at xbar + p t / m with width sigma(t)."""
    sig_t = packet_width(t, packet.width, consts)
    c = packet.center + packet.momentum * t / consts.mass
    return np.exp(-((np.asarray(x) - c) ** 2) / (2 * sig_t**2)) / np.sqrt(2 * np.pi * sig_t**2)


def packet_width(t, width, consts=DEFAULT_CONSTANTS):
    """sigma(t) = sigma |1 + i hbar t / 2 m sigma^2|."""
    return width * np.hypot(1.0, spreading_rate(width, consts) * t)


def free_gaussian_velocity_1d(x, t, packet, consts=DEFAULT_CONSTANTS):
    """[p/m + kappa^2 t (x - xbar)] / (1 + kappa^2 t^2).

    This is the usual (tau^2 / t)-form with the 1/t cancelled, so t = 0
    returns p/m exactly.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    k = spreading_rate(packet.width, consts)
    d = np.asarray(x, dtype=float) - packet.center
    return (packet.momentum / consts.mass + k * k * t * d) / (1.0 + (k * t) ** 2)


def free_gaussian_velocity(x, t, packet, consts=DEFAULT_CONSTANTS):
    """Bohmian velocity of the free 2D Gaussian packet."""
    pts = as_points(x)
    vx = free_gaussian_velocity_1d(pts[..., 0], t, packet.axis(0), consts)
    vy = free_gaussian_velocity_1d(pts[..., 1], t, packet.axis(1), consts)
    return np.stack([vx, vy], axis=-1)


def free_gaussian_trajectory(x_start, t_start, t, packet, consts=DEFAULT_CONSTANTS):
    """Closed-form Bohmian trajectory: the offset from the packet centre scales with sigma(t)."""
    pts = as_points(x_start)
    c = np.asarray(packet.center)
    v = np.asarray(packet.momentum) / consts.mass
    scale = packet_width(t, packet.width, consts) / packet_width(t_start, packet.width, consts)
    return c + v * t + (pts - c - v * t_start) * scale
