"""Particle above a straight wall at y = 0 (method of images).

The problem separates: a free Gaussian along x times a symmetrised
(Neumann) or antisymmetrised (Dirichlet) Gaussian along y >= 0.  With
tau = hbar t / (2 m sigma^2) the evolved y-factor is

    psi(y, t) = R(t) exp(i phi(y, t)) (exp(i s/hbar) + eps exp(-i s/hbar)),

    R   = a exp(i p ybar / hbar) / sqrt(sigma (1 + i tau))
    phi = m / (2 hbar t) [(y^2 + ybar^2) - (y^2 + (ybar + p t/m)^2) / (1 + i tau)]
    s   = (p y - i tau m ybar y / t) / (1 + i tau)

with eps = +1 (Neumann) or -1 (Dirichlet).
"""

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_CONSTANTS, BoundaryCondition
from .errors import DomainError, InvalidArgumentError, NodeError
from .freespace import (GaussianPacket1D, _check_positive_time, as_points,
                        free_gaussian_psi_1d, free_gaussian_velocity_1d, spreading_rate)
from .specfun import erf_complex

NODE_TOL = 1e-12


@dataclass(frozen=True)
class WallPacket1D:
    """Gaussian centred at ``center`` > 0 plus its mirror image at -center."""

    center: float
    momentum: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError(f"packet width must be > 0, got {self.width}")
        if not self.center > 0:
            raise InvalidArgumentError(f"wall packet centre must be > 0, got {self.center}")


@dataclass(frozen=True)
class WallPacket2D:
    """Free Gaussian along x times a wall packet along y, common width."""

    center: tuple
    momentum: tuple
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "momentum", tuple(float(p) for p in self.momentum))
        # validates the y-factor
        self.y_factor

    @property
    def x_factor(self):
        return GaussianPacket1D(self.center[0], self.momentum[0], self.width)

    @property
    def y_factor(self):
        return WallPacket1D(self.center[1], self.momentum[1], self.width)


@dataclass(frozen=True)
class WallPacketFactors:
    R: complex
    phi: complex
    s: complex


def norm_a(packet, bc=BoundaryCondition.NEUMANN, consts=DEFAULT_CONSTANTS):
    """Normalisation constant a making int_0^inf |psi_0|^2 dy = 1.

    The overlap of the Gaussian with its mirror image contributes
    exp(-ybar^2 / 2 sigma^2 - 2 (p sigma / hbar)^2), with sign eps.
    """
    eps = BoundaryCondition.parse(bc).epsilon
    overlap = np.exp(-packet.center**2 / (2 * packet.width**2)
                     - 2 * (packet.momentum * packet.width / consts.hbar) ** 2)
    return (2 * np.pi) ** -0.25 / np.sqrt(1.0 + eps * overlap)


def closed_form_norm_a(momentum, width, hbar=1.0):
    """Closed form (2 pi)^(-1/4) [1 + e^{-2(p sigma/hbar)^2}(1 - Re erf(-2i p sigma/hbar))]^(-1/2).

    Kept for reference: it has no dependence on the packet centre, and the
    Re erf term vanishes identically for real arguments.  It only normalises
    the packet when the overlap with the mirror image is negligible *and*
    p sigma / hbar is large; :func:`norm_a` is the exact constant.
    """
    e = erf_complex(-2j * momentum * width / hbar)
    return (2 * np.pi) ** -0.25 / np.sqrt(
        1.0 + np.exp(-2 * (momentum * width / hbar) ** 2) * (1.0 - e.real))


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("the wall occupies y < 0; need y >= 0")
    return y


def wall_initial_psi(y, packet, bc, consts=DEFAULT_CONSTANTS):
    """psi_0(y) = (a / sqrt(sigma)) [g(y) + eps g(-y)], g the displaced Gaussian with momentum p."""
    eps = BoundaryCondition.parse(bc).epsilon
    y = _check_y(y)
    sig, yb, p, hbar = packet.width, packet.center, packet.momentum, consts.hbar
    direct = np.exp(-((y - yb) ** 2) / (4 * sig**2) + 1j * p * y / hbar)
    image = np.exp(-((y + yb) ** 2) / (4 * sig**2) - 1j * p * y / hbar)
    out = norm_a(packet, bc, consts) / np.sqrt(sig) * (direct + eps * image)
    return complex(out) if out.ndim == 0 else out


def wall_propagator_1d(y, z, t, bc, consts=DEFAULT_CONSTANTS):
    """K(y, t | z, 0) = sqrt(m / 2 pi i hbar t) [e^{i m (y-z)^2 / 2 hbar t} + eps e^{i m (y+z)^2 / 2 hbar t}]."""
    eps = BoundaryCondition.parse(bc).epsilon
    _check_positive_time(t)
    y = _check_y(y)
    z = _check_y(z)
    m, hbar = consts.mass, consts.hbar
    c = 1j * m / (2 * hbar * t)
    out = np.sqrt(m / (2j * np.pi * hbar * t)) * (np.exp(c * (y - z) ** 2) + eps * np.exp(c * (y + z) ** 2))
    return complex(out) if out.ndim == 0 else out


def wall_packet_factors(y, t, packet, bc=BoundaryCondition.NEUMANN, consts=DEFAULT_CONSTANTS):
    """R(t), phi(y, t) and s(y, t) for t > 0."""
    _check_positive_time(t)
    m, hbar = consts.mass, consts.hbar
    sig, yb, p = packet.width, packet.center, packet.momentum
    one_itau = 1.0 + 1j * spreading_rate(sig, consts) * t
    R = norm_a(packet, bc, consts) * np.exp(1j * p * yb / hbar) / np.sqrt(sig * one_itau)
    y = np.asarray(y, dtype=float)
    phi = m / (2 * hbar * t) * ((y**2 + yb**2) - (y**2 + (yb + p * t / m) ** 2) / one_itau)
    return WallPacketFactors(complex(R), phi, _s(y, t, packet, consts))


def _s(y, t, packet, consts):
    k = spreading_rate(packet.width, consts)
    return (packet.momentum - 1j * k * consts.mass * packet.center) * y / (1.0 + 1j * k * t)


def wall_packet_psi(y, t, packet, bc, consts=DEFAULT_CONSTANTS):
    """Evolved wall packet; t = 0 gives :func:`wall_initial_psi`.

    The two exponents i phi +- i s / hbar are formed directly (they are the
    exponents of the direct and image Gaussians), which keeps the evaluation
    finite at t = 0 and free of overflow in exp(+-i s / hbar).
    """
    bc = BoundaryCondition.parse(bc)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    y = _check_y(y)
    m, hbar = consts.mass, consts.hbar
    sig, yb, p = packet.width, packet.center, packet.momentum
    one_itau = 1.0 + 1j * spreading_rate(sig, consts) * t
    drift = 1j * p**2 * t / (2 * m * hbar)
    dm = y - yb
    dp = y + yb
    e_direct = (-(dm**2) / (4 * sig**2) + 1j * p * dm / hbar - drift) / one_itau
    e_image = (-(dp**2) / (4 * sig**2) - 1j * p * dp / hbar - drift) / one_itau
    R = norm_a(packet, bc, consts) * np.exp(1j * p * yb / hbar) / np.sqrt(sig * one_itau)
    out = R * (np.exp(e_direct) + bc.epsilon * np.exp(e_image))
    return complex(out) if out.ndim == 0 else out


def _interference_ratio(s, eps, hbar):
    """(e^{is/h} - eps e^{-is/h}) / (e^{is/h} + eps e^{-is/h}) and |normalised denominator|.

    The dominant exponential is factored out so nothing overflows.
    """
    w = 2j * s / hbar
    big = w.real >= 0
    q = np.exp(np.where(big, -w, w))
    num = np.where(big, 1.0 - eps * q, q - eps)
    den = np.where(big, 1.0 + eps * q, q + eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den, np.abs(den)


def wall_velocity_y(y, t, packet, bc, consts=DEFAULT_CONSTANTS, strict=True):
    """Normal (y) component of the wall-packet velocity field.

    With ``strict=False`` node points come back as NaN instead of raising.
    """
    bc = BoundaryCondition.parse(bc)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    y = np.asarray(y, dtype=float)
    if strict:
        _check_y(y)
    m = consts.mass
    k = spreading_rate(packet.width, consts)
    kt = k * t
    ratio, den = _interference_ratio(_s(y, t, packet, consts), bc.epsilon, consts.hbar)
    spread = k * kt * y / (1.0 + kt * kt)
    coef = (packet.momentum / m - 1j * k * packet.center) / (1.0 + 1j * kt)
    v = spread + np.real(coef * ratio)
    bad = (den < NODE_TOL) | (y < 0) | ~np.isfinite(v)
    if np.any(bad):
        if strict:
            i = np.flatnonzero(np.atleast_1d(bad))[0]
            yy = float(np.atleast_1d(y)[i])
            psi = abs(wall_packet_psi(max(yy, 0.0), t, packet, bc, consts))
            raise NodeError(f"wave function vanishes at y={yy:g} (Dirichlet node)", psi, (yy,))
        v = np.where(bad, np.nan, v)
    return float(v) if np.ndim(v) == 0 else v


def wall_velocity_2d(x, t, packet, bc, consts=DEFAULT_CONSTANTS, strict=True):
    """Velocity field (v_x, v_y) of the 2D wall packet at points ``x`` (shape (..., 2))."""
    pts = as_points(x)
    vx = free_gaussian_velocity_1d(pts[..., 0], t, packet.x_factor, consts)
    vy = wall_velocity_y(pts[..., 1], t, packet.y_factor, bc, consts, strict=strict)
    return np.stack(np.broadcast_arrays(vx, vy), axis=-1)


def wall_psi_2d(x, t, packet, bc, consts=DEFAULT_CONSTANTS):
    pts = as_points(x)
    return (free_gaussian_psi_1d(pts[..., 0], t, packet.x_factor, consts)
            * wall_packet_psi(pts[..., 1], t, packet.y_factor, bc, consts))


def wall_propagator_velocity(y, t):
    """Velocity of the Neumann wall propagator taken as a state: y / t."""
    _check_positive_time(t)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("need y > 0")
    out = y / t
    return float(out) if out.ndim == 0 else out
