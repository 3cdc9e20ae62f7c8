"""Ready-made velocity fields for the integrator."""

import numpy as np

from .core import DEFAULT_CONSTANTS, BoundaryCondition
from .dynamics import Barrier, VelocityField
from .freespace import free_gaussian_velocity
from .halfline import (TIP_RADIUS, halfline_velocity_unchecked, planewave_velocity_unchecked)
from .quadrature import MAX_ORDER, MIN_TIME, HalflinePacket
from .wall import wall_velocity_2d


def constant_field(v):
    v = np.asarray(v, dtype=float)
    return VelocityField(lambda p, t: np.broadcast_to(v, p.shape).copy(), name="constant")


def free_propagator_field(x0):
    x0 = np.asarray(x0, dtype=float)
    return VelocityField(lambda p, t: (p - x0) / t, t_min=np.nextafter(0, 1), name="free propagator")


def free_gaussian_field(packet, consts=DEFAULT_CONSTANTS):
    return VelocityField(lambda p, t: free_gaussian_velocity(p, t, packet, consts), name="free packet")


def wall_propagator_field():
    """Neumann wall propagator: v = (0, y / t) for a source on the wall."""
    def batch(p, t):
        return np.stack([np.zeros(len(p)), p[:, 1] / t], axis=-1)
    return VelocityField(batch, Barrier.WALL, np.nextafter(0, 1), "wall propagator")


def wall_packet_field(packet, bc, consts=DEFAULT_CONSTANTS):
    bc = BoundaryCondition.parse(bc)

    def batch(p, t):
        return wall_velocity_2d(p, t, packet, bc, consts, strict=False)
    return VelocityField(batch, Barrier.WALL, 0.0, f"wall packet ({bc.value})")


def halfline_propagator_field(x0, bc, consts=DEFAULT_CONSTANTS):
    bc = BoundaryCondition.parse(bc)
    x0 = np.asarray(x0, dtype=float)
    return VelocityField(lambda p, t: halfline_velocity_unchecked(p, x0, t, bc, consts),
                         Barrier.HALFLINE, np.nextafter(0, 1), f"half-line propagator ({bc.value})")


def halfline_packet_field(packet, bc, order=None, consts=DEFAULT_CONSTANTS, nsigma=3.0,
                          max_order=MAX_ORDER):
    """Quadrature field; ``order=None`` uses the automatic per-point order."""
    hp = HalflinePacket(packet, bc, order, nsigma=nsigma, consts=consts, max_order=max_order)

    def batch(p, t):
        v = hp.velocity_unchecked(p, t)
        v[np.hypot(p[:, 0], p[:, 1]) < TIP_RADIUS] = np.nan
        return v
    return VelocityField(batch, Barrier.HALFLINE, MIN_TIME, f"half-line packet ({hp.bc.value})", hp)


def planewave_field(wave, bc, consts=DEFAULT_CONSTANTS):
    bc = BoundaryCondition.parse(bc)
    return VelocityField(lambda p, t: planewave_velocity_unchecked(p, wave, bc, consts)[0],
                         Barrier.HALFLINE, 0.0, f"plane wave ({bc.value})")
