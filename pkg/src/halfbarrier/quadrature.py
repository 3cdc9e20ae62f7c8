"""Gaussian packets diffracted by the half-line, by Gauss-Legendre convolution.

The evolved state is the integral of the propagator against the initial
packet over a finite box around its centre,

    psi(x, t) = int K(x, t | x0, 0) psi_0(x0) d^2 x0,

done with a tensor-product Gauss-Legendre rule.  psi and grad psi are summed
in one pass of a compiled kernel, together with sum |K psi_0 w|, which is the
scale used to decide whether |psi| is a node (relative cancellation).
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DEFAULT_CONSTANTS, BoundaryCondition
from .errors import AccuracyError, ContractError, DomainError, InvalidArgumentError, NodeError
from .freespace import GaussianPacket2D, as_points
from .halfline import TIP_RADIUS, SingularPointError, packet_sums

DEFAULT_ORDER = 64
MAX_ORDER = 256
DEFAULT_RTOL = 1e-6
MIN_TIME = 1e-3
BOX_SIGMAS = 3.0
NODE_RTOL = 1e-12
CONV_FLOOR = 1e-6
ORDER_LADDER = np.array([16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048])


class BarrierOverlapWarning(UserWarning):
    """The truncation box of an initial packet straddles the barrier."""


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule of a given order on ``interval``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple


@lru_cache(maxsize=None)
def _reference_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order, a=-1.0, b=1.0):
    """Nodes and weights on [a, b]; exact for polynomials of degree < 2 * order."""
    if int(order) != order or order < 2:
        raise ContractError(f"order must be an integer >= 2, got {order}")
    if not b > a:
        raise ContractError(f"need a < b, got [{a}, {b}]")
    x, w = _reference_rule(int(order))
    half = 0.5 * (b - a)
    return QuadratureRule(int(order), 0.5 * (a + b) + half * x, half * w, (a, b))


@dataclass(frozen=True)
class TruncatedSupport:
    """Axis-aligned box [x_lo, x_hi] x [y_lo, y_hi] carrying the initial packet."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    @classmethod
    def around(cls, packet, nsigma=BOX_SIGMAS):
        cx, cy = packet.center
        d = nsigma * packet.width
        return cls(cx - d, cx + d, cy - d, cy + d)

    def crosses_barrier(self):
        return self.y_lo < 0 < self.y_hi and self.x_lo < 0

    def nodes(self, order):
        """Tensor-product nodes (n^2, 2) and weights (n^2,)."""
        gx = gauss_legendre(order, self.x_lo, self.x_hi)
        gy = gauss_legendre(order, self.y_lo, self.y_hi)
        X, Y = np.meshgrid(gx.nodes, gy.nodes, indexing="ij")
        W = np.outer(gx.weights, gy.weights)
        return np.stack([X.ravel(), Y.ravel()], axis=-1), W.ravel()


def initial_psi(x, packet, consts=DEFAULT_CONSTANTS):
    """psi_0 = (2 pi sigma^2)^-1 exp(-|x - xbar|^2 / 4 sigma^2 + i p . x / hbar).

    The prefactor is kept as given rather than L2-normalised; Bohmian
    velocities do not depend on it.
    """
    pts = as_points(x)
    d = pts - np.asarray(packet.center)
    sig2 = packet.width**2
    return np.exp(-np.sum(d * d, axis=-1) / (4 * sig2)
                  + 1j * (pts @ np.asarray(packet.momentum)) / consts.hbar) / (2 * np.pi * sig2)


def _overlap_mass(packet, box):
    """Fraction of sum |psi_0|^2 in the box that sits across the barrier from the centre."""
    pts, w = box.nodes(48)
    dens = np.abs(initial_psi(pts, packet, DEFAULT_CONSTANTS)) ** 2 * w
    side = np.sign(packet.center[1]) or 1.0
    across = (pts[:, 0] < 0) & (np.sign(pts[:, 1]) == -side)
    return float(dens[across].sum() / dens.sum())


class HalflinePacket:
    """Gaussian packet evolving in the presence of the half-line barrier.

    Parameters
    ----------
    packet : GaussianPacket2D
        Initial packet (centre, momentum, width sigma).
    bc : BoundaryCondition or str
    order : int, optional
        Gauss-Legendre points per axis.  ``None`` picks the order per point
        and time from the oscillation of the integrand (see
        :meth:`required_order`).
    nsigma : float
        Half-width of the truncation box in units of sigma.
    max_order : int
        Cap for the automatic order.  Very early times need more than the
        default; the cost grows with its square.
    """

    def __init__(self, packet, bc, order=None, nsigma=BOX_SIGMAS, consts=DEFAULT_CONSTANTS,
                 max_order=MAX_ORDER):
        if not isinstance(packet, GaussianPacket2D):
            raise InvalidArgumentError("packet must be a GaussianPacket2D")
        self.packet = packet
        self.bc = BoundaryCondition.parse(bc)
        if order is not None and (int(order) != order or order < 2):
            raise InvalidArgumentError(f"order must be an integer >= 2, got {order}")
        self.order = None if order is None else int(order)
        if max_order not in ORDER_LADDER:
            raise InvalidArgumentError(f"max_order must be one of {ORDER_LADDER.tolist()}")
        self.max_order = int(max_order)
        self.consts = consts
        self.support = TruncatedSupport.around(packet, nsigma)
        if self.support.crosses_barrier():
            mass = _overlap_mass(packet, self.support)
            warnings.warn(f"initial packet box straddles the barrier; {mass:.3g} of its "
                          "mass lies across it and is propagated unchanged",
                          BarrierOverlapWarning, stacklevel=2)
        self._cache = {}

    def _sources(self, order):
        if order not in self._cache:
            nodes, w = self.support.nodes(order)
            coef = w * initial_psi(nodes, self.packet, self.consts)
            self._cache[order] = (np.ascontiguousarray(nodes[:, 0]), np.ascontiguousarray(nodes[:, 1]),
                                  np.ascontiguousarray(coef))
        return self._cache[order]

    def required_order(self, pts, t):
        """Per-point automatic order and whether the cap was hit.

        Besides the packet itself, the integrand carries the waves scattered
        by the tip, whose phase m (r + r0)^2 / 2 hbar t changes at a rate
        m (r + r0) / hbar t across the box.  The rule gets two points per
        oscillation on top of a base of 16, rounded up to a fixed ladder.
        """
        A = self.consts.mass / (self.consts.hbar * t)
        sp = self.support
        span = max(sp.x_hi - sp.x_lo, sp.y_hi - sp.y_lo)
        r0max = max(math.hypot(x, y) for x in (sp.x_lo, sp.x_hi) for y in (sp.y_lo, sp.y_hi))
        k = math.hypot(*self.packet.momentum) / self.consts.hbar
        waves = (A * (np.hypot(pts[:, 0], pts[:, 1]) + r0max) + k) * span / (2 * math.pi)
        need = 16 + 2 * waves
        ladder = ORDER_LADDER[ORDER_LADDER <= self.max_order]
        idx = np.searchsorted(ladder, need)
        over = idx >= len(ladder)
        return ladder[np.minimum(idx, len(ladder) - 1)], over

    def orders(self, pts, t):
        """Order used for each point: ``self.order`` if fixed, else the automatic one."""
        if self.order is not None:
            return np.full(len(pts), self.order)
        orders, over = self.required_order(pts, t)
        if np.any(over):
            raise AccuracyError(f"t={t} is too early for this packet: the rule would need more "
                                f"than {self.max_order} points per axis", [])
        return orders

    def sums(self, pts, t, order=None):
        """(psi, dpsi/dx, dpsi/dy, scale) at (n, 2) points; no checks.

        ``order`` forces one rule for every point; otherwise :meth:`orders`.
        """
        pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, 2)
        orders = np.full(len(pts), order) if order else self.orders(pts, t)
        out = (np.empty(len(pts), complex), np.empty(len(pts), complex),
               np.empty(len(pts), complex), np.empty(len(pts)))
        for o in np.unique(orders):
            sel = orders == o
            nx, ny, coef = self._sources(int(o))
            part = packet_sums(pts[sel, 0].copy(), pts[sel, 1].copy(), float(t), nx, ny, coef,
                               float(self.bc.epsilon), self.consts.mass, self.consts.hbar)
            for dst, src in zip(out, part):
                dst[sel] = src
        return out

    def _check(self, pts, t):
        if not t >= MIN_TIME:
            raise DomainError(f"quadrature evaluation needs t >= {MIN_TIME}, got {t}")
        if np.any(np.hypot(pts[:, 0], pts[:, 1]) < TIP_RADIUS):
            raise SingularPointError("field is singular at the barrier tip")

    def _start_order(self, pts, t):
        if self.order is not None:
            return self.order
        orders, _ = self.required_order(pts, t)
        return int(max(DEFAULT_ORDER, orders.max()))

    def _converged(self, pts, t, rtol, max_order, which):
        """Double the order until ``which`` of the sums changes by <= rtol (relative).

        Values below CONV_FLOOR times the cancellation-free scale are judged
        against that floor, so points at or next to a node can converge.
        """
        max_order = max_order or max(self.max_order, self.order or 0)
        o = self._start_order(pts, t)
        prev = self.sums(pts, t, o)
        estimates = []
        while 2 * o <= max_order:
            o *= 2
            cur = self.sums(pts, t, o)
            num = max(np.max(np.abs(cur[i] - prev[i])) for i in which)
            # near a node |psi| is a cancellation; measure against the scale instead
            den = max(max(np.max(np.abs(cur[i])) for i in which), CONV_FLOOR * np.max(cur[3]))
            err = num / den if den > 0 else num
            estimates.append((o, float(err)))
            if err <= rtol:
                return cur
            prev = cur
        raise AccuracyError(f"quadrature did not reach rtol={rtol} by order {max_order}", estimates)

    def psi(self, x, t, adaptive=True, rtol=DEFAULT_RTOL, max_order=None):
        """Wave function at points ``x`` (shape (..., 2)).

        With ``adaptive`` the order is doubled (from 64, or from ``order``
        if one was given) until successive results agree to ``rtol``;
        otherwise a single sum at the per-point order.
        """
        pts = as_points(x)
        flat = pts.reshape(-1, 2)
        self._check(flat, t)
        s = self._converged(flat, t, rtol, max_order, (0,)) if adaptive else self.sums(flat, t)
        out = s[0].reshape(pts.shape[:-1])
        return out[()] if out.ndim == 0 else out

    def grad_psi(self, x, t, adaptive=True, rtol=DEFAULT_RTOL, max_order=None):
        """(dpsi/dx, dpsi/dy); same conventions as :meth:`psi`."""
        pts = as_points(x)
        flat = pts.reshape(-1, 2)
        self._check(flat, t)
        s = self._converged(flat, t, rtol, max_order, (1, 2)) if adaptive else self.sums(flat, t)
        gx, gy = s[1].reshape(pts.shape[:-1]), s[2].reshape(pts.shape[:-1])
        if gx.ndim == 0:
            return gx[()], gy[()]
        return gx, gy

    def velocity_unchecked(self, pts, t):
        """Velocity for (n, 2) points at the per-point order; NaN rows at nodes and the tip."""
        psi, gx, gy, scale = self.sums(pts, t)
        hm = self.consts.hbar / self.consts.mass
        with np.errstate(divide="ignore", invalid="ignore"):
            v = hm * np.stack([(gx / psi).imag, (gy / psi).imag], axis=-1)
        bad = (np.abs(psi) < NODE_RTOL * scale) | ~np.isfinite(v).all(axis=1)
        v[bad] = np.nan
        return v

    def velocity(self, x, t, adaptive=False, rtol=DEFAULT_RTOL, max_order=None):
        """Bohmian velocity (hbar/m) Im(grad psi / psi).

        Uses the per-point order by default, which is what integrators see;
        pass ``adaptive=True`` for a convergence-checked point evaluation.

        Raises
        ------
        NodeError
            If |psi| < 1e-12 sum |K psi_0 w| (cancellation to rounding level).
        """
        pts = as_points(x)
        flat = pts.reshape(-1, 2)
        self._check(flat, t)
        if adaptive:
            psi, gx, gy, scale = self._converged(flat, t, rtol, max_order, (0, 1, 2))
        else:
            psi, gx, gy, scale = self.sums(flat, t)
        small = np.abs(psi) < NODE_RTOL * scale
        if np.any(small):
            i = int(np.flatnonzero(small)[0])
            raise NodeError("wave function vanishes to quadrature precision", float(abs(psi[i])),
                            tuple(flat[i]))
        hm = self.consts.hbar / self.consts.mass
        v = hm * np.stack([(gx / psi).imag, (gy / psi).imag], axis=-1)
        return v.reshape(pts.shape)

    def density(self, x, t, adaptive=False):
        return np.abs(self.psi(x, t, adaptive=adaptive)) ** 2


def packet_psi(x, t, packet, bc, order=None, consts=DEFAULT_CONSTANTS, **kw):
    """psi(x, t) for an initial Gaussian ``packet``; adaptive by default (rtol 1e-6)."""
    return HalflinePacket(packet, bc, order, consts=consts).psi(x, t, **kw)


def packet_grad_psi(x, t, packet, bc, order=None, consts=DEFAULT_CONSTANTS, **kw):
    return HalflinePacket(packet, bc, order, consts=consts).grad_psi(x, t, **kw)


def packet_velocity(x, t, packet, bc, order=None, consts=DEFAULT_CONSTANTS, **kw):
    return HalflinePacket(packet, bc, order, consts=consts).velocity(x, t, **kw)
