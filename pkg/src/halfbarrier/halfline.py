"""Half-line barrier {y = 0, x <= 0}: propagator, velocity fields, far field, plane waves.

Polar angles live in [-pi, pi), so the barrier is the seam theta = +-pi and
the two faces of the barrier sit on different sheets.  With
A = m / (hbar t), the propagator is

    K = (A / 2 pi i) exp(i A (r + r0)^2 / 2) [F(u1) + eps F(u2)],
    u1 =  sqrt(2 A r r0) cos((theta - theta0) / 2),
    u2 = -sqrt(2 A r r0) cos((theta + theta0) / 2),

eps = +1 for Neumann and -1 for Dirichlet.  Differentiating with
F'(u) = -2iu F(u) + exp(-i pi/4)/sqrt(pi) gives the gradient

    grad K = (A / 2 pi i) exp(i A (r + r0)^2 / 2) {
        i A [(x - x0) F(u1) + eps (x - x0') F(u2)]
        + exp(-i pi/4) sqrt(A r0 / (2 pi r)) [cb - eps ca, sb - eps sa] }

where x0' = (x0, -y0), ca, sa = cos, sin((theta - theta0)/2) and cb, sb the
same for (theta + theta0)/2.  The plane-wave (Sommerfeld) states have the
same structure with A (r + r0)^2 / 2 -> k0 r.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .core import DEFAULT_CONSTANTS, BoundaryCondition
from .errors import (AsymptoticRangeError, ContractError, DomainError, NodeError,
                     SingularPointError)
from .freespace import _check_positive_time, as_points
from .specfun import fresnel_F_scalar

TIP_RADIUS = 1e-10
NODE_TOL = 1e-12
BARRIER_TOL = 1e-12

_SQRT_PI = math.sqrt(math.pi)
_EM_IPI4 = cmath.exp(-0.25j * math.pi)


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    @property
    def cartesian(self):
        return np.array([self.r * math.cos(self.theta), self.r * math.sin(self.theta)])


@dataclass(frozen=True)
class DiffractionArguments:
    u1: float
    u2: float


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave of wavenumber k0 > 0 and incidence angle theta0.

    theta0 is measured clockwise: the wave arrives from the direction at
    polar angle -theta0 and travels along k = -k0 (cos theta0, -sin theta0),
    so theta0 = pi/2 is a wave moving in +y that reflects off the lower face
    of the barrier.  The Sommerfeld formulas below are written with the
    counter-clockwise angle ``phi0 = -theta0``.
    """

    k0: float
    theta0: float

    def __post_init__(self):
        if not self.k0 > 0:
            raise DomainError(f"k0 must be > 0, got {self.k0}")

    @property
    def phi0(self):
        """Polar angle of the direction the wave comes from, in [-pi, pi)."""
        p = -self.theta0
        return -math.pi if p >= math.pi else p

    @property
    def k(self):
        return -self.k0 * np.array([math.cos(self.phi0), math.sin(self.phi0)])

    @property
    def k_mirror(self):
        kx, ky = self.k
        return np.array([kx, -ky])


@dataclass(frozen=True)
class PlaneWaveArguments:
    k0: float
    theta0: float
    a1: float
    a2: float


class FarFieldRegion(Enum):
    I = "I"  # noqa: E741  scattered wave only
    II = "II"  # incident + scattered
    III = "III"  # incident + reflected
    BOUNDARY = "optical-boundary"


@numba.njit(cache=True)
def _angle(x, y):
    th = math.atan2(y, x)
    if th >= math.pi:
        th = -math.pi
    return th


def polar(x):
    """Polar coordinates with theta in [-pi, pi); accepts a 2-vector."""
    x = as_points(x)
    if x.ndim != 1:
        raise ContractError("polar() takes a single 2-vector")
    return PolarPoint(math.hypot(x[0], x[1]), _angle(x[0], x[1]))


def on_barrier(x):
    """True for points with |y| < 1e-12 and x < 0."""
    pts = as_points(x)
    return (np.abs(pts[..., 1]) < BARRIER_TOL) & (pts[..., 0] < 0)


@numba.njit(cache=True, nogil=True)
def _kernel(x, y, x0, y0, r0, ch0, sh0, t, eps, m, hbar, grad):
    """K, dK/dx, dK/dy and |F(u1) + eps F(u2)| at one (point, source) pair.

    ``ch0``, ``sh0`` are cos, sin(theta0 / 2).  Returns NaNs at the tip.
    """
    r = math.hypot(x, y)
    th = _angle(x, y)
    ch = math.cos(0.5 * th)
    sh = math.sin(0.5 * th)
    A = m / (hbar * t)
    root = math.sqrt(2.0 * A * r * r0)
    ca = ch * ch0 + sh * sh0  # cos((th - th0)/2)
    cb = ch * ch0 - sh * sh0  # cos((th + th0)/2)
    f1 = fresnel_F_scalar(root * ca)
    f2 = fresnel_F_scalar(-root * cb)
    fs = f1 + eps * f2
    s = r + r0
    pref = A / (2j * math.pi) * cmath.exp(0.5j * A * s * s)
    K = pref * fs
    if not grad:
        return K, 0j, 0j, abs(fs)
    if r < 1e-300:
        nan = complex(math.nan, math.nan)
        return K, nan, nan, abs(fs)
    sa = sh * ch0 - ch * sh0  # sin((th - th0)/2)
    sb = sh * ch0 + ch * sh0  # sin((th + th0)/2)
    c = _EM_IPI4 * math.sqrt(A * r0 / (2.0 * math.pi * r))
    gx = 1j * A * ((x - x0) * f1 + eps * (x - x0) * f2) + c * (cb - eps * ca)
    gy = 1j * A * ((y - y0) * f1 + eps * (y + y0) * f2) + c * (sb - eps * sa)
    return K, pref * gx, pref * gy, abs(fs)


@numba.njit(cache=True, nogil=True)
def _propagator_arrays(px, py, x0, y0, t, eps, m, hbar, grad):
    n = px.size
    K = np.empty(n, np.complex128)
    gx = np.empty(n, np.complex128)
    gy = np.empty(n, np.complex128)
    den = np.empty(n)
    r0 = math.hypot(x0, y0)
    th0 = _angle(x0, y0)
    ch0 = math.cos(0.5 * th0)
    sh0 = math.sin(0.5 * th0)
    for i in range(n):
        K[i], gx[i], gy[i], den[i] = _kernel(px[i], py[i], x0, y0, r0, ch0, sh0,
                                             t, eps, m, hbar, grad)
    return K, gx, gy, den


@numba.njit(cache=True, nogil=True)
def packet_sums(px, py, t, nx, ny, coef, eps, m, hbar):
    """psi, dpsi/dx, dpsi/dy and a magnitude scale for a discretised initial state.

    ``coef[j]`` is the quadrature weight times psi_0 at source node j.  The
    scale is sum |K_1 coef| + |K_2 coef| over the direct and diffracted
    terms, i.e. the size of psi before any cancellation, so |psi| / scale
    measures how close a point is to a node.  Same
    algebra as :func:`_kernel` with the per-point and per-node trigonometry
    hoisted out of the double loop.  NaN at the tip.
    """
    n = px.size
    nn = nx.size
    psi = np.zeros(n, np.complex128)
    gx = np.zeros(n, np.complex128)
    gy = np.zeros(n, np.complex128)
    scale = np.zeros(n)
    A = m / (hbar * t)
    pref = A / (2j * math.pi)
    r0 = np.empty(nn)
    sr0 = np.empty(nn)
    ch0 = np.empty(nn)
    sh0 = np.empty(nn)
    for j in range(nn):
        r0[j] = math.hypot(nx[j], ny[j])
        sr0[j] = math.sqrt(r0[j])
        th0 = _angle(nx[j], ny[j])
        ch0[j] = math.cos(0.5 * th0)
        sh0[j] = math.sin(0.5 * th0)
    for i in range(n):
        x = px[i]
        y = py[i]
        r = math.hypot(x, y)
        if r < 1e-300:
            nan = complex(math.nan, math.nan)
            psi[i] = nan
            gx[i] = nan
            gy[i] = nan
            scale[i] = math.nan
            continue
        th = _angle(x, y)
        ch = math.cos(0.5 * th)
        sh = math.sin(0.5 * th)
        rootp = math.sqrt(2.0 * A * r)
        gfac = _EM_IPI4 * math.sqrt(A / (2.0 * math.pi * r))
        sp = 0j
        sx = 0j
        sy = 0j
        sc = 0.0
        for j in range(nn):
            ca = ch * ch0[j] + sh * sh0[j]
            cb = ch * ch0[j] - sh * sh0[j]
            sa = sh * ch0[j] - ch * sh0[j]
            sb = sh * ch0[j] + ch * sh0[j]
            root = rootp * sr0[j]
            f1 = fresnel_F_scalar(root * ca)
            f2 = fresnel_F_scalar(-root * cb)
            s = r + r0[j]
            ph = 0.5 * A * s * s
            w = complex(math.cos(ph), math.sin(ph)) * coef[j]
            c = gfac * sr0[j]
            fs = f1 + eps * f2
            dx = x - nx[j]
            dy1 = y - ny[j]
            dy2 = y + ny[j]
            sp += w * fs
            sx += w * (1j * A * dx * fs + c * (cb - eps * ca))
            sy += w * (1j * A * (dy1 * f1 + eps * dy2 * f2) + c * (sb - eps * sa))
            sc += abs(w) * (abs(f1) + abs(f2))
        psi[i] = pref * sp
        gx[i] = pref * sx
        gy[i] = pref * sy
        scale[i] = abs(pref) * sc
    return psi, gx, gy, scale


def _eps(bc):
    return float(BoundaryCondition.parse(bc).epsilon)


def _flat(x):
    pts = as_points(x)
    return pts, np.ascontiguousarray(pts[..., 0].reshape(-1)), np.ascontiguousarray(pts[..., 1].reshape(-1))


def _shape_out(arr, pts):
    arr = arr.reshape(pts.shape[:-1])
    return arr[()] if arr.ndim == 0 else arr


def _check_tip(px, py, what):
    if np.any(np.hypot(px, py) < TIP_RADIUS):
        raise SingularPointError(f"{what} diverges like r^(-1/2) at the barrier tip")


def diffraction_arguments(x, x0, t, consts=DEFAULT_CONSTANTS):
    """u1, u2 for a single point ``x`` and source ``x0``."""
    _check_positive_time(t)
    p, p0 = polar(x), polar(x0)
    root = math.sqrt(2 * consts.mass * p.r * p0.r / (consts.hbar * t))
    return DiffractionArguments(root * math.cos(0.5 * (p.theta - p0.theta)),
                                -root * math.cos(0.5 * (p.theta + p0.theta)))


def halfline_propagator(x, x0, t, bc, consts=DEFAULT_CONSTANTS):
    """Half-line barrier propagator K(x, t | x0, 0); ``x`` may be an array of points."""
    _check_positive_time(t)
    x0 = as_points(x0)
    pts, px, py = _flat(x)
    K, _, _, _ = _propagator_arrays(px, py, x0[0], x0[1], t, _eps(bc), consts.mass, consts.hbar, False)
    return _shape_out(K, pts)


def halfline_propagator_gradient(x, x0, t, bc, consts=DEFAULT_CONSTANTS):
    """(dK/dx, dK/dy); raises :class:`SingularPointError` at the tip (r < 1e-10)."""
    _check_positive_time(t)
    x0 = as_points(x0)
    pts, px, py = _flat(x)
    _check_tip(px, py, "the propagator gradient")
    _, gx, gy, _ = _propagator_arrays(px, py, x0[0], x0[1], t, _eps(bc), consts.mass, consts.hbar, True)
    return _shape_out(gx, pts), _shape_out(gy, pts)


@numba.njit(cache=True, nogil=True)
def _propagator_velocity(px, py, x0, y0, t, eps, m, hbar):
    # the closed velocity formula, evaluated term by term
    n = px.size
    out = np.empty((n, 2))
    den = np.empty(n)
    r0 = math.hypot(x0, y0)
    th0 = _angle(x0, y0)
    ch0 = math.cos(0.5 * th0)
    sh0 = math.sin(0.5 * th0)
    A = m / (hbar * t)
    for i in range(n):
        x = px[i]
        y = py[i]
        r = math.hypot(x, y)
        th = _angle(x, y)
        ch = math.cos(0.5 * th)
        sh = math.sin(0.5 * th)
        root = math.sqrt(2.0 * A * r * r0)
        ca = ch * ch0 + sh * sh0
        cb = ch * ch0 - sh * sh0
        sa = sh * ch0 - ch * sh0
        sb = sh * ch0 + ch * sh0
        f1 = fresnel_F_scalar(root * ca)
        f2 = fresnel_F_scalar(-root * cb)
        fs = f1 + eps * f2
        d2 = fs.real * fs.real + fs.imag * fs.imag
        den[i] = math.sqrt(d2)
        interf = (abs(f1) ** 2 - abs(f2) ** 2) / d2
        diff = math.sqrt(r0 / (2.0 * math.pi * A * r)) * (_EM_IPI4 / fs).imag
        out[i, 0] = (x - x0 + diff * (cb - eps * ca)) / t
        out[i, 1] = (y - y0 * interf + diff * (sb - eps * sa)) / t
    return out, den


def halfline_velocity_unchecked(pts, x0, t, bc, consts=DEFAULT_CONSTANTS):
    """Vectorised velocity for (n, 2) points; NaN rows at nodes and at the tip."""
    pts = np.ascontiguousarray(pts, dtype=float)
    v, den = _propagator_velocity(pts[:, 0].copy(), pts[:, 1].copy(), float(x0[0]), float(x0[1]),
                                  t, _eps(bc), consts.mass, consts.hbar)
    bad = (den < NODE_TOL) | (np.hypot(pts[:, 0], pts[:, 1]) < TIP_RADIUS) | ~np.isfinite(v).all(axis=1)
    v[bad] = np.nan
    return v


def halfline_propagator_velocity(x, x0, t, bc, consts=DEFAULT_CONSTANTS):
    """Bohmian velocity of the half-line propagator taken as the state.

    Raises
    ------
    NodeError
        Where |F(u1) +- F(u2)| < 1e-12 (e.g. on the barrier for Dirichlet).
    SingularPointError
        At the tip.
    """
    _check_positive_time(t)
    x0 = as_points(x0)
    pts, px, py = _flat(x)
    _check_tip(px, py, "the velocity field")
    v, den = _propagator_velocity(px, py, x0[0], x0[1], t, _eps(bc), consts.mass, consts.hbar)
    if np.any(den < NODE_TOL):
        i = int(np.argmin(den))
        A = consts.mass / (2 * math.pi * consts.hbar * t)
        raise NodeError("propagator vanishes: velocity undefined", A * den[i], (px[i], py[i]))
    return v.reshape(pts.shape)


def classify_region(theta, theta0):
    """Far-field region of direction ``theta`` for a source at polar angle ``theta0``.

    Requires -pi < theta0 <= 0; sources with theta0 > 0 must be mirrored
    (y -> -y) first.  Directions exactly on an optical boundary return
    ``FarFieldRegion.BOUNDARY``.
    """
    if not (-math.pi < theta0 <= 0):
        raise ContractError(f"theta0 must lie in (-pi, 0], got {theta0}; mirror y -> -y first")
    if not (-math.pi <= theta < math.pi):
        raise ContractError(f"theta must lie in [-pi, pi), got {theta}")
    lit = math.pi + theta0
    if theta in (lit, -lit) or theta == -math.pi:
        return FarFieldRegion.BOUNDARY
    if theta > lit:
        return FarFieldRegion.I
    if theta > -lit:
        return FarFieldRegion.II
    return FarFieldRegion.III


def _mirrored(x, x0):
    """Reduce to theta0 in (-pi, 0] by reflecting y; returns the flip sign."""
    th0 = _angle(x0[0], x0[1])
    if th0 > 0 or th0 == -math.pi:
        flip = np.array([1.0, -1.0])
        return x * flip, x0 * flip, -1.0
    return x, x0, 1.0


def farfield_velocity(x, x0, t, bc, consts=DEFAULT_CONSTANTS, min_u=5.0, min_scale=100.0):
    """Leading-order far-field velocity of the propagator.

    Region I: (r + r0)/t along x/r.  Region II: (x - x0)/t.
    Region III: (x - x0 e_x)/t.  The result does not depend on the boundary
    condition at this order; ``bc`` is accepted for interface symmetry.

    Raises
    ------
    AsymptoticRangeError
        Unless m r r0 / hbar t >= ``min_scale`` and min(|u1|, |u2|) >= ``min_u``.
    """
    BoundaryCondition.parse(bc)
    _check_positive_time(t)
    x = as_points(x).astype(float)
    x0 = as_points(x0).astype(float)
    xm, x0m, flip = _mirrored(x, x0)
    p, p0 = polar(xm), polar(x0m)
    if consts.mass * p.r * p0.r / (consts.hbar * t) < min_scale:
        raise AsymptoticRangeError("m r r0 / (hbar t) too small for the far-field expansion")
    u = diffraction_arguments(xm, x0m, t, consts)
    if min(abs(u.u1), abs(u.u2)) < min_u:
        raise AsymptoticRangeError(f"too close to an optical boundary (u1={u.u1:.3g}, u2={u.u2:.3g})")
    region = classify_region(p.theta, p0.theta)
    if region is FarFieldRegion.I:
        v = (p.r + p0.r) / t * xm / p.r
    elif region is FarFieldRegion.II:
        v = (xm - x0m) / t
    elif region is FarFieldRegion.III:
        v = (xm - np.array([x0m[0], 0.0])) / t
    else:
        raise AsymptoticRangeError("point lies on an optical boundary")
    return v * np.array([1.0, flip])


def region_of(x, x0):
    """Far-field region of point ``x`` relative to source ``x0`` (mirror-reduced)."""
    xm, x0m, _ = _mirrored(as_points(x).astype(float), as_points(x0).astype(float))
    return classify_region(polar(xm).theta, polar(x0m).theta)


# --- plane waves --------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _planewave_arrays(px, py, k0, th0, eps):
    n = px.size
    psi = np.empty(n, np.complex128)
    f1s = np.empty(n, np.complex128)
    f2s = np.empty(n, np.complex128)
    wx = np.empty(n)
    wy = np.empty(n)
    ch0 = math.cos(0.5 * th0)
    sh0 = math.sin(0.5 * th0)
    for i in range(n):
        r = math.hypot(px[i], py[i])
        th = _angle(px[i], py[i])
        ch = math.cos(0.5 * th)
        sh = math.sin(0.5 * th)
        root = math.sqrt(2.0 * k0 * r)
        ca = ch * ch0 + sh * sh0
        cb = ch * ch0 - sh * sh0
        sa = sh * ch0 - ch * sh0
        sb = sh * ch0 + ch * sh0
        f1 = fresnel_F_scalar(root * ca)
        f2 = fresnel_F_scalar(-root * cb)
        f1s[i] = f1
        f2s[i] = f2
        psi[i] = cmath.exp(1j * k0 * r) * (f1 + eps * f2)
        # grad a1 + eps grad a2 = (1/2) sqrt(2 k0 / r) [cb - eps ca, sb - eps sa]
        wx[i] = 0.5 * (cb - eps * ca)
        wy[i] = 0.5 * (sb - eps * sa)
    return psi, f1s, f2s, wx, wy


def planewave_arguments(x, wave):
    p = polar(x)
    root = math.sqrt(2 * wave.k0 * p.r)
    return PlaneWaveArguments(wave.k0, wave.theta0,
                              root * math.cos(0.5 * (p.theta - wave.phi0)),
                              -root * math.cos(0.5 * (p.theta + wave.phi0)))


def planewave_psi(x, wave, bc):
    """Sommerfeld scattering state exp(i k0 r) [F(a1) +- F(a2)] (time independent)."""
    pts, px, py = _flat(x)
    psi, *_ = _planewave_arrays(px, py, wave.k0, wave.phi0, _eps(bc))
    return _shape_out(psi, pts)


def planewave_gradient(x, wave, bc):
    """grad psi = e^{i k0 r} { i [F(a1) k + eps F(a2) k'] + e^{-i pi/4} sqrt(2 k0 / pi r) W }."""
    pts, px, py = _flat(x)
    _check_tip(px, py, "the plane-wave gradient")
    eps = _eps(bc)
    psi, f1, f2, wx, wy = _planewave_arrays(px, py, wave.k0, wave.phi0, eps)
    k, kp = wave.k, wave.k_mirror
    ph = np.exp(1j * wave.k0 * np.hypot(px, py))
    c = _EM_IPI4 * np.sqrt(2 * wave.k0 / (math.pi * np.hypot(px, py)))
    gx = ph * (1j * (f1 * k[0] + eps * f2 * kp[0]) + c * wx)
    gy = ph * (1j * (f1 * k[1] + eps * f2 * kp[1]) + c * wy)
    return _shape_out(gx, pts), _shape_out(gy, pts)


def planewave_velocity_unchecked(pts, wave, bc, consts=DEFAULT_CONSTANTS):
    pts = np.ascontiguousarray(pts, dtype=float)
    px, py = pts[:, 0].copy(), pts[:, 1].copy()
    eps = _eps(bc)
    _, f1, f2, wx, wy = _planewave_arrays(px, py, wave.k0, wave.phi0, eps)
    fs = f1 + eps * f2
    d2 = np.abs(fs) ** 2
    r = np.hypot(px, py)
    with np.errstate(divide="ignore", invalid="ignore"):
        interf = (np.abs(f1) ** 2 - np.abs(f2) ** 2) / d2
        diff = np.sqrt(2 * wave.k0 / (math.pi * r)) * (_EM_IPI4 / fs).imag
        k = wave.k
        hm = consts.hbar / consts.mass
        v = np.stack([hm * (k[0] + diff * wx), hm * (k[1] * interf + diff * wy)], axis=-1)
    bad = (np.sqrt(d2) < NODE_TOL) | (r < TIP_RADIUS) | ~np.isfinite(v).all(axis=1)
    v[bad] = np.nan
    return v, np.sqrt(d2)


def planewave_velocity(x, wave, bc, consts=DEFAULT_CONSTANTS):
    """Bohmian velocity of the scattering state; there is no time argument.

    Raises :class:`NodeError` where |F(a1) +- F(a2)| < 1e-12.
    """
    pts = as_points(x)
    flat = pts.reshape(-1, 2)
    _check_tip(flat[:, 0], flat[:, 1], "the plane-wave velocity")
    v, den = planewave_velocity_unchecked(flat, wave, bc, consts)
    if np.any(den < NODE_TOL):
        i = int(np.argmin(den))
        raise NodeError("scattering state vanishes: velocity undefined", den[i], tuple(flat[i]))
    return v.reshape(pts.shape)
