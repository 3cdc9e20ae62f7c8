"""Quick invariant checks behind ``halfbarrier selftest``.

Each check is cheap (well under a second once compiled) and prints one
PASS/FAIL line; the full test suite lives in the repository's tests/.
"""

import math

import numpy as np

from .core import BoundaryCondition
from .dynamics import InitialCircle, circle_seeds, integrate_ensemble
from .fields import free_propagator_field, wall_packet_field
from .halfline import PlaneWave, halfline_propagator, planewave_psi
from .scenario import canned, canned_names, dump_scenario, parse_scenario
from .specfun import fresnel_CS, fresnel_F
from .wall import WallPacket2D


def _reflection():
    u = np.linspace(-20, 20, 401)
    return np.max(np.abs(fresnel_F(u) + fresnel_F(-u) - np.exp(-1j * u * u))), 1e-10


def _two_routes():
    # F from the Fresnel integrals C, S as an independent route
    u = np.linspace(-8, 8, 161)
    c, s = fresnel_CS(u)
    inner = math.sqrt(math.pi) / 2 * np.exp(1j * math.pi / 4) + math.sqrt(math.pi / 2) * (c + 1j * s)
    ref = np.exp(-1j * u * u - 1j * math.pi / 4) * inner / math.sqrt(math.pi)
    return np.max(np.abs(fresnel_F(u) - ref)), 1e-10


def _dirichlet_barrier():
    x = np.stack([np.linspace(-6, -0.1, 50), np.zeros(50)], axis=-1)
    K = halfline_propagator(x, (4.0, -4.0), 0.3, BoundaryCondition.DIRICHLET)
    scale = abs(halfline_propagator((4.0, -3.0), (4.0, -4.0), 0.3, BoundaryCondition.DIRICHLET))
    return np.max(np.abs(K)) / scale, 1e-10


def _linear_field():
    x0 = np.array([0.5, -0.25])
    seeds = np.array([[1.0, 1.0], [-2.0, 0.5]])
    tr = integrate_ensemble(seeds, 0.1, 1.0, 1e-2, free_propagator_field(x0))
    exact = x0 + (seeds - x0) / 0.1
    return max(np.max(np.abs(t.final - e)) for t, e in zip(tr, exact)), 1e-10


def _round_trip():
    bad = sum(parse_scenario(dump_scenario(canned(n))) != canned(n) for n in canned_names())
    return float(bad), 0.0


def _wall():
    pk = WallPacket2D((-4.0, 4.0), (2 ** 0.5, -(2 ** 0.5)), 1.0)
    seeds = circle_seeds(InitialCircle((-4.0, 4.0), 2.0, 64, 0.01))
    tr = integrate_ensemble(seeds, 0.01, 3.0, 1e-2, wall_packet_field(pk, "dirichlet"))
    return -min(np.min(t.positions[:, 1]) for t in tr), 0.0


def _helmholtz():
    wave, h = PlaneWave(5.0, math.pi / 3), 1e-3
    p = np.array([[1.3, 2.1], [-2.0, -1.7], [0.4, -3.3]])
    steps = [(0, 0), (h, 0), (-h, 0), (0, h), (0, -h)]
    f = [planewave_psi(p + np.array(d), wave, "neumann") for d in steps]
    lap = (f[1] + f[2] + f[3] + f[4] - 4 * f[0]) / h**2
    return np.max(np.abs(lap + 25 * f[0]) / (25 * np.abs(f[0]))), 1e-4


CHECKS = (
    ("F(u) + F(-u) = exp(-i u^2)", _reflection),
    ("F agrees with the Fresnel-integral route", _two_routes),
    ("Dirichlet propagator vanishes on the barrier", _dirichlet_barrier),
    ("RK4 exact on v = (x - x0) / t", _linear_field),
    ("canned scenarios round-trip", _round_trip),
    ("wall trajectories stay at y > 0", _wall),
    ("plane wave solves Helmholtz", _helmholtz),
)


def run_selftest(out=print):
    ok = True
    for label, check in CHECKS:
        value, tol = check()
        good = bool(value <= tol)
        ok &= good
        out(f"{'PASS' if good else 'FAIL'}  {label}  ({value:.3g} <= {tol:g})")
    return ok
