"""Declarative scenarios: typed description, key = value text format, canned files.

A scenario file is flat text, one ``key = value`` per line, with dotted
section keys::

    name = fig_GWP_N_x4
    field.kind = halfline_packet
    field.bc = neumann
    packet.center = 4.0, -4.0
    packet.momentum = 0.0, 0.0
    packet.sigma = 0.1
    circle.center = 4.0, -4.0
    circle.rho = 0.02
    circle.count = 16
    circle.t_init = 0.01
    integration.t_end = 8.0
    integration.h = 0.002

``#`` starts a comment.  Floats are written with ``repr`` so a dumped file
parses back to an equal :class:`Scenario`.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources

import numpy as np

from .core import DEFAULT_CONSTANTS, BoundaryCondition, PhysicalConstants
from .dynamics import DEFAULT_H, InitialCircle
from .errors import BohmError, ConfigError
from .halfline import PlaneWave
from .quadrature import BOX_SIGMAS, MAX_ORDER, ORDER_LADDER

SUFFIX = ".scenario"


class FieldKind(Enum):
    FREE_PACKET = "free_packet"
    FREE_PROPAGATOR = "free_propagator"
    WALL_PACKET = "wall_packet"
    WALL_PROPAGATOR = "wall_propagator"
    HALFLINE_PROPAGATOR = "halfline_propagator"
    HALFLINE_PACKET = "halfline_packet"
    PLANE_WAVE = "plane_wave"
    PLANE_WAVE_DIRICHLET = "plane_wave_dirichlet"


PACKET_KINDS = {FieldKind.FREE_PACKET, FieldKind.WALL_PACKET, FieldKind.HALFLINE_PACKET}
SOURCE_KINDS = {FieldKind.FREE_PROPAGATOR, FieldKind.HALFLINE_PROPAGATOR}
WAVE_KINDS = {FieldKind.PLANE_WAVE, FieldKind.PLANE_WAVE_DIRICHLET}
# kinds whose boundary condition is read from ``field.bc``
BC_KINDS = {FieldKind.WALL_PACKET, FieldKind.HALFLINE_PROPAGATOR, FieldKind.HALFLINE_PACKET,
            FieldKind.PLANE_WAVE}
# kinds that only exist with one boundary condition
FIXED_BC = {FieldKind.WALL_PROPAGATOR: BoundaryCondition.NEUMANN,
            FieldKind.PLANE_WAVE_DIRICHLET: BoundaryCondition.DIRICHLET}


@dataclass(frozen=True)
class PacketSpec:
    center: tuple
    momentum: tuple
    sigma: float


@dataclass(frozen=True)
class QuadratureSpec:
    """``order=None`` means the automatic per-point order."""

    order: int = None
    nsigma: float = BOX_SIGMAS
    max_order: int = MAX_ORDER


@dataclass(frozen=True)
class IntegrationSpec:
    """Either a uniform step ``h`` up to ``t_end`` or a piecewise ``schedule``.

    ``schedule`` holds ``(t_stop, h)`` pairs; its last stop is ``t_end``.
    ``bounds`` (x_lo, x_hi, y_lo, y_hi) stops trajectories that leave it.
    """

    t_end: float
    h: float = None
    schedule: tuple = None
    bounds: tuple = None


@dataclass(frozen=True)
class DensityGridSpec:
    bounds: tuple
    resolution: tuple
    time: float

    def __post_init__(self):
        if len(self.bounds) != 4 or len(self.resolution) != 2:
            raise ConfigError("density grid needs 4 bounds and 2 resolution values")
        x_lo, x_hi, y_lo, y_hi = self.bounds
        if not (x_hi > x_lo and y_hi > y_lo):
            raise ConfigError(f"density.bounds is degenerate: {self.bounds}")
        if any(int(n) != n or n < 2 for n in self.resolution):
            raise ConfigError(f"density.resolution needs integers >= 2, got {self.resolution}")
        if not self.time >= 0:
            raise ConfigError(f"density.time must be >= 0, got {self.time}")

    def axes(self):
        """x values (nx) and y values (ny) of the grid nodes."""
        x_lo, x_hi, y_lo, y_hi = self.bounds
        nx, ny = self.resolution
        return np.linspace(x_lo, x_hi, nx), np.linspace(y_lo, y_hi, ny)


@dataclass(frozen=True)
class Scenario:
    name: str
    field_kind: FieldKind
    circle: InitialCircle
    integration: IntegrationSpec
    bc: BoundaryCondition = None
    constants: PhysicalConstants = DEFAULT_CONSTANTS
    packet: PacketSpec = None
    source: tuple = None
    wave: PlaneWave = None
    quadrature: QuadratureSpec = None
    density: DensityGridSpec = None
    trajectories: str = None
    density_file: str = None
    description: str = ""

    def __post_init__(self):
        _validate(self)
        if self.field_kind in FIXED_BC:
            object.__setattr__(self, "bc", FIXED_BC[self.field_kind])

    @property
    def trajectory_path(self):
        return self.trajectories or f"{self.name}_trajectories.csv"

    @property
    def density_path(self):
        return self.density_file or f"{self.name}_density.txt"

    def with_overrides(self, h=None, order=None):
        """Copy with a uniform step ``h`` and/or quadrature ``order`` ("auto" or an int)."""
        s = self
        if h is not None:
            s = replace(s, integration=replace(s.integration, h=float(h), schedule=None))
        if order is not None:
            if s.field_kind is not FieldKind.HALFLINE_PACKET:
                raise ConfigError(f"--order applies to halfline_packet scenarios, not {s.field_kind.value}")
            q = s.quadrature or QuadratureSpec()
            s = replace(s, quadrature=replace(q, order=_parse_order(order, "--order")))
        return s


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _presence(s, attr, key, needed, kind):
    have = getattr(s, attr) is not None
    if needed and not have:
        raise ConfigError(f"field.kind = {kind} requires {key}")
    if have and not needed:
        raise ConfigError(f"{key} is not used by field.kind = {kind}")


def _validate(s):
    kind = s.field_kind.value
    _require(bool(s.name) and s.name.strip() == s.name and "\n" not in s.name,
             "name must be a non-empty single token")
    _require("\n" not in s.description, "description must fit on one line")
    _presence(s, "packet", "packet.*", s.field_kind in PACKET_KINDS, kind)
    _presence(s, "source", "source.x0", s.field_kind in SOURCE_KINDS, kind)
    _presence(s, "wave", "wave.*", s.field_kind in WAVE_KINDS, kind)
    if s.field_kind is FieldKind.HALFLINE_PACKET:
        _require(s.quadrature is not None, "halfline_packet needs a quadrature spec")
    else:
        _presence(s, "quadrature", "quadrature.*", False, kind)
    if s.field_kind in BC_KINDS:
        _require(s.bc is not None, f"field.kind = {kind} requires field.bc")
    else:
        _require(s.bc is None or s.bc is FIXED_BC.get(s.field_kind),
                 f"field.bc is not used by field.kind = {kind}")
    if s.packet is not None:
        _require(len(s.packet.center) == 2 and len(s.packet.momentum) == 2,
                 "packet.center and packet.momentum must be 2-vectors")
        _require(s.packet.sigma > 0, f"packet.sigma must be > 0, got {s.packet.sigma}")
        if s.field_kind is FieldKind.WALL_PACKET:
            _require(s.packet.center[1] > 0, "wall_packet needs packet.center with y > 0")
    if s.source is not None:
        _require(len(s.source) == 2, "source.x0 must be a 2-vector")
        if s.field_kind is FieldKind.HALFLINE_PROPAGATOR:
            _require(not (s.source[1] == 0 and s.source[0] <= 0), "source.x0 lies on the barrier")
    if s.quadrature is not None:
        q = s.quadrature
        _require(q.order is None or q.order >= 2, f"quadrature.order must be >= 2, got {q.order}")
        _require(q.nsigma > 0, f"quadrature.nsigma must be > 0, got {q.nsigma}")
        _require(q.max_order in ORDER_LADDER,
                 f"quadrature.max_order must be one of {ORDER_LADDER.tolist()}")
    it = s.integration
    _require((it.h is None) != (it.schedule is None),
             "give exactly one of integration.h and integration.schedule")
    if it.h is not None:
        _require(0 < it.h <= it.t_end - s.circle.t_init,
                 f"integration.h must lie in (0, t_end - t_init], got {it.h}")
    else:
        start = s.circle.t_init
        for t_stop, h in it.schedule:
            _require(t_stop > start and 0 < h <= t_stop - start,
                     f"integration.schedule piece {t_stop}:{h} is not increasing or has a bad step")
            start = t_stop
        _require(it.schedule[-1][0] == it.t_end, "integration.schedule must end at t_end")
    _require(it.t_end > s.circle.t_init, "integration.t_end must exceed circle.t_init")
    if it.bounds is not None:
        _require(len(it.bounds) == 4 and it.bounds[1] > it.bounds[0] and it.bounds[3] > it.bounds[2],
                 f"integration.bounds is degenerate: {it.bounds}")


# --- text format ---------------------------------------------------------------

def _num(text, key):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite")
    return v


def _int(text, key):
    v = _num(text, key)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def _vec(text, key, n):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}")
    return tuple(_num(p, key) for p in parts)


def _parse_order(text, key):
    if text is None or str(text).strip().lower() == "auto":
        return None
    return _int(str(text), key)


def _schedule(text, key):
    out = []
    for piece in text.split(","):
        stop, sep, h = piece.partition(":")
        if not sep:
            raise ConfigError(f"{key}: expected t_stop:h pairs, got {piece.strip()!r}")
        out.append((_num(stop, key), _num(h, key)))
    return tuple(out)


KEYS = (
    "name", "description", "field.kind", "field.bc", "constants.hbar", "constants.mass",
    "packet.center", "packet.momentum", "packet.sigma", "source.x0", "wave.k0", "wave.theta0",
    "quadrature.order", "quadrature.nsigma", "quadrature.max_order",
    "circle.center", "circle.rho", "circle.count", "circle.t_init",
    "integration.t_end", "integration.h", "integration.schedule", "integration.bounds",
    "density.bounds", "density.resolution", "density.time",
    "output.trajectories", "output.density",
)


def read_pairs(text, origin="<string>"):
    """Parse ``key = value`` lines into a dict, rejecting unknown or repeated keys."""
    pairs = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{origin}:{n}: expected 'key = value', got {raw.strip()!r}")
        if key not in KEYS:
            raise ConfigError(f"{origin}:{n}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{origin}:{n}: repeated key {key!r}")
        pairs[key] = value
    return pairs


def parse_scenario(text, origin="<string>"):
    """Build a :class:`Scenario` from the text format; errors name the offending key."""
    d = read_pairs(text, origin)

    def take(key, conv=None, default=None):
        if key not in d:
            return default
        return conv(d.pop(key), key) if conv else d.pop(key)

    def need(key, conv=None):
        if key not in d:
            raise ConfigError(f"{origin}: missing required key {key!r}")
        return take(key, conv)

    try:
        kind = FieldKind(need("field.kind").lower())
    except ValueError:
        raise ConfigError(f"{origin}: field.kind must be one of "
                          f"{[k.value for k in FieldKind]}") from None
    try:
        bc = take("field.bc")
        bc = None if bc is None else BoundaryCondition.parse(bc)
        constants = PhysicalConstants(take("constants.hbar", _num, DEFAULT_CONSTANTS.hbar),
                                      take("constants.mass", _num, DEFAULT_CONSTANTS.mass))
        packet = None
        if any(k.startswith("packet.") for k in d):
            packet = PacketSpec(need("packet.center", lambda v, k: _vec(v, k, 2)),
                                need("packet.momentum", lambda v, k: _vec(v, k, 2)),
                                need("packet.sigma", _num))
        source = take("source.x0", lambda v, k: _vec(v, k, 2))
        wave = None
        if any(k.startswith("wave.") for k in d):
            wave = PlaneWave(need("wave.k0", _num), need("wave.theta0", _num))
        quad = None
        if any(k.startswith("quadrature.") for k in d) or kind is FieldKind.HALFLINE_PACKET:
            quad = QuadratureSpec(take("quadrature.order", _parse_order),
                                  take("quadrature.nsigma", _num, BOX_SIGMAS),
                                  take("quadrature.max_order", _int, MAX_ORDER))
        circle = InitialCircle(need("circle.center", lambda v, k: _vec(v, k, 2)),
                               need("circle.rho", _num), need("circle.count", _int),
                               need("circle.t_init", _num))
        schedule = take("integration.schedule", _schedule)
        t_end = take("integration.t_end", _num)
        if t_end is None:
            if schedule is None:
                raise ConfigError(f"{origin}: missing required key 'integration.t_end'")
            t_end = schedule[-1][0]
        h = take("integration.h", _num)
        if h is None and schedule is None:
            h = DEFAULT_H
        integ = IntegrationSpec(t_end, h, schedule,
                                take("integration.bounds", lambda v, k: _vec(v, k, 4)))
        density = None
        if any(k.startswith("density.") for k in d):
            density = DensityGridSpec(need("density.bounds", lambda v, k: _vec(v, k, 4)),
                                      tuple(int(x) for x in need("density.resolution",
                                                                 lambda v, k: _vec(v, k, 2))),
                                      take("density.time", _num, 0.0))
        return Scenario(name=need("name"), field_kind=kind, circle=circle, integration=integ,
                        bc=bc, constants=constants, packet=packet, source=source, wave=wave,
                        quadrature=quad, density=density,
                        trajectories=take("output.trajectories"),
                        density_file=take("output.density"),
                        description=take("description", default=""))
    except ConfigError:
        raise
    except BohmError as exc:
        # invalid values caught by the underlying types
        raise ConfigError(f"{origin}: {exc}") from exc


def _f(v):
    return repr(float(v))


def _fv(v):
    return ", ".join(_f(x) for x in v)


def dump_scenario(s):
    """Text form of a scenario; :func:`parse_scenario` inverts it exactly."""
    lines = [f"name = {s.name}"]
    if s.description:
        lines.append(f"description = {s.description}")
    lines.append(f"field.kind = {s.field_kind.value}")
    if s.field_kind in BC_KINDS:
        lines.append(f"field.bc = {s.bc.value}")
    if s.constants != DEFAULT_CONSTANTS:
        lines += [f"constants.hbar = {_f(s.constants.hbar)}", f"constants.mass = {_f(s.constants.mass)}"]
    if s.packet is not None:
        lines += [f"packet.center = {_fv(s.packet.center)}",
                  f"packet.momentum = {_fv(s.packet.momentum)}",
                  f"packet.sigma = {_f(s.packet.sigma)}"]
    if s.source is not None:
        lines.append(f"source.x0 = {_fv(s.source)}")
    if s.wave is not None:
        lines += [f"wave.k0 = {_f(s.wave.k0)}", f"wave.theta0 = {_f(s.wave.theta0)}"]
    if s.quadrature is not None:
        q = s.quadrature
        lines += [f"quadrature.order = {'auto' if q.order is None else q.order}",
                  f"quadrature.nsigma = {_f(q.nsigma)}", f"quadrature.max_order = {q.max_order}"]
    c = s.circle
    lines += [f"circle.center = {_fv(c.center)}", f"circle.rho = {_f(c.radius)}",
              f"circle.count = {c.count}", f"circle.t_init = {_f(c.t_init)}"]
    it = s.integration
    lines.append(f"integration.t_end = {_f(it.t_end)}")
    if it.h is not None:
        lines.append(f"integration.h = {_f(it.h)}")
    else:
        lines.append("integration.schedule = " + ", ".join(f"{_f(a)}:{_f(b)}" for a, b in it.schedule))
    if it.bounds is not None:
        lines.append(f"integration.bounds = {_fv(it.bounds)}")
    if s.density is not None:
        g = s.density
        lines += [f"density.bounds = {_fv(g.bounds)}",
                  f"density.resolution = {g.resolution[0]}, {g.resolution[1]}",
                  f"density.time = {_f(g.time)}"]
    if s.trajectories:
        lines.append(f"output.trajectories = {s.trajectories}")
    if s.density_file:
        lines.append(f"output.density = {s.density_file}")
    return "\n".join(lines) + "\n"


def load_scenario(path):
    """Read a scenario file; ``path`` may also be the name of a canned scenario."""
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_scenario(fh.read(), str(path))
    except FileNotFoundError:
        if str(path) in canned_names():
            return canned(str(path))
        raise


# --- canned scenarios ----------------------------------------------------------

def _canned_dir():
    return resources.files(__package__) / "scenarios"


def canned_names():
    return sorted(p.name[: -len(SUFFIX)] for p in _canned_dir().iterdir() if p.name.endswith(SUFFIX))


def canned(name):
    """One of the shipped scenarios, by name (see :func:`canned_names`)."""
    p = _canned_dir() / (name + SUFFIX)
    if not p.is_file():
        raise ConfigError(f"no canned scenario named {name!r}")
    return parse_scenario(p.read_text(encoding="utf-8"), name + SUFFIX)
