"""Bohmian trajectories: RK4 integration, initial circles, ensembles, equivariance checks.

Ensembles are advanced together, one vectorised RK4 step at a time.  A member
whose step fails (a stage lands on a node, leaves the domain or jumps across
the barrier) is retried alone by recursive bisection of that step, at most
``max_halvings`` levels deep; the recorded samples stay on the uniform grid.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np
from scipy import stats

from .errors import BohmError, ConfigError, ContractError, DomainError, NodeError

MAX_HALVINGS = 20
DEFAULT_H = 1e-3
CHUNK_SIZE = 256


class Barrier(Enum):
    NONE = "none"
    WALL = "wall"  # the region y <= 0 is excluded
    HALFLINE = "halfline"  # {y = 0, x <= 0} may not be crossed


class TrajectoryStatus(Enum):
    COMPLETED = "completed"
    NODE = "node-encounter"
    LEFT_DOMAIN = "left-domain"
    STEP_FAILURE = "step-failure"


class StepFailure(BohmError, ArithmeticError):
    """An RK4 stage could not be evaluated; ``stage`` is 1..4, 5 for the update itself."""

    def __init__(self, message, stage, status):
        super().__init__(message)
        self.stage = stage
        self.status = status


def crosses_halfline(p, q):
    """Rows where the segment p -> q meets {y = 0, x <= 0} (touching included)."""
    py, qy = p[:, 1], q[:, 1]
    change = ((py > 0) & (qy <= 0)) | ((py < 0) & (qy >= 0)) | ((py == 0) & (p[:, 0] <= 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(py != qy, py / (py - qy), 0.0)
    xc = p[:, 0] + (q[:, 0] - p[:, 0]) * frac
    return change & (xc <= 0)


@dataclass(frozen=True)
class VelocityField:
    """A velocity field v(x, t) with its domain.

    ``batch(points, t)`` maps an (n, 2) array to (n, 2) velocities and must
    return NaN rows where the field is undefined (nodes, singular points).
    ``source`` optionally holds the object the field was built from.
    """

    batch: object
    barrier: Barrier = Barrier.NONE
    t_min: float = 0.0
    name: str = "field"
    source: object = None

    def check_time(self, t):
        if t < self.t_min:
            raise DomainError(f"{self.name} is defined for t >= {self.t_min}, got {t}")

    def allowed(self, pts):
        if self.barrier is Barrier.WALL:
            return pts[:, 1] > 0
        if self.barrier is Barrier.HALFLINE:
            return ~((pts[:, 1] == 0) & (pts[:, 0] <= 0))
        return np.ones(len(pts), dtype=bool)

    def segment_ok(self, p, q):
        """Rows where moving p -> q stays in the domain."""
        ok = self.allowed(q)
        if self.barrier is Barrier.HALFLINE:
            ok &= ~crosses_halfline(p, q)
        return ok

    def evaluate(self, position, t):
        """Velocity at a single position; raises instead of returning NaN."""
        self.check_time(t)
        p = np.asarray(position, dtype=float).reshape(1, 2)
        if not self.allowed(p)[0]:
            raise DomainError(f"{tuple(p[0])} lies outside the domain of {self.name}")
        v = self.batch(p, t)[0]
        if not np.all(np.isfinite(v)):
            raise NodeError(f"{self.name} undefined at {tuple(p[0])}", 0.0, tuple(p[0]))
        return v


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: TrajectoryStatus = TrajectoryStatus.COMPLETED
    failure: dict = dc_field(default=None)

    @property
    def samples(self):
        return list(zip(self.times.tolist(), [tuple(p) for p in self.positions]))

    @property
    def final(self):
        return self.positions[-1]

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class InitialCircle:
    center: tuple
    radius: float
    count: int
    t_init: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractError(f"radius must be > 0, got {self.radius}")
        if int(self.count) != self.count or self.count < 1:
            raise ContractError(f"count must be a positive integer, got {self.count}")
        if not self.t_init >= 0:
            raise ContractError(f"t_init must be >= 0, got {self.t_init}")


def circle_seeds(circle):
    """``count`` points at angles 2 pi k / count on the circle, starting at angle 0."""
    ang = 2 * np.pi * np.arange(circle.count) / circle.count
    c = np.asarray(circle.center, dtype=float)
    pts = c + circle.radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    # exact values on the axes
    for k in range(circle.count):
        q, r = divmod(4 * k, circle.count)
        if r == 0:
            pts[k] = c + circle.radius * np.array([(1, 0), (0, 1), (-1, 0), (0, -1)][q % 4])
    return pts


def time_grid(t_init, t_end, h):
    """t_init + k h, plus a final partial step landing exactly on t_end."""
    if not t_end > t_init:
        raise ContractError(f"need t_end > t_init, got {t_init}, {t_end}")
    if not 0 < h <= (t_end - t_init) * (1 + 1e-12):
        raise ContractError(f"need 0 < h <= t_end - t_init, got h={h}")
    n = int(math.floor((t_end - t_init) / h + 1e-9))
    ts = t_init + h * np.arange(n + 1)
    if t_end - ts[-1] > 1e-9 * h:
        ts = np.append(ts, t_end)
    else:
        ts[-1] = t_end
    return ts


def schedule_grid(t_init, schedule):
    """Concatenated uniform grids for a piecewise-constant step.

    ``schedule`` is a sequence of ``(t_stop, h)`` pairs with increasing
    ``t_stop``; each piece runs from the previous stop with its own ``h``.
    """
    ts = [np.array([float(t_init)])]
    start = float(t_init)
    for t_stop, h in schedule:
        ts.append(time_grid(start, t_stop, h)[1:])
        start = float(t_stop)
    return np.concatenate(ts)


def _rk4_batch(field, X, t, h):
    """One RK4 step for rows of X.  Returns (new X, failed stage per row, 0 = ok, cause code).

    cause: 1 = node (NaN velocity), 2 = domain.
    """
    n = len(X)
    stage = np.zeros(n, dtype=np.int8)
    cause = np.zeros(n, dtype=np.int8)
    ks = []
    offsets = (0.0, 0.5, 0.5, 1.0)
    base = X
    Y = X
    live = np.ones(n, dtype=bool)
    for s in range(4):
        if s > 0:
            Y = X + offsets[s] * h * ks[-1]
            dom = field.segment_ok(X, Y)
            bad = live & ~dom
            stage[bad] = s + 1
            cause[bad] = 2
            live &= dom
        k = np.full((n, 2), np.nan)
        if live.any():
            k[live] = field.batch(Y[live], t + offsets[s] * h)
        bad = live & ~np.isfinite(k).all(axis=1)
        stage[bad] = s + 1
        cause[bad] = 1
        live &= ~bad
        ks.append(k)
    new = base + h / 6.0 * (ks[0] + 2 * ks[1] + 2 * ks[2] + ks[3])
    dom = field.segment_ok(X, new)
    bad = live & ~dom
    stage[bad] = 5
    cause[bad] = 2
    return new, stage, cause


def rk4_step(position, t, h, field):
    """Classical RK4 update of a single position.

    Raises
    ------
    StepFailure
        If a stage evaluation hits a node or leaves the domain.
    """
    if not h > 0:
        raise ContractError(f"h must be > 0, got {h}")
    field.check_time(t)
    X = np.asarray(position, dtype=float).reshape(1, 2)
    new, stage, cause = _rk4_batch(field, X, t, h)
    if stage[0]:
        status = TrajectoryStatus.NODE if cause[0] == 1 else TrajectoryStatus.LEFT_DOMAIN
        raise StepFailure(f"RK4 stage {stage[0]} failed ({status.value}) at t={t}", int(stage[0]), status)
    return new[0]


def _halved(field, x, t, h, max_halvings, stage, cause):
    """Retry a failed step as two halves, recursing up to ``max_halvings`` levels."""
    if max_halvings == 0:
        return None, {"t": t, "h": h, "stage": int(stage), "cause": int(cause)}
    half = 0.5 * h
    mid, fail = _bisect(field, x, t, half, 1, max_halvings)
    if fail is not None:
        return None, fail
    return _bisect(field, mid, t + half, half, 1, max_halvings)


def _bisect(field, x, t, h, depth, max_halvings):
    """Advance one member from t to t + h by recursive halving; (x, None) or (None, failure)."""
    new, stage, cause = _rk4_batch(field, x.reshape(1, 2), t, h)
    if not stage[0]:
        return new[0], None
    if depth >= max_halvings:
        return None, {"t": t, "h": h, "stage": int(stage[0]), "cause": int(cause[0])}
    half = 0.5 * h
    mid, fail = _bisect(field, x, t, half, depth + 1, max_halvings)
    if fail is not None:
        return None, fail
    return _bisect(field, mid, t + half, half, depth + 1, max_halvings)


def _outside(pts, bounds):
    if bounds is None:
        return np.zeros(len(pts), dtype=bool)
    x0, x1, y0, y1 = bounds
    return (pts[:, 0] < x0) | (pts[:, 0] > x1) | (pts[:, 1] < y0) | (pts[:, 1] > y1)


def _integrate_chunk(seeds, ts, field, max_halvings, bounds):
    m = len(seeds)
    out = np.full((len(ts), m, 2), np.nan)
    out[0] = seeds
    last = np.zeros(m, dtype=int)
    status = [TrajectoryStatus.COMPLETED] * m
    failure = [None] * m
    active = np.ones(m, dtype=bool)
    bad0 = ~field.allowed(seeds) | _outside(seeds, bounds)
    for i in np.flatnonzero(bad0):
        status[i] = TrajectoryStatus.LEFT_DOMAIN
        failure[i] = {"t": ts[0], "h": 0.0, "stage": 0, "cause": 2}
    active &= ~bad0
    X = np.array(seeds, dtype=float)
    for k in range(len(ts) - 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        t, h = ts[k], ts[k + 1] - ts[k]
        new, stage, cause = _rk4_batch(field, X[idx], t, h)
        for j in np.flatnonzero(stage):
            i = idx[j]
            x, fail = _halved(field, X[i], t, h, max_halvings, stage[j], cause[j])
            if fail is None:
                new[j] = x
                stage[j] = 0
            else:
                active[i] = False
                failure[i] = fail
                status[i] = (TrajectoryStatus.NODE if fail["cause"] == 1
                             else TrajectoryStatus.LEFT_DOMAIN)
        good = idx[stage == 0]
        X[good] = new[stage == 0]
        out[k + 1, good] = X[good]
        last[good] = k + 1
        gone = good[_outside(X[good], bounds)]
        for i in gone:
            status[i] = TrajectoryStatus.LEFT_DOMAIN
            failure[i] = {"t": ts[k + 1], "h": 0.0, "stage": 0, "cause": 2}
        active[gone] = False
    return [Trajectory(ts[: last[i] + 1].copy(), out[: last[i] + 1, i].copy(), status[i], failure[i])
            for i in range(m)]


def integrate_ensemble(seeds, t_init, t_end, h, field, max_halvings=MAX_HALVINGS, bounds=None,
                       threads=1, chunk_size=CHUNK_SIZE):
    """Integrate many seeds; results are in seed order and independent of ``threads``.

    Parameters
    ----------
    seeds : array_like, shape (M, 2)
    bounds : (x_lo, x_hi, y_lo, y_hi), optional
        Leaving this box stops a trajectory with status left-domain.
    threads : int
        Worker threads; members are split into fixed chunks of ``chunk_size``
        so the partition, and hence every sample, does not depend on it.
    """
    return _run(seeds, time_grid(t_init, t_end, h), field, max_halvings, bounds, threads, chunk_size)


def integrate_schedule(seeds, t_init, schedule, field, max_halvings=MAX_HALVINGS, bounds=None,
                       threads=1, chunk_size=CHUNK_SIZE):
    """As :func:`integrate_ensemble` with a piecewise-constant step (see :func:`schedule_grid`).

    Useful for fields whose length and time scales grow with t, such as a
    propagator shortly after its source time.
    """
    return _run(seeds, schedule_grid(t_init, schedule), field, max_halvings, bounds, threads,
                chunk_size)


def _run(seeds, ts, field, max_halvings, bounds, threads, chunk_size):
    if not 0 <= max_halvings <= MAX_HALVINGS:
        raise ContractError(f"max_halvings must lie in [0, {MAX_HALVINGS}]")
    field.check_time(ts[0])
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    chunks = [seeds[i:i + chunk_size] for i in range(0, len(seeds), chunk_size)]

    def run(c):
        return _integrate_chunk(c, ts, field, max_halvings, bounds)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return [tr for part in parts for tr in part]


def integrate(seed, t_init, t_end, h, field, max_halvings=MAX_HALVINGS, bounds=None):
    """Single trajectory; failures are recorded in ``status``, never raised."""
    return integrate_ensemble([seed], t_init, t_end, h, field, max_halvings, bounds)[0]


# --- equivariance --------------------------------------------------------------

@dataclass(frozen=True)
class EquivarianceReport:
    ks_x: float
    ks_y: float
    pvalue_x: float
    pvalue_y: float
    efficiency0: float
    efficiency_t: float
    n_samples: int
    n_completed: int


def rejection_sample(density, box, n, rng, grid=64, safety=1.5, max_restarts=5):
    """Draw ``n`` points from ``density`` restricted to ``box`` = (x_lo, x_hi, y_lo, y_hi).

    The envelope is ``safety`` times the maximum on a ``grid`` x ``grid``
    lattice; if a proposal ever exceeds it the envelope is raised and
    sampling restarts.  Returns (samples, acceptance efficiency).
    """
    x0, x1, y0, y1 = box
    gx, gy = np.meshgrid(np.linspace(x0, x1, grid), np.linspace(y0, y1, grid), indexing="ij")
    vals = np.asarray(density(np.stack([gx.ravel(), gy.ravel()], axis=-1)), dtype=float)
    mass = np.nanmean(vals) * (x1 - x0) * (y1 - y0)
    if not mass >= 1e-6:
        raise ConfigError(f"density mass {mass:.3g} in the sampling box is below 1e-6")
    top = safety * np.nanmax(vals)
    for _ in range(max_restarts + 1):
        accepted = []
        got = proposed = 0
        exceeded = 0.0
        while got < n:
            batch = max(1000, int(1.2 * (n - got) / max(got / proposed if proposed else 0.25, 0.01)))
            p = np.stack([rng.uniform(x0, x1, batch), rng.uniform(y0, y1, batch)], axis=-1)
            d = np.asarray(density(p), dtype=float)
            exceeded = max(exceeded, np.nanmax(d))
            if exceeded > top:
                break
            keep = rng.uniform(0, top, batch) < d
            accepted.append(p[keep])
            got += int(keep.sum())
            proposed += batch
        if exceeded > top:
            top = safety * exceeded
            continue
        return np.concatenate(accepted)[:n], got / proposed
    raise ConfigError("rejection sampler could not bound the density")


def equivariance_test(field, density0, density_t, M, t0, t, h, box0, box_t, seed=0,
                      threads=1, bounds=None):
    """Advect M samples of density0 from t0 to t and compare with samples of density_t.

    Reports two-sample Kolmogorov-Smirnov distances per axis.  Members that
    stop early are left out of the comparison and counted in the report.
    """
    if M < 1000:
        raise ContractError(f"need M >= 1000, got {M}")
    rng = np.random.default_rng(seed)
    start, eff0 = rejection_sample(density0, box0, M, rng)
    ref, eff_t = rejection_sample(density_t, box_t, M, rng)
    trajs = integrate_ensemble(start, t0, t, h, field, bounds=bounds, threads=threads)
    done = np.array([tr.final for tr in trajs if tr.status is TrajectoryStatus.COMPLETED])
    if len(done) == 0:
        raise ConfigError("no ensemble member reached the final time")
    kx = stats.ks_2samp(done[:, 0], ref[:, 0])
    ky = stats.ks_2samp(done[:, 1], ref[:, 1])
    return EquivarianceReport(float(kx.statistic), float(ky.statistic), float(kx.pvalue),
                              float(ky.pvalue), eff0, eff_t, M, len(done))
