"""Scenario runner and command-line interface.

    halfbarrier list
    halfbarrier run <scenario-file-or-name> [--out-dir D] [--threads N] [--h H] [--order auto|N]
    halfbarrier density <scenario-file-or-name> [--out-dir D] [--threads N]
    halfbarrier selftest

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import json
import sys
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fields
from .dynamics import circle_seeds, integrate_ensemble, integrate_schedule
from .errors import BohmError, ConfigError
from .freespace import GaussianPacket2D, free_gaussian_psi, free_propagator, free_propagator_1d
from .halfline import TIP_RADIUS, halfline_propagator, planewave_psi
from .quadrature import HalflinePacket, initial_psi
from .scenario import FieldKind, canned, canned_names, load_scenario
from .wall import WallPacket2D, wall_propagator_1d, wall_psi_2d

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

HALFLINE_KINDS = {FieldKind.HALFLINE_PROPAGATOR, FieldKind.HALFLINE_PACKET, FieldKind.PLANE_WAVE,
                  FieldKind.PLANE_WAVE_DIRICHLET}


def _packet(s):
    p = s.packet
    if s.field_kind is FieldKind.WALL_PACKET:
        return WallPacket2D(p.center, p.momentum, p.sigma)
    return GaussianPacket2D(p.center, p.momentum, p.sigma)


def _halfline_packet(s):
    q = s.quadrature
    return HalflinePacket(_packet(s), s.bc, q.order, nsigma=q.nsigma, consts=s.constants,
                          max_order=q.max_order)


def build_field(s):
    """The :class:`VelocityField` described by scenario ``s``."""
    k, c = s.field_kind, s.constants
    if k is FieldKind.FREE_PACKET:
        return fields.free_gaussian_field(_packet(s), c)
    if k is FieldKind.FREE_PROPAGATOR:
        return fields.free_propagator_field(s.source)
    if k is FieldKind.WALL_PACKET:
        return fields.wall_packet_field(_packet(s), s.bc, c)
    if k is FieldKind.WALL_PROPAGATOR:
        return fields.wall_propagator_field()
    if k is FieldKind.HALFLINE_PROPAGATOR:
        return fields.halfline_propagator_field(s.source, s.bc, c)
    if k is FieldKind.HALFLINE_PACKET:
        q = s.quadrature
        return fields.halfline_packet_field(_packet(s), s.bc, q.order, c, q.nsigma, q.max_order)
    return fields.planewave_field(s.wave, s.bc, c)


def psi_function(s):
    """``f(points, t)`` giving psi at (n, 2) points; NaN where psi is not defined."""
    k, c = s.field_kind, s.constants
    if k is FieldKind.FREE_PACKET:
        pk = _packet(s)
        return lambda p, t: free_gaussian_psi(p, t, pk, c)
    if k is FieldKind.FREE_PROPAGATOR:
        return lambda p, t: free_propagator(p, s.source, t, c)
    if k is FieldKind.WALL_PACKET:
        pk = _packet(s)

        def wall(p, t):
            out = np.full(len(p), np.nan, complex)
            up = p[:, 1] >= 0
            out[up] = wall_psi_2d(p[up], t, pk, s.bc, c)
            return out
        return wall
    if k is FieldKind.WALL_PROPAGATOR:
        def wall_prop(p, t):
            out = np.full(len(p), np.nan, complex)
            up = p[:, 1] >= 0
            out[up] = (free_propagator_1d(p[up, 0], 0.0, t, c)
                       * wall_propagator_1d(p[up, 1], 0.0, t, s.bc, c))
            return out
        return wall_prop
    if k is FieldKind.HALFLINE_PROPAGATOR:
        return lambda p, t: halfline_propagator(p, s.source, t, s.bc, c)
    if k is FieldKind.HALFLINE_PACKET:
        hp = _halfline_packet(s)

        def packet(p, t):
            if t == 0:
                return initial_psi(p, hp.packet, c)
            return hp.psi(p, t, adaptive=False)
        return packet
    return lambda p, t: planewave_psi(p, s.wave, s.bc)


def sample_density(s, grid=None, threads=1):
    """|psi| on a grid, shape (ny, nx), row j at y_j.

    ``grid`` defaults to the scenario's density spec.  Cells where psi is not
    defined (the barrier tip, the far side of the wall) hold NaN.
    """
    grid = grid or s.density
    if grid is None:
        raise ConfigError(f"scenario {s.name!r} has no density grid (density.* keys)")
    xs, ys = grid.axes()
    f = psi_function(s)
    tip = s.field_kind in HALFLINE_KINDS

    def row(y):
        pts = np.stack([xs, np.full_like(xs, y)], axis=-1)
        ok = ~(np.hypot(pts[:, 0], pts[:, 1]) < TIP_RADIUS) if tip else np.ones(len(xs), bool)
        out = np.full(len(xs), np.nan)
        if ok.any():
            out[ok] = np.abs(np.asarray(f(pts[ok], grid.time)))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, ys))
    else:
        rows = [row(y) for y in ys]
    return np.array(rows)


# --- files ---------------------------------------------------------------------

def _g(v):
    return format(float(v), ".17g")


def write_trajectories(path, trajectories):
    """CSV with columns traj_id, t, x, y, status (status is the run outcome)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("traj_id,t,x,y,status\n")
        for i, tr in enumerate(trajectories):
            st = tr.status.value
            for t, (x, y) in zip(tr.times, tr.positions):
                fh.write(f"{i},{_g(t)},{_g(x)},{_g(y)},{st}\n")


def read_trajectories(path):
    """Rows of the trajectory CSV as (traj_id int array, t, x, y float arrays, status list)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "traj_id,t,x,y,status":
            raise ConfigError(f"{path}: not a trajectory file")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    ids = np.array([int(r[0]) for r in rows])
    t, x, y = (np.array([float(r[k]) for r in rows]) for k in (1, 2, 3))
    return ids, t, x, y, [r[4] for r in rows]


def describe_field(s):
    k = s.field_kind
    parts = [k.value]
    if s.bc is not None:
        parts.append(f"bc={s.bc.value}")
    if s.packet is not None:
        parts += [f"center={_g(s.packet.center[0])};{_g(s.packet.center[1])}",
                  f"momentum={_g(s.packet.momentum[0])};{_g(s.packet.momentum[1])}",
                  f"sigma={_g(s.packet.sigma)}"]
    if s.source is not None:
        parts.append(f"x0={_g(s.source[0])};{_g(s.source[1])}")
    if s.wave is not None:
        parts += [f"k0={_g(s.wave.k0)}", f"theta0={_g(s.wave.theta0)}"]
    return " ".join(parts)


def write_density(path, grid, values, description):
    """Four header lines (bounds, resolution, time, field) then one row of values per y."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bounds," + ",".join(_g(b) for b in grid.bounds) + "\n")
        fh.write(f"resolution,{grid.resolution[0]},{grid.resolution[1]}\n")
        fh.write(f"time,{_g(grid.time)}\n")
        fh.write(f"field,{description}\n")
        for row in values:
            fh.write(",".join("nan" if not np.isfinite(v) else _g(v) for v in row) + "\n")


def read_density(path):
    """(bounds, (nx, ny), time, description, values of shape (ny, nx))."""
    with open(path, encoding="utf-8") as fh:
        head = [fh.readline().rstrip("\n").split(",", 1) for _ in range(4)]
        if [h[0] for h in head] != ["bounds", "resolution", "time", "field"]:
            raise ConfigError(f"{path}: not a density file")
        bounds = tuple(float(v) for v in head[0][1].split(","))
        res = tuple(int(v) for v in head[1][1].split(","))
        values = np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])
    return bounds, res, float(head[2][1]), head[3][1], values.reshape(res[1], res[0])


# --- running -------------------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    name: str
    n_trajectories: int
    status_counts: dict
    wall_time: float
    trajectory_file: str
    density_file: str = None

    def as_dict(self):
        return {"name": self.name, "n_trajectories": self.n_trajectories,
                "status_counts": self.status_counts, "wall_time_s": round(self.wall_time, 3),
                "trajectory_file": self.trajectory_file, "density_file": self.density_file}


def integrate_scenario(s, threads=1):
    """Trajectories of the scenario's initial circle, in seed order."""
    field = build_field(s)
    seeds = circle_seeds(s.circle)
    it = s.integration
    if it.schedule is not None:
        return integrate_schedule(seeds, s.circle.t_init, it.schedule, field, bounds=it.bounds,
                                  threads=threads)
    return integrate_ensemble(seeds, s.circle.t_init, it.t_end, it.h, field, bounds=it.bounds,
                              threads=threads)


def run_scenario(s, out_dir=".", threads=1, density=True):
    """Integrate the scenario, write its trajectory file and, if specified, its density file."""
    start = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajs = integrate_scenario(s, threads)
    tpath = out / s.trajectory_path
    write_trajectories(tpath, trajs)
    dpath = None
    if density and s.density is not None:
        dpath = out / s.density_path
        write_density(dpath, s.density, sample_density(s, threads=threads), describe_field(s))
    counts = dict(sorted(Counter(tr.status.value for tr in trajs).items()))
    return RunReport(s.name, len(trajs), counts, time.perf_counter() - start, str(tpath),
                     None if dpath is None else str(dpath))


def _parser():
    ap = argparse.ArgumentParser(prog="halfbarrier",
                                 description="Bohmian trajectories near a half-line barrier.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the canned scenarios")
    for name, helptext in (("run", "integrate a scenario and write its files"),
                           ("density", "write only the density grid of a scenario")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario", help="scenario file, or the name of a canned scenario")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        if name == "run":
            p.add_argument("--h", type=float, help="uniform RK4 step, replacing the scenario's")
            p.add_argument("--order", help="quadrature order per axis, or 'auto'")
    sub.add_parser("selftest", help="run the built-in invariant checks")
    return ap


def _main(args):
    if args.command == "list":
        for name in canned_names():
            print(f"{name:28s} {canned(name).description}")
        return EXIT_OK
    if args.command == "selftest":
        from .selftest import run_selftest
        return EXIT_OK if run_selftest() else EXIT_NUMERIC
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    s = load_scenario(args.scenario)
    if args.command == "density":
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / s.density_path
        write_density(path, s.density or _no_grid(s), sample_density(s, threads=args.threads),
                      describe_field(s))
        print(json.dumps({"name": s.name, "density_file": str(path)}))
        return EXIT_OK
    s = s.with_overrides(h=args.h, order=args.order)
    print(json.dumps(run_scenario(s, args.out_dir, args.threads).as_dict()))
    return EXIT_OK


def _no_grid(s):
    raise ConfigError(f"scenario {s.name!r} has no density grid (density.* keys)")


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return _main(args)
    except OSError as exc:
        print(f"halfbarrier: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"halfbarrier: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, BohmError, ValueError) as exc:
        print(f"halfbarrier: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
