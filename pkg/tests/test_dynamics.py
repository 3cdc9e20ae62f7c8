import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfbarrier.core import DIRICHLET, NEUMANN
from halfbarrier.dynamics import (MAX_HALVINGS, Barrier, InitialCircle, StepFailure, Trajectory,
                                  TrajectoryStatus, VelocityField, circle_seeds, crosses_halfline,
                                  equivariance_test, integrate, integrate_ensemble,
                                  integrate_schedule, rejection_sample, rk4_step, schedule_grid,
                                  time_grid)
from halfbarrier.errors import ConfigError, ContractError, DomainError, NodeError
from halfbarrier.fields import (constant_field, free_gaussian_field, free_propagator_field,
                                halfline_propagator_field, planewave_field, wall_packet_field,
                                wall_propagator_field)
from halfbarrier.freespace import GaussianPacket2D, free_gaussian_density_1d, free_gaussian_trajectory
from halfbarrier.halfline import PlaneWave
from halfbarrier.wall import WallPacket2D


def nan_disc(center, radius):
    """Constant drift to +x that is undefined inside a disc (a stand-in for a node)."""
    c = np.asarray(center, dtype=float)

    def batch(p, t):
        v = np.tile([1.0, 0.0], (len(p), 1))
        v[np.hypot(*(p - c).T) < radius] = np.nan
        return v
    return VelocityField(batch, name="blocked drift")


# --- single steps ------------------------------------------------------------------

def test_rk4_linear_field_is_exact():
    x0 = np.array([0.5, -0.25])
    field = free_propagator_field(x0)
    x, t = np.array([1.0, 1.0]), 0.1
    c = (x - x0) / t
    while t < 1.0 - 1e-12:
        x = rk4_step(x, t, 1e-2, field)
        t += 1e-2
    assert np.max(np.abs(x - (x0 + c * t))) <= 1e-10


def test_rk4_wall_propagator_over_a_decade():
    tr = integrate((0.3, 0.8), 0.1, 1.0, 1e-3, wall_propagator_field())
    assert np.max(np.abs(tr.positions[:, 1] - 0.8 * tr.times / 0.1)) <= 1e-8


def test_rk4_constant_field():
    tr = integrate((0.25, -0.5), 0.0, 1.0, 1e-2, constant_field((2.0, -1.0)))
    exact = np.array([0.25, -0.5]) + np.outer(tr.times, (2.0, -1.0))
    assert np.max(np.abs(tr.positions - exact)) <= 1e-14


def test_rk4_step_failure_reports_stage():
    field = nan_disc((0.5, 0.0), 0.2)
    with pytest.raises(StepFailure) as info:
        rk4_step((0.0, 0.0), 0.0, 0.5, field)
    # stages sit at x = 0, 0.25, 0.25, 0.5; the last lands in the disc
    assert info.value.stage == 4 and info.value.status is TrajectoryStatus.NODE
    with pytest.raises(ContractError):
        rk4_step((0.0, 0.0), 0.0, -0.1, field)


def test_rk4_step_refuses_to_cross_the_wall():
    with pytest.raises(StepFailure) as info:
        rk4_step((0.0, 0.1), 1.0, 1.0, VelocityField(lambda p, t: np.tile([0.0, -1.0], (len(p), 1)),
                                                     Barrier.WALL))
    assert info.value.status is TrajectoryStatus.LEFT_DOMAIN


# --- grids, circles, trajectories -----------------------------------------------------------

def test_time_grid():
    ts = time_grid(0.1, 0.35, 0.1)
    assert np.allclose(ts, [0.1, 0.2, 0.3, 0.35])
    assert ts[-1] == 0.35
    ts = time_grid(0.0, 1.0, 0.25)
    assert ts.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ContractError):
        time_grid(1.0, 0.5, 0.1)
    with pytest.raises(ContractError):
        time_grid(0.0, 1.0, 2.0)


def test_schedule_grid():
    ts = schedule_grid(0.01, [(0.02, 0.005), (0.1, 0.04)])
    assert np.allclose(ts, [0.01, 0.015, 0.02, 0.06, 0.1])
    assert np.all(np.diff(ts) > 0)


def test_circle_seeds_examples():
    pts = circle_seeds(InitialCircle((0.0, 0.0), 1.0, 4, 0.1))
    assert pts.tolist() == [[1, 0], [0, 1], [-1, 0], [0, -1]]
    assert circle_seeds(InitialCircle((2.0, -1.0), 0.5, 1, 0.1)).tolist() == [[2.5, -1.0]]


@given(st.integers(1, 200), st.floats(1e-3, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_circle_seeds_equispaced(n, rho, cx, cy):
    pts = circle_seeds(InitialCircle((cx, cy), rho, n, 0.01))
    assert len(pts) == n
    d = pts - (cx, cy)
    assert np.allclose(np.hypot(*d.T), rho, rtol=1e-12)
    ang = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    assert ang[0] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(np.diff(ang), 2 * np.pi / n, atol=1e-9)


def test_circle_validation():
    with pytest.raises(ContractError):
        InitialCircle((0, 0), 0.0, 4, 0.1)
    with pytest.raises(ContractError):
        InitialCircle((0, 0), 1.0, 0, 0.1)
    with pytest.raises(ContractError):
        InitialCircle((0, 0), 1.0, 4, -0.1)


def test_trajectory_samples_and_steps():
    tr = integrate((0.0, 0.0), 0.0, 0.105, 0.01, constant_field((1.0, 0.0)))
    assert isinstance(tr, Trajectory)
    assert np.all(np.diff(tr.times) > 0)
    steps = np.diff(tr.times)
    assert np.allclose(steps[:-1], 0.01) and steps[-1] == pytest.approx(0.005)
    assert len(tr) == len(tr.samples) == 12
    assert tr.samples[0] == (0.0, (0.0, 0.0))


def test_free_packet_centre_moves_classically():
    pk = GaussianPacket2D((0.3, -0.2), (1.0, 0.5), 0.2)
    tr = integrate(pk.center, 0.0, 2.0, 1e-2, free_gaussian_field(pk))
    exact = np.array(pk.center) + np.outer(tr.times, np.array(pk.momentum) / 0.5)
    assert np.max(np.abs(tr.positions - exact)) <= 1e-6


def test_wall_propagator_monotone():
    seeds = circle_seeds(InitialCircle((0.0, 1.0), 0.5, 16, 0.05))
    for tr in integrate_ensemble(seeds, 0.05, 2.0, 1e-2, wall_propagator_field()):
        assert tr.status is TrajectoryStatus.COMPLETED
        assert np.all(np.diff(tr.positions[:, 1]) > 0) and tr.positions[:, 1].min() > 0


def test_bounds_stop_trajectories():
    tr = integrate((0.0, 0.0), 0.0, 1.0, 0.01, constant_field((1.0, 0.0)), bounds=(-1, 0.5, -1, 1))
    assert tr.status is TrajectoryStatus.LEFT_DOMAIN
    assert tr.final[0] > 0.5 and tr.times[-1] < 1.0


def test_node_stops_trajectory_after_bounded_halving():
    calls = []
    inner = nan_disc((0.5, 0.0), 0.1)

    def batch(p, t):
        calls.append(len(p))
        return inner.batch(p, t)
    tr = integrate((0.0, 0.0), 0.0, 1.0, 0.1, VelocityField(batch))
    assert tr.status is TrajectoryStatus.NODE
    assert tr.final[0] < 0.4 + 1e-12
    assert tr.failure["h"] == pytest.approx(0.1 / 2**MAX_HALVINGS)
    assert len(calls) < 4 * 2 * (MAX_HALVINGS + 1) * 20


def test_halving_steps_around_a_corner():
    # a smooth field whose full steps would cut across the barrier near the tip
    # rotation about the tip runs into the barrier from above; halving creeps
    # up to it and then stops the trajectory instead of crossing
    tr = integrate((0.3, 0.4), 0.0, 4.0, 0.5, VelocityField(
        lambda p, t: np.stack([-p[:, 1], p[:, 0]], axis=-1), Barrier.HALFLINE))
    assert tr.status is TrajectoryStatus.LEFT_DOMAIN
    assert tr.failure["stage"] > 0 and tr.failure["h"] == pytest.approx(0.5 / 2**MAX_HALVINGS)
    assert tr.positions[:, 1].min() > 0 and tr.final[0] < 0


def test_crosses_halfline():
    p = np.array([[-1.0, 1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, 0.5], [-2.0, 0.5]])
    q = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 0.5], [3.0, -0.5], [2.0, -0.5]])
    # the last segment passes through the tip itself
    assert crosses_halfline(p, q).tolist() == [True, False, False, False, True]
    assert crosses_halfline(np.array([[-1.0, 1.0]]), np.array([[-1.0, 0.0]])).tolist() == [True]


def test_halfline_fields_never_cross():
    seeds = circle_seeds(InitialCircle((-2.0, 1.0), 0.5, 32, 0.05))
    for bc in (NEUMANN, DIRICHLET):
        trajs = integrate_ensemble(seeds, 0.05, 1.0, 2e-3, halfline_propagator_field((4.0, -4.0), bc))
        for tr in trajs:
            p = tr.positions
            assert not crosses_halfline(p[:-1], p[1:]).any()


def test_field_domain_checks():
    f = wall_propagator_field()
    with pytest.raises(DomainError):
        f.evaluate((0.0, -1.0), 1.0)
    with pytest.raises(DomainError):
        f.evaluate((0.0, 1.0), 0.0)
    with pytest.raises(NodeError):
        nan_disc((0.0, 0.0), 1.0).evaluate((0.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        integrate((0.0, 1.0), 0.0, 1.0, 0.1, f)


# --- ensembles --------------------------------------------------------------------------

def _wall_ensemble(threads, chunk):
    pk = WallPacket2D((-4.0, 4.0), (math.sqrt(2), -math.sqrt(2)), 1.0)
    seeds = circle_seeds(InitialCircle((-4.0, 4.0), 1.0, 40, 0.01))
    return integrate_ensemble(seeds, 0.01, 1.0, 5e-3, wall_packet_field(pk, DIRICHLET),
                              threads=threads, chunk_size=chunk)


def test_threads_reproduce_serial_results():
    a, b, c = _wall_ensemble(1, 7), _wall_ensemble(4, 7), _wall_ensemble(1, 7)
    for x, y, z in zip(a, b, c):
        assert np.array_equal(x.positions, y.positions) and np.array_equal(x.positions, z.positions)
        assert np.array_equal(x.times, y.times) and x.status is y.status


def test_chunking_does_not_change_samples():
    for x, y in zip(_wall_ensemble(1, 7), _wall_ensemble(1, 256)):
        assert np.array_equal(x.positions, y.positions)


def test_no_two_trajectories_meet():
    trajs = _wall_ensemble(1, 256)
    P = np.stack([t.positions for t in trajs], axis=1)
    for k in range(0, len(P), 10):
        d = np.hypot(*(P[k][:, None, :] - P[k][None, :, :]).transpose(2, 0, 1))
        np.fill_diagonal(d, np.inf)
        assert d.min() > 1e-9


def test_schedule_matches_uniform_grid_when_constant():
    field = wall_propagator_field()
    seeds = [(0.0, 1.0), (1.0, 2.0)]
    a = integrate_schedule(seeds, 0.1, [(0.5, 0.01), (1.0, 0.01)], field)
    b = integrate_ensemble(seeds, 0.1, 1.0, 0.01, field)
    for x, y in zip(a, b):
        assert np.allclose(x.positions, y.positions, rtol=1e-13)


def test_rk4_fourth_order():
    pk = GaussianPacket2D((0.3, -0.2), (1.0, 0.5), 0.2)
    seed = np.array([0.5, 0.1])
    exact = free_gaussian_trajectory(seed, 0.0, 0.5, pk)
    err = [np.linalg.norm(integrate(seed, 0.0, 0.5, h, free_gaussian_field(pk)).final - exact)
           for h in (4e-3, 2e-3, 1e-3)]
    for e0, e1 in zip(err, err[1:]):
        assert 8 <= e0 / e1 <= 32


def test_planewave_field_is_stationary():
    f = planewave_field(PlaneWave(5.0, math.pi / 2), NEUMANN)
    p = np.array([[0.5, -2.0], [1.0, 1.0]])
    assert np.array_equal(f.batch(p, 0.0), f.batch(p, 123.0))


# --- equivariance ---------------------------------------------------------------------------

def test_rejection_sampler_matches_density():
    rng = np.random.default_rng(0)
    dens = lambda p: np.exp(-0.5 * np.sum((p - 1.0) ** 2, axis=-1))
    s, eff = rejection_sample(dens, (-4, 6, -4, 6), 20000, rng)
    assert s.shape == (20000, 2)
    assert np.allclose(s.mean(axis=0), 1.0, atol=0.03) and np.allclose(s.std(axis=0), 1.0, atol=0.03)
    assert 0 < eff < 1


def test_rejection_sampler_empty_box():
    with pytest.raises(ConfigError):
        rejection_sample(lambda p: np.zeros(len(p)), (0, 1, 0, 1), 100, np.random.default_rng(0))


def _free_density(pk, t):
    def f(p):
        return (free_gaussian_density_1d(p[:, 0], t, pk.axis(0))
                * free_gaussian_density_1d(p[:, 1], t, pk.axis(1)))
    return f


def test_equivariance_free_small_ensemble():
    pk = GaussianPacket2D((0.0, 0.0), (1.0, -0.5), 0.5)
    rep = equivariance_test(free_gaussian_field(pk), _free_density(pk, 0.0), _free_density(pk, 1.0),
                            4000, 0.0, 1.0, 0.02, (-3, 3, -3, 3), (-4, 8, -7, 5), seed=1)
    assert rep.ks_x <= 0.05 and rep.ks_y <= 0.05
    assert rep.n_completed == rep.n_samples == 4000


def test_equivariance_detects_wrong_field():
    pk = GaussianPacket2D((0.0, 0.0), (1.0, -0.5), 0.5)
    rep = equivariance_test(constant_field((2.0, -1.0)), _free_density(pk, 0.0), _free_density(pk, 1.0),
                            4000, 0.0, 1.0, 0.02, (-3, 3, -3, 3), (-4, 8, -7, 5), seed=1)
    assert max(rep.ks_x, rep.ks_y) > 0.1


def test_equivariance_uniform_translation():
    box = lambda x0, y0: (lambda p: ((p[:, 0] >= x0) & (p[:, 0] <= x0 + 1)
                                     & (p[:, 1] >= y0) & (p[:, 1] <= y0 + 1)).astype(float))
    rep = equivariance_test(constant_field((0.5, 0.25)), box(0, 0), box(1, 0.5), 10000, 0.0, 2.0, 0.1,
                            (0, 1, 0, 1), (1, 2, 0.5, 1.5), seed=2)
    assert rep.ks_x <= 0.03 and rep.ks_y <= 0.03


def test_equivariance_contract():
    with pytest.raises(ContractError):
        equivariance_test(constant_field((0, 0)), None, None, 500, 0.0, 1.0, 0.1, None, None)
