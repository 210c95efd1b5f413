import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blowup_lab.model import make_params
from blowup_lab.solver import (
    CustomTable, FieldSnapshot, Flat, GaussianBump, GridSpec, InsufficientGrowth, SolverSettings,
    StepRejected, estimate_T, init_state, laplacian, max_stable_dt, periodic_hessian,
    record_snapshots, rhs, run_to_blowup, schedule_snapshots, step,
)


def test_grid_validation():
    with pytest.raises(ValueError, match="nx"):
        GridSpec(1, 4.0, 8)
    with pytest.raises(ValueError, match="L"):
        GridSpec(1, 1.5, 32)
    g = GridSpec(1, 4.0, 64)
    assert g.dx == 0.125
    assert g.x1d[0] == -4.0 and g.x1d[-1] == pytest.approx(4.0 - 0.125)


def test_bump_width_must_be_resolved():
    g = GridSpec(1, 4.0, 32)  # dx = 0.25
    with pytest.raises(ValueError, match="unresolved"):
        init_state(g, GaussianBump(width=0.4))


def test_custom_table_shape_checked():
    g = GridSpec(1, 4.0, 32)
    with pytest.raises(ValueError, match="shape"):
        init_state(g, CustomTable(np.zeros(16), np.zeros(16)))


@pytest.mark.parametrize("order,expected", [(2, 2.0), (4, 4.0)])
def test_laplacian_order(order, expected):
    errs = []
    for nx in (32, 64):
        g = GridSpec(1, math.pi, nx)
        x = g.x1d
        errs.append(np.max(np.abs(laplacian(np.sin(x), g.dx, order) + np.sin(x))))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(expected, abs=0.1)


def test_laplacian_2d_periodic():
    g = GridSpec(2, math.pi, 64)
    X, Y = g.coords()
    f = np.cos(X) * np.sin(2 * Y)
    lap = laplacian(f, g.dx, 4)
    assert np.max(np.abs(lap + 5 * f)) < 1e-4


def test_hessian_mixed_partial_second_order():
    errs = []
    for nx in (64, 128):
        g = GridSpec(2, math.pi, nx)
        X, Y = g.coords()
        H = periodic_hessian(np.sin(X) * np.sin(Y), g.dx)  # (xx, xy, yy)
        errs.append(np.max(np.abs(H[1] - np.cos(X) * np.cos(Y))))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.05)


def test_single_step_from_flat_velocity():
    # u_t = 1 everywhere, dt = 1e-4: RK4 on v' = v^2 against 1/(1 - dt)
    g = GridSpec(1, 4.0, 32)
    s = step(init_state(g, Flat(0.0, 1.0)), g, 2.0, 1e-4)
    assert np.all(np.abs(s.ut - 1.0 / (1.0 - 1e-4)) <= 1e-12)


def test_step_rejects_unstable_dt():
    g = GridSpec(1, 4.0, 32)
    st0 = init_state(g, Flat(0.0, 10.0))
    with pytest.raises(StepRejected):
        step(st0, g, 2.0, 1.0)
    with pytest.raises(StepRejected):
        step(st0, g, 2.0, -1e-3)


def test_rhs_rejects_nonfinite():
    g = GridSpec(1, 4.0, 32)
    bad = FieldSnapshot(0.0, np.zeros(32), np.full(32, np.nan))
    with pytest.raises(FloatingPointError):
        rhs(bad, g, 2.0)


def test_rk4_time_order():
    # flat data isolates the time integrator; halving dt should cut the error ~16x
    g = GridSpec(1, 4.0, 16)
    exact = 1.0 / (1.0 - 0.5)
    errs = []
    for n in (50, 100):
        s = init_state(g, Flat(0.0, 1.0))
        dt = 0.5 / n
        for _ in range(n):
            s = step(s, g, 2.0, dt, safety=1.0)
        errs.append(abs(s.ut[0] - exact))
    assert errs[0] / errs[1] >= 12.0


def test_spatial_second_order_linear_wave():
    # u = cos(x) sin(t) solves the linear wave equation
    errs = []
    for nx in (32, 64):
        g = GridSpec(1, math.pi, nx)
        x = g.x1d
        s = FieldSnapshot(0.0, np.zeros(nx), np.cos(x))
        dt = 0.2 * g.dx
        n = int(round(1.0 / dt))
        dt = 1.0 / n
        for _ in range(n):
            s = step(s, g, 2.0, dt, nonlinear=False)
        errs.append(np.max(np.abs(s.u - np.cos(x) * math.sin(1.0))))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.15)


def test_linear_wave_energy_conserved():
    g = GridSpec(1, 4.0, 128)
    s = init_state(g, GaussianBump(width=0.8, u0_amp=1.0, u1_amp=0.0))

    def energy(st):
        ux = (np.roll(st.u, -1) - st.u) / g.dx
        return 0.5 * np.sum(st.ut**2 + ux**2) * g.dx

    e0 = energy(s)
    for _ in range(200):
        s = step(s, g, 2.0, 0.25 * g.dx, nonlinear=False)
    assert energy(s) == pytest.approx(e0, rel=1e-3)


def test_mirror_symmetry_preserved():
    g = GridSpec(1, 4.0, 64)
    prm = make_params(1, 2.0)
    s = init_state(g, GaussianBump(width=1.0))
    for _ in range(50):
        s = step(s, g, prm.p, 0.01)
    # x -> -x maps grid index i to (nx - i) mod nx
    mirrored = np.roll(s.ut[::-1], 1)
    assert np.max(np.abs(s.ut - mirrored)) <= 1e-12 * np.max(np.abs(s.ut))


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=-1.5, max_value=1.5))
def test_finite_propagation(c):
    # compactly supported data on |x - c| < 1; after time 1 nothing reaches |x - c| > 2 + stencil spread
    g = GridSpec(1, 6.0, 192)
    x = g.x1d
    r = np.clip(1.0 - (x - c) ** 2, 0.0, None)
    u1 = 0.5 * r**5
    s = init_state(g, CustomTable(np.zeros_like(x), u1))
    dt = 0.25 * g.dx
    for _ in range(int(round(1.0 / dt))):
        s = step(s, g, 2.0, dt)
    far = np.abs(x - c) > 3.0
    # the discrete operator leaks beyond the cone only at rounding / tiny dispersive level
    assert np.max(np.abs(s.ut[far])) < 1e-6 * np.max(np.abs(s.ut))


def test_max_stable_dt_branches():
    assert max_stable_dt(0.0, 0.1, 2.0, 0.5, 0.02) == pytest.approx(0.05)
    assert max_stable_dt(100.0, 0.1, 2.0, 0.5, 0.02) == pytest.approx(0.02 / 200.0)


@pytest.mark.parametrize("p,T", [(2.0, 1.0), (3.0, 0.5), (1.5, 2.0)])
def test_estimate_T_on_synthetic_series(p, T):
    t = T - np.logspace(-1, -7, 60)
    sup = ((p - 1.0) * (T - t)) ** (-1.0 / (p - 1.0))
    est = estimate_T(t, sup, p, min_growth=1.0)
    assert est.detected
    assert est.T_est == pytest.approx(T, abs=1e-9)


def test_estimate_T_insufficient():
    with pytest.raises(InsufficientGrowth):
        estimate_T([0.0, 0.1], [1.0, 1.1], 2.0)


def test_no_blowup_zero_data():
    g = GridSpec(1, 4.0, 32)
    traj, est = run_to_blowup(g, Flat(0.0, 0.0), make_params(1, 2.0), SolverSettings(t_max=0.5))
    assert not traj.detected and not est.detected and math.isnan(est.T_est)


@pytest.mark.parametrize("p,T", [(2.0, 1.0), (3.0, 0.5), (5.0, 0.25)])
def test_flat_blowup_time(p, T):
    g = GridSpec(1, 4.0, 32)
    traj, est = run_to_blowup(g, Flat(0.0, 1.0), make_params(1, p))
    assert traj.detected
    assert est.T_est == pytest.approx(T, abs=1e-7)


def test_schedule_snapshots_uniform_in_s():
    times = schedule_snapshots(1.0, 0.0, 0.5, 2.0)
    s = [-math.log(1.0 - t) for t in times]
    assert np.allclose(s, [0.0, 0.5, 1.0, 1.5, 2.0], atol=1e-12)
    assert schedule_snapshots(1.0, 3.0, 0.5, 2.0) == []


def test_record_snapshots_lands_exactly():
    g = GridSpec(1, 4.0, 32)
    times = [0.1, 0.25, 0.5, 0.75]
    traj = record_snapshots(g, Flat(0.0, 1.0), make_params(1, 2.0), times)
    assert [sn.t for sn in traj.snapshots] == times
    for sn in traj.snapshots:
        assert sn.ut[0] == pytest.approx(1.0 / (1.0 - sn.t), rel=1e-6)


def test_record_snapshots_rejects_unsorted():
    g = GridSpec(1, 4.0, 32)
    with pytest.raises(ValueError):
        record_snapshots(g, Flat(), make_params(1, 2.0), [0.5, 0.2])
