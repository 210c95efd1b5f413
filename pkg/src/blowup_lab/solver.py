"""Method-of-lines integrator for u_tt - Δu = u_t|u_t|^(p-1) on a periodic box.

The state is the first-order pair (u, v = u_t).  Time stepping is classical
RK4 with an adaptive step that shrinks like the ODE time scale near blow-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .model import ModelParams


class StepRejected(ValueError):
    """dt violates the CFL or nonlinear stiffness guard."""


class InsufficientGrowth(ValueError):
    """The sup|u_t| series does not support a blow-up time fit."""


@dataclass(frozen=True)
class GridSpec:
    N: int
    L: float
    nx: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.nx < 16:
            raise ValueError(f"nx must be >= 16, got {self.nx}")
        if not self.L >= 2.0:
            raise ValueError(f"half-width L must be >= 2 so the unit ball fits, got {self.L}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def shape(self) -> tuple:
        return (self.nx,) * self.N

    @property
    def x1d(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.nx)

    def coords(self) -> list:
        """Coordinate arrays, one per dimension, broadcast to the grid shape."""
        return np.meshgrid(*([self.x1d] * self.N), indexing="ij")


@dataclass(frozen=True)
class FieldSnapshot:
    t: float
    u: np.ndarray
    ut: np.ndarray


# --- initial conditions ----------------------------------------------------


@dataclass(frozen=True)
class Flat:
    u0: float = 0.0
    u1: float = 1.0


@dataclass(frozen=True)
class GaussianBump:
    center: tuple = (0.0,)
    width: float = 1.0
    u0_amp: float = 0.0
    u1_amp: float = 1.0
    u0_base: float = 0.0
    u1_base: float = 0.0


@dataclass(frozen=True)
class CustomTable:
    u0: np.ndarray
    u1: np.ndarray


InitialCondition = Union[Flat, GaussianBump, CustomTable]


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise ValueError(f"initial condition parameter {name} is not finite")


def init_state(grid: GridSpec, ic: InitialCondition) -> FieldSnapshot:
    if isinstance(ic, Flat):
        _check_finite(u0=ic.u0, u1=ic.u1)
        u = np.full(grid.shape, float(ic.u0))
        ut = np.full(grid.shape, float(ic.u1))
    elif isinstance(ic, GaussianBump):
        _check_finite(
            center=ic.center, width=ic.width, u0_amp=ic.u0_amp, u1_amp=ic.u1_amp,
            u0_base=ic.u0_base, u1_base=ic.u1_base,
        )
        if ic.width < 2.0 * grid.dx:
            raise ValueError(f"bump width {ic.width} < 2*dx = {2 * grid.dx} is unresolved")
        center = np.broadcast_to(np.asarray(ic.center, dtype=float), (grid.N,))
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords(), center))
        profile = np.exp(-r2 / ic.width**2)
        u = ic.u0_base + ic.u0_amp * profile
        ut = ic.u1_base + ic.u1_amp * profile
    elif isinstance(ic, CustomTable):
        u = np.array(ic.u0, dtype=float)
        ut = np.array(ic.u1, dtype=float)
        if u.shape != grid.shape or ut.shape != grid.shape:
            raise ValueError(f"custom table shape must be {grid.shape}")
        _check_finite(u0=u, u1=ut)
    else:
        raise TypeError(f"unknown initial condition {ic!r}")
    return FieldSnapshot(t=0.0, u=u, ut=ut)


# --- spatial operator -------------------------------------------------------


def laplacian(f: np.ndarray, dx: float, order: int = 2) -> np.ndarray:
    """Periodic centered Laplacian of second or fourth order."""
    out = np.zeros_like(f)
    for axis in range(f.ndim):
        if order == 2:
            out += np.roll(f, 1, axis) - 2.0 * f + np.roll(f, -1, axis)
        elif order == 4:
            out += (
                -np.roll(f, 2, axis) + 16.0 * np.roll(f, 1, axis) - 30.0 * f
                + 16.0 * np.roll(f, -1, axis) - np.roll(f, -2, axis)
            ) / 12.0
        else:
            raise ValueError(f"stencil order must be 2 or 4, got {order}")
    return out / dx**2


def periodic_gradient(f: np.ndarray, dx: float) -> list:
    return [(np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2.0 * dx) for ax in range(f.ndim)]


def periodic_hessian(f: np.ndarray, dx: float) -> list:
    """All second partials (i <= j) by centered periodic stencils."""
    out = []
    for i in range(f.ndim):
        for j in range(i, f.ndim):
            if i == j:
                out.append((np.roll(f, -1, i) - 2.0 * f + np.roll(f, 1, i)) / dx**2)
            else:
                fi = (np.roll(f, -1, i) - np.roll(f, 1, i)) / (2.0 * dx)
                out.append((np.roll(fi, -1, j) - np.roll(fi, 1, j)) / (2.0 * dx))
    return out


def source(ut: np.ndarray, p: float) -> np.ndarray:
    return ut * np.abs(ut) ** (p - 1.0)


def rhs(state: FieldSnapshot, grid: GridSpec, p: float, *, stencil: int = 2,
        nonlinear: bool = True):
    """Time derivative (du, dut) of the first-order system."""
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.ut))):
        raise FloatingPointError(f"non-finite field at t={state.t}")
    dut = laplacian(state.u, grid.dx, stencil)
    if nonlinear:
        dut = dut + source(state.ut, p)
    return state.ut.copy(), dut


def max_stable_dt(sup_ut: float, dx: float, p: float, cfl: float, safety: float) -> float:
    """Largest step allowed by both the CFL and the nonlinear stiffness guard."""
    dt = cfl * dx
    if sup_ut > 0.0:
        dt = min(dt, safety / (p * sup_ut ** (p - 1.0)))
    return dt


def step(state: FieldSnapshot, grid: GridSpec, p: float, dt: float, *,
         cfl: float = 0.5, safety: float = 0.1, stencil: int = 2,
         nonlinear: bool = True) -> FieldSnapshot:
    """One classical RK4 step.  Rejects dt beyond the stability guards."""
    if not dt > 0.0:
        raise StepRejected(f"dt must be positive, got {dt}")
    sup = float(np.max(np.abs(state.ut)))
    limit = max_stable_dt(sup, grid.dx, p, cfl, safety) if nonlinear else cfl * grid.dx
    if dt > limit * (1.0 + 1e-12):
        raise StepRejected(f"dt={dt} exceeds stability limit {limit}")

    def f(u, ut, t):
        return rhs(FieldSnapshot(t, u, ut), grid, p, stencil=stencil, nonlinear=nonlinear)

    u, ut, t = state.u, state.ut, state.t
    k1u, k1v = f(u, ut, t)
    k2u, k2v = f(u + 0.5 * dt * k1u, ut + 0.5 * dt * k1v, t + 0.5 * dt)
    k3u, k3v = f(u + 0.5 * dt * k2u, ut + 0.5 * dt * k2v, t + 0.5 * dt)
    k4u, k4v = f(u + dt * k3u, ut + dt * k3v, t + dt)
    u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    ut_new = ut + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return FieldSnapshot(t=t + dt, u=u_new, ut=ut_new)


# --- blow-up detection -----------------------------------------------------


@dataclass(frozen=True)
class BlowupEstimate:
    T_est: float
    fit_window: tuple
    fit_residual: float
    detected: bool


@dataclass
class SolverSettings:
    cfl: float = 0.5
    # 0.1 leaves RK4 at ~2e-4 relative error near blow-up; 0.02 reaches ~4e-7
    safety: float = 0.02
    blowup_threshold: float = 1e8
    t_max: float = 2.0
    stencil: int = 2
    min_growth: float = 1e3
    fit_points: Optional[int] = None
    # fit samples must sit at least this many ulps of t away from T
    min_gap_ulps: float = 100.0


@dataclass
class Trajectory:
    t: np.ndarray
    sup_ut: np.ndarray
    dt: np.ndarray
    detected: bool
    snapshots: list = field(default_factory=list)
    sign_change: bool = False


def estimate_T(t: Sequence[float], sup_ut: Sequence[float], p: float, *,
               min_growth: float = 1e3, min_points: int = 8,
               max_points: Optional[int] = None,
               min_gap_ulps: float = 0.0) -> BlowupEstimate:
    """Fit ``sup|u_t|^{-(p-1)} = (p-1)(T - t)`` over the high-growth tail.

    Samples whose implied distance to T is below ``min_gap_ulps`` ulps of t
    carry no timing information and are dropped.
    """
    t = np.asarray(t, dtype=float)
    y_raw = np.asarray(sup_ut, dtype=float)
    with np.errstate(divide="ignore"):
        gap = y_raw ** (-(p - 1.0)) / (p - 1.0)
    keep = (y_raw > min_growth) & (gap >= min_gap_ulps * np.spacing(np.abs(t)))
    if np.count_nonzero(keep) < min_points:
        raise InsufficientGrowth(
            f"need >= {min_points} samples with sup|u_t| > {min_growth:g}, "
            f"got {int(np.count_nonzero(keep))}"
        )
    tk, yk = t[keep], y_raw[keep] ** (-(p - 1.0))
    if max_points is not None and len(tk) > max_points:
        tk, yk = tk[-max_points:], yk[-max_points:]
    A = np.column_stack([tk, np.ones_like(tk)])
    (slope, intercept), *_ = np.linalg.lstsq(A, yk, rcond=None)
    if not slope < 0.0:
        raise InsufficientGrowth("sup|u_t|^{-(p-1)} is not decreasing in t")
    resid = yk - (slope * tk + intercept)
    return BlowupEstimate(
        T_est=float(-intercept / slope),
        fit_window=(float(tk[0]), float(tk[-1])),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        detected=True,
    )


def schedule_snapshots(T_est: float, s0: float, ds: float, s_max: float) -> list:
    """Times t_k = T_est - e^{-s_k} on the uniform grid s_k = s0 + k ds."""
    if not ds > 0.0:
        raise ValueError("ds must be positive")
    if not T_est > 0.0:
        raise ValueError("T_est must be positive")
    if s0 > s_max:
        return []
    n = int(math.floor((s_max - s0) / ds + 1e-9))
    return [T_est - math.exp(-(s0 + k * ds)) for k in range(n + 1)]


def _integrate(state, grid, p, settings, stop_times, record_stop, nonlinear=True):
    ts, sups, dts = [state.t], [float(np.max(np.abs(state.ut)))], [0.0]
    snaps = []
    sign_change = bool(np.any(state.ut < 0) and np.any(state.ut > 0))
    pending = list(stop_times)
    while pending and pending[0] <= state.t + 1e-15:
        snaps.append(state)
        pending.pop(0)
    detected = False
    while True:
        sup = sups[-1]
        exhausted = len(dts) > 1 and dts[-1] < 10.0 * np.spacing(abs(state.t))
        if sup >= settings.blowup_threshold or exhausted:
            if record_stop is not None:
                raise FloatingPointError(
                    f"blow-up threshold crossed at t={state.t} before time {pending[0]}"
                )
            detected = True
            break
        if record_stop is not None and not pending:
            break
        if state.t >= settings.t_max:
            break
        dt = max_stable_dt(sup, grid.dx, p, settings.cfl, settings.safety)
        dt = min(dt, settings.t_max - state.t)
        if pending:
            dt = min(dt, pending[0] - state.t)
        state = step(state, grid, p, dt, cfl=settings.cfl, safety=settings.safety,
                     stencil=settings.stencil, nonlinear=nonlinear)
        if pending and abs(state.t - pending[0]) <= 1e-13 * max(1.0, abs(pending[0])):
            state = FieldSnapshot(pending[0], state.u, state.ut)
            snaps.append(state)
            pending.pop(0)
        if not sign_change and p < 2.0:
            sign_change = bool(np.any(state.ut < 0) and np.any(state.ut > 0))
        ts.append(state.t)
        sups.append(float(np.max(np.abs(state.ut))))
        dts.append(dt)
        if not math.isfinite(sups[-1]):
            raise FloatingPointError(f"solution became non-finite at t={state.t}")
    traj = Trajectory(
        t=np.array(ts), sup_ut=np.array(sups), dt=np.array(dts), detected=detected,
        snapshots=snaps, sign_change=sign_change,
    )
    return traj, state


def run_to_blowup(grid: GridSpec, ic: InitialCondition, params: ModelParams,
                  settings: Optional[SolverSettings] = None):
    """Integrate until sup|u_t| crosses the threshold or t_max is reached.

    Returns ``(Trajectory, BlowupEstimate)``.  Reaching t_max is a normal
    outcome and yields ``detected=False`` with a NaN estimate.
    """
    settings = settings or SolverSettings()
    state = init_state(grid, ic)
    traj, _ = _integrate(state, grid, params.p, settings, [], None)
    if not traj.detected:
        return traj, BlowupEstimate(math.nan, (math.nan, math.nan), math.nan, False)
    est = estimate_T(traj.t, traj.sup_ut, params.p, min_growth=settings.min_growth,
                     max_points=settings.fit_points, min_gap_ulps=settings.min_gap_ulps)
    return traj, est


def record_snapshots(grid: GridSpec, ic: InitialCondition, params: ModelParams,
                     times: Sequence[float], settings: Optional[SolverSettings] = None,
                     *, nonlinear: bool = True) -> Trajectory:
    """Integrate from t = 0, landing exactly on each requested time."""
    settings = settings or SolverSettings()
    times = list(times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must be strictly increasing")
    if times and times[-1] > settings.t_max:
        settings = SolverSettings(**{**settings.__dict__, "t_max": times[-1]})
    state = init_state(grid, ic)
    traj, _ = _integrate(state, grid, params.p, settings, times, True, nonlinear=nonlinear)
    if len(traj.snapshots) != len(times):
        raise FloatingPointError(
            f"recorded {len(traj.snapshots)} of {len(times)} scheduled snapshots"
        )
    return traj
