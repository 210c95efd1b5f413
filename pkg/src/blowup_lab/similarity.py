"""Similarity frame: (x, t) -> (z, s) = (x - a, -log(T' - t)), v = (T'-t)^{-β} θ.

Also owns the exponential-kernel history accumulators.  Every history
integral needed by the energy and the transformed equation reduces to

    P1 = ∫ g2 |∇θ|^2,  P2 = ∫ g2 ∇θ,  P3 = ∫ g2 θ^2,  P4 = ∫ g2 θ,  P5 = ∫ g θ^2

over [s0, s], so each new frame costs O(1) work per grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from . import ball as B
from .ball import BallGrid, ball_quadrature
from .model import ModelParams, exp_integral, g, g2, h2
from .solver import FieldSnapshot, GridSpec


@dataclass(frozen=True)
class SimilarityParams:
    a: tuple
    T_prime: float

    def __post_init__(self):
        if not self.T_prime > 0.0:
            raise ValueError(f"T' must be positive, got {self.T_prime}")

    @property
    def s0(self) -> float:
        return -math.log(self.T_prime)

    def s_limit(self, T: float) -> float:
        """Largest similarity time with a defined frame (inf unless T' > T)."""
        if self.T_prime > T:
            return -math.log(self.T_prime - T)
        return math.inf


@dataclass(frozen=True, eq=False)
class ThetaFrame:
    s: float
    t: float
    theta: np.ndarray
    grad_theta: np.ndarray


def _check_contained(grid: GridSpec, a) -> np.ndarray:
    a = np.broadcast_to(np.asarray(a, dtype=float), (grid.N,))
    if np.any(np.abs(a) + 1.0 > grid.L + 1e-12):
        raise ValueError(f"unit ball around a={tuple(a)} is not inside the box [-{grid.L}, {grid.L}]")
    return a


def sample_on_ball(field: np.ndarray, grid: GridSpec, a, ball: BallGrid) -> np.ndarray:
    """Periodic multilinear interpolation of a solver-grid field at a + z."""
    if ball.N != grid.N:
        raise ValueError("ball and solver grid dimensions differ")
    a = _check_contained(grid, a)
    idx = [((a[i] + ball.z[i]) + grid.L) / grid.dx for i in range(grid.N)]
    # snap indices that are integers up to rounding so aligned grids copy exactly
    idx = [np.where(np.abs(c - np.rint(c)) < 1e-9, np.rint(c), c) for c in idx]
    out = map_coordinates(field, np.stack([c.ravel() for c in idx]), order=1, mode="grid-wrap")
    return out.reshape(ball.mask.shape)


def transform_snapshot(snap: FieldSnapshot, sim: SimilarityParams, params: ModelParams,
                       ball: BallGrid, grid: GridSpec) -> ThetaFrame:
    if not snap.t < sim.T_prime:
        raise ValueError(f"snapshot time {snap.t} is not before T'={sim.T_prime}")
    tau = sim.T_prime - snap.t
    theta = tau**params.beta * sample_on_ball(snap.ut, grid, sim.a, ball)
    return ThetaFrame(s=-math.log(tau), t=snap.t, theta=theta, grad_theta=B.gradient(theta, ball))


def theta00(u0: np.ndarray, sim: SimilarityParams, params: ModelParams, ball: BallGrid,
            grid: GridSpec):
    """Rescaled initial displacement (T')^{β+1} u0(a + z) and its gradient."""
    th = sim.T_prime ** (params.beta + 1.0) * sample_on_ball(u0, grid, sim.a, ball)
    return th, B.gradient(th, ball)


# --- history accumulators ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class HistoryAccumulators:
    s0: float
    s_last: float
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    P5: np.ndarray
    G2int: float
    Gint: float
    last: ThetaFrame
    steps: int = 0


def _integrands(frame: ThetaFrame, params: ModelParams):
    k2 = g2(params, frame.s)
    k = g(params, frame.s)
    th, gr = frame.theta, frame.grad_theta
    return (
        k2 * np.sum(gr**2, axis=0),
        k2 * gr,
        k2 * th**2,
        k2 * th,
        k * th**2,
    )


def init_history(frame: ThetaFrame) -> HistoryAccumulators:
    """Empty accumulators anchored at the first frame (s = s0)."""
    zero = np.zeros_like(frame.theta)
    return HistoryAccumulators(
        s0=frame.s, s_last=frame.s, P1=zero, P2=np.zeros_like(frame.grad_theta),
        P3=zero, P4=zero, P5=zero, G2int=0.0, Gint=0.0, last=frame,
    )


def update_history(acc: HistoryAccumulators, frame: ThetaFrame, ds: float,
                   params: ModelParams) -> HistoryAccumulators:
    """Advance every accumulator by one trapezoid panel of width ds."""
    if abs(frame.s - (acc.s_last + ds)) > 1e-9 * max(1.0, abs(frame.s)):
        raise ValueError(
            f"out-of-order frame: expected s={acc.s_last + ds}, got s={frame.s}"
        )
    old = _integrands(acc.last, params)
    new = _integrands(frame, params)
    P1, P2, P3, P4, P5 = (
        P + 0.5 * ds * (a + b) for P, a, b in zip((acc.P1, acc.P2, acc.P3, acc.P4, acc.P5), old, new)
    )
    beta = params.beta
    return replace(
        acc, s_last=frame.s, P1=P1, P2=P2, P3=P3, P4=P4, P5=P5,
        G2int=exp_integral(beta - 1.0, acc.s0, frame.s),
        Gint=exp_integral(beta + 1.0, acc.s0, frame.s),
        last=frame, steps=acc.steps + 1,
    )


def direct_history_integrals(frames: Sequence[ThetaFrame], params: ModelParams, ds: float):
    """Stored-history quadrature of P1..P5 over all frames (debug cross-check)."""
    if len(frames) < 2:
        zero = np.zeros_like(frames[0].theta)
        return zero, np.zeros_like(frames[0].grad_theta), zero, zero, zero
    stacks = [np.stack(x) for x in zip(*(_integrands(f, params) for f in frames))]
    return tuple(np.trapezoid(st, dx=ds, axis=0) for st in stacks)


def conv_h2(acc: HistoryAccumulators, s: float, params: ModelParams):
    """(h2 ⋆ θ)(s) and (h2 ⋆ ∇θ)(s), using h2(s - s') = h2(s) g2(s')."""
    if abs(s - acc.s_last) > 1e-9 * max(1.0, abs(s)):
        raise ValueError(f"accumulators are at s={acc.s_last}, requested s={s}")
    k = h2(params, s)
    return k * acc.P4, k * acc.P2


def residual_1_7(frames: Sequence[ThetaFrame], acc: HistoryAccumulators,
                 theta00_field: np.ndarray, params: ModelParams, ball: BallGrid) -> float:
    """Normalized ρ^α-weighted L2 residual of the transformed equation at the middle frame.

    g θ_s + β g θ - ∫ g2 Δθ - g(s0) Δθ00 - g |θ|^{p-1} θ, with θ_s by centered
    difference and the history Laplacian as the divergence of P2.
    """
    if ball.nz < 8:
        raise ValueError("nz >= 8 required for interior stencils")
    prev, mid, nxt = frames
    if abs(acc.s_last - mid.s) > 1e-9 * max(1.0, abs(mid.s)):
        raise ValueError("accumulators must be current at the middle frame")
    ds = 0.5 * (nxt.s - prev.s)
    theta_s = (nxt.theta - prev.theta) / (2.0 * ds)
    gs = g(params, mid.s)
    th = mid.theta
    nonlin = gs * np.abs(th) ** (params.p - 1.0) * th
    r = (
        gs * theta_s + params.beta * gs * th
        - B.divergence(acc.P2, ball)
        - g(params, acc.s0) * B.laplacian(theta00_field, ball)
        - nonlin
    )
    interior = np.ones(ball.mask.shape, dtype=bool)
    for ax in range(ball.N):
        sl = [slice(None)] * ball.N
        sl[ax] = 0
        interior[tuple(sl)] = False
        sl[ax] = -1
        interior[tuple(sl)] = False
    r = np.where(interior, r, 0.0)
    num = math.sqrt(ball_quadrature(r**2, params.alpha, ball))
    den = math.sqrt(ball_quadrature(nonlin**2, params.alpha, ball))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den
