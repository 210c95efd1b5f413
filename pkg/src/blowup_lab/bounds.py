"""Monitors for the blow-up rate quantities: Sobolev norms of θ, of the memory
convolution h2 ⋆ θ, and of u itself, plus unit-window integrals.

Discrete Sobolev norms always include the L2 part: ||f||_{H1}^2 = ||f||^2 + ||∇f||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ball import BallGrid, ball_quadrature, sub_ball_quadrature
from .model import ModelParams, g, g2
from .similarity import HistoryAccumulators, ThetaFrame, conv_h2, sample_on_ball
from .solver import FieldSnapshot, GridSpec, periodic_gradient, periodic_hessian

OUT_OF_WINDOW = math.nan


@dataclass(frozen=True)
class BoundsReport:
    s: float
    t: float
    thm11: float
    thm12: float
    thm12_u: float
    thm12_ut: float
    p31: float
    p32: float
    p33: float
    lr_theta: float
    lr_conv: float


@dataclass(frozen=True)
class WindowReport:
    s: float
    w2: float
    w3: float
    w4: float


def _l2sq(f, ball):
    return ball_quadrature(f**2, 0.0, ball)


def prop3_quantities(frame: ThetaFrame, acc: HistoryAccumulators, params: ModelParams,
                     ball: BallGrid):
    """(∫θ^2, e^{-2s}∫|h2⋆∇θ|^2, e^{-2s}∫(h2⋆θ)^2) over the unweighted ball."""
    conv, conv_grad = conv_h2(acc, frame.s, params)
    e2 = math.exp(-2.0 * frame.s)
    return (
        _l2sq(frame.theta, ball),
        e2 * ball_quadrature(np.sum(conv_grad**2, axis=0), 0.0, ball),
        e2 * _l2sq(conv, ball),
    )


def thm11_quantity(frame: ThetaFrame, acc: HistoryAccumulators, params: ModelParams,
                   ball: BallGrid) -> float:
    """e^{-2s} ||h2⋆θ||_{H1(B)}^2 + ||θ||_{L2(B)}^2."""
    p31, p32, p33 = prop3_quantities(frame, acc, params, ball)
    return p31 + p32 + p33


def thm12_parts(snap: FieldSnapshot, T: float, a, params: ModelParams, grid: GridSpec,
                ball: BallGrid):
    """Scaled (u H2 part, u_t H1 part) on the unit ball around a.

    Returns (nan, nan) outside the window T(1 - 1/e) <= t < T.
    """
    if not (T * (1.0 - math.exp(-1.0)) <= snap.t < T):
        return OUT_OF_WINDOW, OUT_OF_WINDOW
    scale = (T - snap.t) ** (2.0 * params.beta)

    def norm_sq(fields):
        return sum(_l2sq(sample_on_ball(f, grid, a, ball), ball) for f in fields)

    dx = grid.dx
    u_part = norm_sq([snap.u, *periodic_gradient(snap.u, dx)])
    # off-diagonal second partials appear twice in |D^2 u|^2
    hess = periodic_hessian(snap.u, dx)
    k = 0
    for i in range(grid.N):
        for j in range(i, grid.N):
            u_part += (1.0 if i == j else 2.0) * norm_sq([hess[k]])
            k += 1
    ut_part = norm_sq([snap.ut, *periodic_gradient(snap.ut, dx)])
    return scale * u_part, scale * ut_part


def thm12_quantity(snap: FieldSnapshot, T: float, a, params: ModelParams, grid: GridSpec,
                   ball: BallGrid) -> float:
    """(T-t)^{2β}[||u||_{H2(B_a)}^2 + ||u_t||_{H1(B_a)}^2]; nan outside the window."""
    u_part, ut_part = thm12_parts(snap, T, a, params, grid, ball)
    return u_part + ut_part


def lr_condition_status(N: int, r: float) -> str:
    """Status of the extra restriction r <= 2N/(N-1) required for the θ bound."""
    if N == 1:
        return "degenerate (N=1)"
    return "satisfied" if r <= 2.0 * N / (N - 1.0) else "violated"


def lr_norms(frame: ThetaFrame, acc: HistoryAccumulators, r: float, params: ModelParams,
             ball: BallGrid):
    """(||θ||_{L^r(B)}, e^{-s} ||h2⋆θ||_{L^r(B)})."""
    if r < 1.0:
        raise ValueError(f"r >= 1 required, got {r}")
    if params.N >= 3 and r > 2.0 * params.N / (params.N - 2.0):
        raise ValueError(f"r <= 2N/(N-2) = {2.0 * params.N / (params.N - 2.0)} required")
    conv, _ = conv_h2(acc, frame.s, params)
    lt = ball_quadrature(np.abs(frame.theta) ** r, 0.0, ball) ** (1.0 / r)
    lc = math.exp(-frame.s) * ball_quadrature(np.abs(conv) ** r, 0.0, ball) ** (1.0 / r)
    return lt, lc


def window_integrands(frame: ThetaFrame, theta_s: np.ndarray, params: ModelParams,
                      ball: BallGrid):
    """Per-frame spatial integrals (i2, i3, i4) whose s-integrals give w2, w3, w4."""
    a, p = params.alpha, params.p
    th = frame.theta
    bulk = theta_s**2 + np.abs(th) ** (p + 1.0) + th**2
    grad_sq = np.sum(frame.grad_theta**2, axis=0)
    i2 = g(params, frame.s) * ball_quadrature(bulk, a, ball) + g2(params, frame.s) * ball_quadrature(grad_sq, a, ball)
    i3 = ball_quadrature(bulk + grad_sq, a, ball)
    i4 = sub_ball_quadrature(bulk + grad_sq, 0.5, ball)
    return i2, i3, i4


def cor31_windows(frames: Sequence[ThetaFrame], theta_s: Sequence[np.ndarray],
                  params: ModelParams, ball: BallGrid) -> WindowReport:
    """Trapezoid-in-s of the three unit-window integrals over the supplied frames."""
    if len(frames) < 2 or len(frames) != len(theta_s) or any(t is None for t in theta_s):
        raise ValueError("incomplete window: frames and θ_s required at every s in [s, s+1]")
    ds = frames[1].s - frames[0].s
    if abs(frames[-1].s - frames[0].s - 1.0) > 0.5 * ds:
        raise ValueError("window must span one unit of s")
    vals = np.array([window_integrands(f, ts, params, ball) for f, ts in zip(frames, theta_s)])
    w = np.trapezoid(vals, dx=ds, axis=0)
    return WindowReport(frames[0].s, float(w[0]), float(w[1]), float(w[2]))


def window_reports(integrands: np.ndarray, s: np.ndarray, ds: float) -> list:
    """Slide a unit window over precomputed per-frame integrands (rows may be NaN)."""
    width = int(round(1.0 / ds))
    out = []
    for k in range(len(s) - width):
        block = integrands[k:k + width + 1]
        if np.any(np.isnan(block)):
            continue
        w = np.trapezoid(block, dx=ds, axis=0)
        out.append(WindowReport(float(s[k]), float(w[0]), float(w[1]), float(w[2])))
    return out


@dataclass(frozen=True)
class SupSummary:
    sup: float
    running_max: np.ndarray
    verdict: str
    growth_rate: float


def sup_tracker(s: Sequence[float], values: Sequence[float]) -> SupSummary:
    """Running maximum and a labelled boundedness heuristic.

    "bounded" when the max over the last half of the s-range is at most 1.1x
    the max over the first half; otherwise "growth detected" with the slope of
    log(value) against s.  This is a heuristic, not a verification of a sup.
    """
    s = np.asarray(s, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v)
    s, v = s[ok], v[ok]
    if len(v) == 0:
        return SupSummary(math.nan, v, "insufficient data", math.nan)
    running = np.maximum.accumulate(v)
    if len(v) < 2:
        return SupSummary(float(v[0]), running, "insufficient data", math.nan)
    mid = 0.5 * (s[0] + s[-1])
    first, last = v[s <= mid], v[s > mid]
    if len(last) == 0:
        return SupSummary(float(running[-1]), running, "insufficient data", math.nan)
    if last.max() <= 1.1 * first.max():
        return SupSummary(float(running[-1]), running, "bounded", 0.0)
    pos = v > 0
    rate = float(np.polyfit(s[pos], np.log(v[pos]), 1)[0]) if pos.sum() >= 2 else math.nan
    return SupSummary(float(running[-1]), running, "growth detected", rate)
