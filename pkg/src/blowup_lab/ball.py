"""Tensor grid on [-1, 1]^N restricted to the closed unit ball, with weighted quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True, eq=False)
class BallGrid:
    """Vertex grid z_i = -1 + i dz, i = 0..nz-1, in every dimension.

    Quadrature uses tensor-trapezoid weights over the points with |z| <= 1.
    """

    N: int
    nz: int

    def __post_init__(self):
        if self.nz < 3:
            raise ValueError("nz must be >= 3")

    @property
    def dz(self) -> float:
        return 2.0 / (self.nz - 1)

    @cached_property
    def z1d(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.nz)

    @cached_property
    def z(self) -> list:
        return np.meshgrid(*([self.z1d] * self.N), indexing="ij")

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(zi**2 for zi in self.z)

    @cached_property
    def mask(self) -> np.ndarray:
        return self.r2 <= 1.0 + 1e-12

    @cached_property
    def rho(self) -> np.ndarray:
        return np.where(self.mask, np.clip(1.0 - self.r2, 0.0, None), 0.0)

    @cached_property
    def weights(self) -> np.ndarray:
        w1 = np.ones(self.nz)
        w1[0] = w1[-1] = 0.5
        w = np.ones(())
        for _ in range(self.N):
            w = np.multiply.outer(w, w1)
        return np.where(self.mask, w, 0.0) * self.dz**self.N

    def rho_pow(self, exponent: float) -> np.ndarray:
        if exponent == 0:
            return self.mask.astype(float)
        return np.where(self.mask, self.rho**exponent, 0.0)


def ball_quadrature(f, weight_exp: float, ball: BallGrid) -> float:
    """Approximate ``∫_B f ρ^w dz`` by the masked tensor trapezoid rule."""
    if weight_exp < 0:
        raise ValueError(f"weight exponent must be >= 0, got {weight_exp}")
    f = np.broadcast_to(np.asarray(f, dtype=float), ball.mask.shape)
    return float(np.sum(ball.weights * ball.rho_pow(weight_exp) * f))


def sub_ball_quadrature(f, radius: float, ball: BallGrid) -> float:
    """Unweighted ``∫_{|z| <= radius} f`` using the full ball's trapezoid weights.

    Nodes lying on the sphere |z| = radius get half weight (exact trapezoid in 1D).
    """
    f = np.broadcast_to(np.asarray(f, dtype=float), ball.mask.shape)
    tol = 1e-9 * ball.dz
    r = np.sqrt(ball.r2)
    frac = np.where(r < radius - tol, 1.0, np.where(r <= radius + tol, 0.5, 0.0))
    return float(np.sum(frac * ball.weights * f))


def gradient(f: np.ndarray, ball: BallGrid) -> np.ndarray:
    """Centered differences inside the cube, second-order one-sided at its faces.

    Returned with the component axis first, shape (N, nz, ..., nz).
    """
    g = np.gradient(f, ball.dz, edge_order=2)
    if ball.N == 1:
        g = [g]
    return np.stack(g)


def divergence(vec: np.ndarray, ball: BallGrid) -> np.ndarray:
    return sum(np.gradient(vec[i], ball.dz, axis=i, edge_order=2) for i in range(ball.N))


def laplacian(f: np.ndarray, ball: BallGrid) -> np.ndarray:
    """Compact 3-point Laplacian, with 4-point one-sided second differences at the faces."""
    h2 = ball.dz**2
    out = np.zeros_like(f)
    for ax in range(f.ndim):
        fm = np.moveaxis(f, ax, 0)
        d2 = np.empty_like(fm)
        d2[1:-1] = fm[2:] - 2.0 * fm[1:-1] + fm[:-2]
        d2[0] = 2.0 * fm[0] - 5.0 * fm[1] + 4.0 * fm[2] - fm[3]
        d2[-1] = 2.0 * fm[-1] - 5.0 * fm[-2] + 4.0 * fm[-3] - fm[-4]
        out += np.moveaxis(d2, 0, ax)
    return out / h2


def z_dot(vec: np.ndarray, ball: BallGrid) -> np.ndarray:
    """Pointwise z · vec for a vector field with the component axis first."""
    return sum(ball.z[i] * vec[i] for i in range(ball.N))


def ball_volume(N: int) -> float:
    return float(np.exp(0.5 * N * np.log(np.pi) - gammaln(0.5 * N + 1.0)))


def weight_moment(N: int, alpha: float) -> float:
    """Exact ``R_alpha = ∫_B (1-|z|^2)^alpha dz`` over the unit ball of R^N."""
    return float(np.exp(
        0.5 * N * np.log(np.pi) + gammaln(alpha + 1.0) - gammaln(alpha + 1.0 + 0.5 * N)
    ))


def weighted_second_moment(N: int, alpha: float) -> float:
    """Exact ``S_alpha = ∫_B |z|^2 (1-|z|^2)^alpha dz`` (= R_alpha - R_{alpha+1})."""
    return weight_moment(N, alpha) - weight_moment(N, alpha + 1.0)
