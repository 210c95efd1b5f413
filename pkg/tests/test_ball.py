import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blowup_lab.ball import (
    BallGrid, ball_quadrature, ball_volume, divergence, gradient, laplacian, sub_ball_quadrature,
    weight_moment, weighted_second_moment, z_dot,
)

# frozen from scipy.integrate.quad on [-1, 1]
R4_1D = 0.8126984126984127   # ∫(1-z^2)^4 = 256/315
R3_1D = 0.9142857142857143   # ∫(1-z^2)^3 = 32/35
S3_1D = 0.10158730158730159  # ∫z^2(1-z^2)^3 = 32/315


def test_unit_volume_1d():
    assert ball_quadrature(1.0, 0.0, BallGrid(1, 101)) == pytest.approx(2.0, abs=1e-12)


def test_second_moment_weight3_1d():
    assert ball_quadrature(BallGrid(1, 201).r2, 3.0, BallGrid(1, 201)) == pytest.approx(S3_1D, rel=1e-6)


@pytest.mark.parametrize("alpha,expected", [(4.0, R4_1D), (3.0, R3_1D)])
def test_weight_moments_1d(alpha, expected):
    assert weight_moment(1, alpha) == pytest.approx(expected, rel=1e-14)
    assert ball_quadrature(1.0, alpha, BallGrid(1, 201)) == pytest.approx(expected, rel=1e-6)


def test_weighted_second_moment_closed_form():
    assert weighted_second_moment(1, 3.0) == pytest.approx(S3_1D, rel=1e-13)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_flat_energy_cancellation(N):
    # R_a - R_{a-1} + S_{a-1} = 0 for every N, a
    for a in (3.0, 4.0, 5.5):
        assert weight_moment(N, a) - weight_moment(N, a - 1) + weighted_second_moment(N, a - 1) == pytest.approx(0.0, abs=1e-14)


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_2d_weighted_moment_converges():
    errs = [abs(ball_quadrature(1.0, 4.0, BallGrid(2, nz)) - weight_moment(2, 4.0)) for nz in (33, 65)]
    assert errs[1] < errs[0]
    assert errs[1] / weight_moment(2, 4.0) < 1e-3


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        ball_quadrature(1.0, -1.0, BallGrid(1, 11))


def test_sub_ball_half_radius():
    b = BallGrid(1, 201)
    assert sub_ball_quadrature(1.0, 0.5, b) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.0, max_value=8.0))
def test_quadrature_is_monotone_in_nonnegative_integrands(a):
    b = BallGrid(1, 41)
    f = b.r2
    assert 0.0 <= ball_quadrature(f, a, b) <= ball_quadrature(f + 1.0, a, b)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
def test_quadrature_linear(c1, c2):
    b = BallGrid(2, 17)
    f, h = b.z[0] ** 2, np.cos(b.z[1])
    lhs = ball_quadrature(c1 * f + c2 * h, 2.0, b)
    rhs = c1 * ball_quadrature(f, 2.0, b) + c2 * ball_quadrature(h, 2.0, b)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_gradient_and_laplacian_exact_on_quadratics():
    b = BallGrid(2, 17)
    f = b.z[0] ** 2 + 3.0 * b.z[0] * b.z[1]
    gr = gradient(f, b)
    assert np.allclose(gr[0], 2 * b.z[0] + 3 * b.z[1], atol=1e-12)
    assert np.allclose(gr[1], 3 * b.z[0], atol=1e-12)
    assert np.allclose(laplacian(f, b), 2.0, atol=1e-10)
    assert np.allclose(divergence(gr, b), 2.0, atol=1e-10)


def test_z_dot():
    b = BallGrid(2, 9)
    vec = np.stack([np.ones_like(b.r2), 2 * np.ones_like(b.r2)])
    assert np.allclose(z_dot(vec, b), b.z[0] + 2 * b.z[1])
