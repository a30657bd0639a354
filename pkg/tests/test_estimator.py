import inspect
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nhformation.dynamics import RelativeMeasurement, TruthProjection
from nhformation.estimator import (
    INPUT_MATRIX,
    EstimatorState,
    GainError,
    NotHurwitzError,
    derive_gains,
    error_matrix,
    estimation_error,
    estimator_lyapunov,
    estimator_step,
    guub_bounds,
    hurwitz_window_ok,
    init_estimator,
    solve_lyapunov,
)

valid_gd = st.floats(-200.0, -1.5, exclude_max=True, allow_nan=False)


@pytest.mark.parametrize("g_d, g_v, p, r, k_d", [
    (-15.0, -50.0, -5.0, 10.0, 725.0),
    (-6.0, -8.0, -2.0, 4.0, 44.0),
    (-3.0, -2.0, -1.0, 2.0, 5.0),
])
def test_derive_gains_table(g_d, g_v, p, r, k_d):
    g = derive_gains(g_d)
    assert (g.g_d, g.g_v, g.p, g.r, g.k_d) == (g_d, g_v, p, r, k_d)


@pytest.mark.parametrize("g_d, match", [
    (5.0, "g_d must be negative"),
    (0.0, "g_d must be negative"),
    (-1.0, "r > 1"),
    (-1.5, "r > 1"),
    (float("nan"), "finite"),
])
def test_derive_gains_rejects(g_d, match):
    with pytest.raises(GainError, match=match):
        derive_gains(g_d)


@given(valid_gd)
def test_gain_identities(g_d):
    g = derive_gains(g_d)
    scale = g_d * g_d
    assert abs(g.r ** 2 + g.r * g.g_d - g.g_v) <= 1e-12 * scale
    p_alt = 0.5 * (g.g_d + math.sqrt(g.g_d ** 2 + 4 * g.g_v))
    r_alt = 0.5 * (-g.g_d + math.sqrt(g.g_d ** 2 + 4 * g.g_v))
    assert abs(p_alt - g.p) <= 1e-12 * abs(g_d)
    assert abs(r_alt - g.r) <= 1e-12 * abs(g_d)
    assert g.r > 1 and g.k_d > 0
    assert hurwitz_window_ok(g)


@pytest.mark.parametrize("g_d, expected", [(-15.0, [-10, -10, -5, -5]), (-6.0, [-4, -4, -2, -2]),
                                           (-3.0, [-2, -2, -1, -1])])
def test_error_matrix_spectrum(g_d, expected):
    eig = np.sort(np.linalg.eigvals(error_matrix(derive_gains(g_d), 0.0)).real)
    assert np.allclose(eig, expected, atol=1e-12)


def test_error_matrix_layout():
    g = derive_gains(-15.0)
    A = error_matrix(g, 0.5)
    expected = np.array([[-15, 1, 0, 0], [-50, 0, -2.5, 0.5], [0, 0, -15, 1], [2.5, -0.5, -50, 0]])
    assert np.array_equal(A, expected)
    assert INPUT_MATRIX.shape == (4, 2)


@given(valid_gd)
def test_characteristic_polynomial(g_d):
    g = derive_gains(g_d)
    coeffs = np.poly(error_matrix(g, 0.0))
    block = np.array([1.0, -g.g_d, -g.g_v])
    assert np.allclose(coeffs, np.polymul(block, block), rtol=1e-9, atol=1e-9 * g_d ** 4)


@pytest.mark.parametrize("omega", np.linspace(-2.0, 2.0, 9))
def test_real_parts_do_not_depend_on_rotation(omega):
    g = derive_gains(-15.0)
    re = np.sort(np.linalg.eigvals(error_matrix(g, omega)).real)
    assert np.allclose(re, [-10, -10, -5, -5], atol=1e-9)


def test_lyapunov_identity_case():
    cert = solve_lyapunov(-np.eye(4), 2 * np.eye(4))
    assert np.allclose(cert.P, np.eye(4), atol=1e-14)
    assert cert.valid


@pytest.mark.parametrize("g_d", [-15.0, -6.0, -2.0, -80.0])
def test_lyapunov_against_scipy(g_d):
    A = error_matrix(derive_gains(g_d), 0.0)
    cert = solve_lyapunov(A, np.eye(4))
    oracle = scipy.linalg.solve_continuous_lyapunov(A.T, -np.eye(4))
    assert np.allclose(cert.P, oracle, rtol=1e-9, atol=1e-12)
    assert cert.residual <= 1e-9
    assert np.all(cert.P_eigenvalues > 0)
    assert np.array_equal(cert.P, cert.P.T)


def test_lyapunov_rejects_marginal_matrix():
    A = np.diag([-1.0, -2.0, -3.0, 0.0])
    with pytest.raises(NotHurwitzError, match="eigenvalues"):
        solve_lyapunov(A, np.eye(4))


@pytest.mark.parametrize("Q", [np.diag([1.0, 1.0, 1.0, -1.0]), np.triu(np.ones((4, 4)))])
def test_lyapunov_rejects_bad_weight(Q):
    with pytest.raises(ValueError, match="Q must be"):
        solve_lyapunov(-np.eye(4), Q)


@settings(max_examples=50)
@given(valid_gd, st.floats(0.1, 10.0))
def test_lyapunov_random_weights(g_d, w):
    Q = np.diag([w, 1.0, w, 1.0])
    cert = solve_lyapunov(error_matrix(derive_gains(g_d), 0.0), Q)
    assert cert.residual <= 1e-9
    assert cert.valid


def test_estimator_state_reconstruction():
    e = EstimatorState(1.0, 0.0, 0.5, 0.3)
    assert e.psi_hat == pytest.approx(math.pi / 2)
    assert e.v1_hat == pytest.approx(0.3)
    e = EstimatorState(1.0, -0.4, 0.5, -0.3)
    assert e.psi_hat == pytest.approx(math.atan2(-0.3, -0.4))
    assert e.v1_hat == pytest.approx(0.5)
    assert EstimatorState.from_array(e.as_array()) == e


def test_init_estimator():
    e = init_estimator(RelativeMeasurement(1.0, 0.2, 0.98, 0.19), 0.35)
    assert e == EstimatorState(0.98, 0.35, 0.19, 0.0)


def _meas(dx, dy):
    return RelativeMeasurement(math.hypot(dx, dy), math.atan2(dy, dx), dx, dy)


def test_exact_estimate_stays_exact_at_constant_velocity():
    g = derive_gains(-15.0)
    v, v1x, v1y = 0.3, 0.5, 0.1
    dt = 0.01
    est = EstimatorState(1.0, v1x, 0.2, v1y)
    dx, dy = 1.0, 0.2
    for _ in range(500):
        nx, ny = dx + (v1x - v) * dt, dy + v1y * dt
        est = estimator_step(est, g, _meas(dx, dy), v, 0.0, dt, meas_next=_meas(nx, ny))
        dx, dy = nx, ny
        assert abs(est.d_x_hat - dx) <= 1e-10 and abs(est.d_y_hat - dy) <= 1e-10
        assert abs(est.v1x_hat - v1x) <= 1e-10 and abs(est.v1y_hat - v1y) <= 1e-10


def test_estimate_converges_from_wrong_velocity():
    g = derive_gains(-15.0)
    est = EstimatorState(1.0, 0.0, 0.0, 0.0)
    for _ in range(300):
        est = estimator_step(est, g, _meas(1.0, 0.0), 0.4, 0.0, 0.01)
    assert est.v1x_hat == pytest.approx(0.4, abs=1e-6)
    assert est.d_x_hat == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("bad", [dict(self_v=float("nan")), dict(self_omega=float("inf")), dict(dt=float("nan"))])
def test_estimator_step_rejects_non_finite(bad):
    kw = dict(est=EstimatorState(1, 0, 0, 0), gains=derive_gains(-15.0), meas=_meas(1, 0),
              self_v=0.0, self_omega=0.0, dt=0.01)
    kw.update(bad)
    with pytest.raises(ValueError):
        estimator_step(**kw)


def test_estimation_error_is_truth_minus_estimate():
    err = estimation_error(_meas(1.0, 0.5), TruthProjection(0.3, 0.1, 0, 0), EstimatorState(0.9, 0.2, 0.6, 0.0))
    assert err.as_array() == pytest.approx([0.1, 0.1, -0.1, 0.1])


def test_estimator_lyapunov_positive_definite():
    g = derive_gains(-15.0)
    assert estimator_lyapunov([0, 0, 0, 0], g) == 0.0
    rng = np.random.default_rng(3)
    for _ in range(100):
        assert estimator_lyapunov(rng.normal(size=4), g) > 0


def test_guub_values():
    b = guub_bounds(derive_gains(-15.0), 0.5)
    assert b.c_i == 0.5
    assert b.eps_d == pytest.approx(math.sqrt(0.5 / 725))
    assert b.eps_d == pytest.approx(0.0263, abs=1e-4)
    assert b.eps_v == pytest.approx(math.sqrt(0.5 / 9))
    assert b.velocity_envelope == pytest.approx(0.497, abs=2e-3)
    assert b.eps_x == pytest.approx(math.sqrt(0.5 / 15)) and b.eps_y == b.eps_x
    assert b.eps_x == pytest.approx(0.1826, abs=1e-4)


@given(valid_gd, st.floats(1e-3, 10.0))
def test_guub_formulas(g_d, a):
    g = derive_gains(g_d)
    b = guub_bounds(g, a)
    c = 2 * a * a
    assert b.eps_d == pytest.approx(min(2 * (math.sqrt(c) + a) / g.r, math.sqrt(c / g.k_d)))
    assert b.eps_v == pytest.approx(min(math.sqrt(c) + a, math.sqrt(c / (g.r - 1))))


def test_guub_has_no_rotation_argument():
    assert list(inspect.signature(guub_bounds).parameters) == ["gains", "a_eff"]


@pytest.mark.parametrize("a", [0.0, -1.0])
def test_guub_rejects_bad_acceleration(a):
    with pytest.raises(ValueError):
        guub_bounds(derive_gains(-15.0), a)
