import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhformation.dynamics import (
    ActuationLimits,
    AgentState,
    CoincidentAgentsError,
    ControlInput,
    NonFiniteError,
    angle_diff,
    measure_relative,
    project_truth,
    step_agent,
    wrap_angle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
angles = st.floats(-50.0, 50.0, allow_nan=False)


def integrate(state, inp, dt, n, limits=None):
    for _ in range(n):
        state = step_agent(state, inp, dt, limits)
    return state


@given(angles)
def test_wrap_angle_range_and_congruence(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    k = (a - w) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-9


@pytest.mark.parametrize("a, expected", [(math.pi, math.pi), (-math.pi, math.pi),
                                         (3 * math.pi, math.pi), (0.0, 0.0), (2 * math.pi, 0.0)])
def test_wrap_angle_boundaries(a, expected):
    assert wrap_angle(a) == pytest.approx(expected, abs=1e-15)


def test_angle_diff_is_shortest_arc():
    assert angle_diff(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(-0.2)
    assert angle_diff(0.1, -0.1) == pytest.approx(0.2)


def test_fixed_point():
    s = AgentState(0.0, 0.0, 0.0, 0.0)
    assert step_agent(s, ControlInput(0.0, 0.0), 0.01) == s


def test_straight_line():
    s = integrate(AgentState(0.0, 0.0, 0.0, 1.0), ControlInput(0.0, 0.0), 0.01, 100)
    assert s.x == pytest.approx(1.0, abs=1e-9)
    assert s.y == pytest.approx(0.0, abs=1e-9)
    assert s.phi == 0.0 and s.v == 1.0


def test_half_circle_matches_arc():
    n = 314
    s = integrate(AgentState(0.0, 0.0, 0.0, 1.0), ControlInput(0.0, 1.0), math.pi / n, n)
    assert s.x == pytest.approx(0.0, abs=1e-6)
    assert s.y == pytest.approx(2.0, abs=1e-6)
    assert abs(angle_diff(s.phi, math.pi)) < 1e-6


@pytest.mark.parametrize("omega", [0.3, -0.5, 1.0, 2.0])
def test_arc_over_ten_seconds(omega):
    # closed form for constant v, omega from the origin heading +x
    s = AgentState(0.0, 0.0, 0.0, 0.8)
    worst = 0.0
    for k in range(1, 1001):
        s = step_agent(s, ControlInput(0.0, omega), 0.01)
        t = k * 0.01
        x = 0.8 / omega * math.sin(omega * t)
        y = 0.8 / omega * (1.0 - math.cos(omega * t))
        worst = max(worst, math.hypot(s.x - x, s.y - y))
    assert worst <= 1e-6


def test_constant_acceleration_is_exact():
    s = integrate(AgentState(0.0, 0.0, 0.0, 0.0), ControlInput(0.2, 0.0), 0.01, 200)
    assert s.v == pytest.approx(0.4, abs=1e-12)
    assert s.x == pytest.approx(0.5 * 0.2 * 4.0, abs=1e-12)


@settings(max_examples=200)
@given(v=st.floats(0, 1), u=st.floats(-100, 100), w=st.floats(-100, 100),
       phi=angles, dt=st.floats(1e-3, 0.5))
def test_speed_clamped_and_heading_wrapped(v, u, w, phi, dt):
    lim = ActuationLimits(1.0, 0.5, 2.0)
    s = step_agent(AgentState(0.0, 0.0, phi, v), ControlInput(u, w), dt, lim)
    assert 0.0 <= s.v <= 1.0
    assert -math.pi < s.phi <= math.pi


@pytest.mark.parametrize("field", ["x", "y", "phi", "v"])
def test_non_finite_state_rejected(field):
    kw = dict(x=0.0, y=0.0, phi=0.0, v=0.0)
    kw[field] = float("nan")
    with pytest.raises(NonFiniteError, match=field):
        step_agent(AgentState(**kw), ControlInput(0.0, 0.0), 0.01)


def test_non_finite_input_rejected():
    with pytest.raises(NonFiniteError, match="omega"):
        step_agent(AgentState(0, 0, 0, 0), ControlInput(0.0, float("inf")), 0.01)


def test_bad_dt_rejected():
    with pytest.raises(ValueError, match="dt"):
        step_agent(AgentState(0, 0, 0, 0), ControlInput(0, 0), 0.0)


def test_limits():
    lim = ActuationLimits(1.0, 0.5, 2.0)
    assert lim.a_max == 0.5 + 1.0 * 2.0
    assert lim.clamp(ControlInput(3.0, -9.0)) == ControlInput(0.5, -2.0)
    assert lim.clamp(ControlInput(0.1, 0.2)) == ControlInput(0.1, 0.2)
    assert lim.clamp_speed(-0.1) == 0.0 and lim.clamp_speed(1.5) == 1.0


@pytest.mark.parametrize("bad", [dict(v_max=0.0), dict(u_max=-1.0), dict(omega_max=float("inf"))])
def test_limits_must_be_positive(bad):
    kw = dict(v_max=1.0, u_max=0.5, omega_max=2.0)
    kw.update(bad)
    with pytest.raises(ValueError, match=next(iter(bad))):
        ActuationLimits(**kw)


def test_measure_ahead():
    m = measure_relative(AgentState(0, 0, 0, 0), AgentState(2, 0, 0, 0))
    assert (m.d, m.theta, m.d_x, m.d_y) == (2.0, 0.0, 2.0, 0.0)


def test_measure_left():
    m = measure_relative(AgentState(0, 0, 0, 0), AgentState(0, 1, 0, 0))
    assert m.d == 1.0
    assert m.theta == pytest.approx(math.pi / 2)
    assert m.d_x == pytest.approx(0.0, abs=1e-15)
    assert m.d_y == pytest.approx(1.0)


def test_measure_rotated_follower():
    f = AgentState(1.0, 1.0, math.pi / 4, 0.0)
    m = measure_relative(f, AgentState(2.0, 3.0, 0.0, 0.0))
    c, s = math.cos(-math.pi / 4), math.sin(-math.pi / 4)
    R = np.array([[c, -s], [s, c]])
    expected = R @ np.array([1.0, 2.0])
    assert m.d == pytest.approx(math.sqrt(5.0))
    assert (m.d_x, m.d_y) == pytest.approx(tuple(expected), abs=1e-14)
    assert m.theta == pytest.approx(math.atan2(expected[1], expected[0]))


def test_coincident_agents_rejected():
    with pytest.raises(CoincidentAgentsError):
        measure_relative(AgentState(1, 1, 0, 0), AgentState(1, 1, 2, 0))


@given(finite, finite, angles, finite, finite)
def test_measurement_identity_and_inverse_rotation(fx, fy, phi, px, py):
    f = AgentState(fx, fy, phi, 0.0)
    p = AgentState(px, py, 0.0, 0.0)
    if math.hypot(px - fx, py - fy) < 1e-6:
        return
    m = measure_relative(f, p)
    assert m.d >= 0
    assert m.d_x ** 2 + m.d_y ** 2 == pytest.approx(m.d ** 2, rel=1e-12)
    c, s = math.cos(phi), math.sin(phi)
    wx = c * m.d_x - s * m.d_y
    wy = s * m.d_x + c * m.d_y
    scale = max(1.0, abs(fx), abs(fy), abs(px), abs(py))
    assert abs(wx - (px - fx)) <= 1e-12 * scale
    assert abs(wy - (py - fy)) <= 1e-12 * scale


def test_measurement_noise_applied_in_polar_form():
    m = measure_relative(AgentState(0, 0, 0, 0), AgentState(2, 0, 0, 0), noise=(0.1, 0.05))
    assert m.d == pytest.approx(2.1)
    assert m.theta == pytest.approx(0.05)
    assert m.d_x == pytest.approx(2.1 * math.cos(0.05))


def test_truth_aligned():
    tr = project_truth(AgentState(0, 0, 0.3, 0.5), 0.0, AgentState(1, 0, 0.3, 0.5), ControlInput(0, 0))
    assert tr.v1x == pytest.approx(0.5) and tr.v1y == pytest.approx(0.0, abs=1e-15)
    assert tr.a_x == 0.0 and tr.a_y == 0.0


def test_truth_perpendicular():
    tr = project_truth(AgentState(0, 0, 0, 0), 0.0, AgentState(1, 0, math.pi / 2, 1.0), ControlInput(0, 0))
    assert tr.v1x == pytest.approx(0.0, abs=1e-15)
    assert tr.v1y == pytest.approx(1.0)


def test_truth_turning_predecessor():
    tr = project_truth(AgentState(0, 0, 0, 0), 0.0, AgentState(1, 0, 0, 0.2), ControlInput(0, 0.2))
    assert tr.a_x == pytest.approx(0.0, abs=1e-15)
    assert tr.a_y == pytest.approx(0.04)


@given(v0=st.floats(0, 1), phi_f=angles, phi_p=angles, u=st.floats(-0.5, 0.5), w=st.floats(-2, 2))
def test_projected_acceleration_bounded_by_a_max(v0, phi_f, phi_p, u, w):
    lim = ActuationLimits(1.0, 0.5, 2.0)
    tr = project_truth(AgentState(0, 0, phi_f, 0.3), 0.0, AgentState(1, 1, phi_p, v0), ControlInput(u, w))
    assert abs(tr.a_x) <= lim.a_max + 1e-12
    assert abs(tr.a_y) <= lim.a_max + 1e-12


def _v1x_series(dt, T=1.0):
    """Follower turns at 0.7 rad/s, predecessor accelerates and turns; returns v1x samples and a_x + v1y*w."""
    f = AgentState(0, 0, 0.2, 0.4)
    p = AgentState(2, 1, -0.3, 0.5)
    fin, pin = ControlInput(0.0, 0.7), ControlInput(0.3, -0.4)
    t = 0.0
    tr0 = project_truth(f, fin.omega, p, pin)
    rhs = tr0.a_x + tr0.v1y * fin.omega
    f = step_agent(f, fin, dt)
    p = step_agent(p, pin, dt)
    tr1 = project_truth(f, fin.omega, p, pin)
    return (tr1.v1x - tr0.v1x) / dt, rhs


def test_finite_difference_of_v1x_matches_projected_dynamics():
    errs = []
    for dt in (0.02, 0.01, 0.005):
        fd, rhs = _v1x_series(dt)
        errs.append(abs(fd - rhs))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.05)
