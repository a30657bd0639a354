"""Unicycle agent model, body-frame projections and actuation limits.

World-frame kinematics of every agent::

    x' = v cos(phi),  y' = v sin(phi),  phi' = omega,  v' = u

Relative quantities are expressed in the *follower's* body frame: ``d_x`` is
the predecessor's offset along the follower heading, ``d_y`` the offset to
the follower's left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import coupled_rk4


class NonFiniteError(ValueError):
    """A state or input field is NaN or infinite."""


class CoincidentAgentsError(ValueError):
    """Two agents occupy the same point, so the bearing is undefined."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def angle_diff(a: float, b: float) -> float:
    """Shortest-arc difference ``a - b`` in ``(-pi, pi]``."""
    return wrap_angle(a - b)


def _check_finite(obj, fields) -> None:
    for name in fields:
        val = getattr(obj, name)
        if not math.isfinite(val):
            raise NonFiniteError(f"{type(obj).__name__}.{name} is not finite ({val!r})")


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    phi: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.phi, self.v], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "AgentState":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class ControlInput:
    u: float
    omega: float


@dataclass(frozen=True)
class ActuationLimits:
    """Box limits on speed, acceleration and turn rate.

    ``a_max`` bounds the projected predecessor acceleration seen by any
    follower: ``u_max + v_max * omega_max``.
    """

    v_max: float
    u_max: float
    omega_max: float

    def __post_init__(self):
        for name in ("v_max", "u_max", "omega_max"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"ActuationLimits.{name} must be positive and finite, got {val!r}")

    @property
    def a_max(self) -> float:
        return self.u_max + self.v_max * self.omega_max

    def clamp(self, inp: ControlInput) -> ControlInput:
        return ControlInput(
            min(max(inp.u, -self.u_max), self.u_max),
            min(max(inp.omega, -self.omega_max), self.omega_max),
        )

    def clamp_speed(self, v: float) -> float:
        return min(max(v, 0.0), self.v_max)


@dataclass(frozen=True)
class RelativeMeasurement:
    d: float
    theta: float
    d_x: float
    d_y: float


@dataclass(frozen=True)
class TruthProjection:
    v1x: float
    v1y: float
    a_x: float
    a_y: float


def step_agent(state: AgentState, inp: ControlInput, dt: float,
               limits: ActuationLimits | None = None) -> AgentState:
    """Integrate one agent over ``dt`` with a zero-order-hold input (RK4).

    Speed is clamped to ``[0, v_max]`` (``[0, inf)`` without limits) and the
    heading wrapped to ``(-pi, pi]`` after the step.
    """
    _check_finite(state, ("x", "y", "phi", "v"))
    _check_finite(inp, ("u", "omega"))
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    S, _ = coupled_rk4(
        state.as_array().reshape(1, 4),
        np.array([[inp.u, inp.omega]]),
        np.empty((0, 4)), [], [], (0.0, 0.0, 0.0), np.empty((0, 2)), dt,
    )
    x, y, phi, v = S[0]
    v = limits.clamp_speed(v) if limits is not None else max(v, 0.0)
    return AgentState(float(x), float(y), wrap_angle(float(phi)), float(v))


def body_frame(follower: AgentState, px: float, py: float) -> tuple[float, float]:
    """Rotate the world displacement to ``(px, py)`` into the follower frame."""
    dx = px - follower.x
    dy = py - follower.y
    c = math.cos(follower.phi)
    s = math.sin(follower.phi)
    return c * dx + s * dy, -s * dx + c * dy


def measure_relative(follower: AgentState, predecessor: AgentState,
                     noise: tuple[float, float] = (0.0, 0.0)) -> RelativeMeasurement:
    """Range/bearing of ``predecessor`` as seen by ``follower``.

    ``noise`` is an additive ``(d, theta)`` offset; with zero noise the
    body-frame projections come straight from the rotation so that
    ``d_x**2 + d_y**2 == d**2`` to rounding.

    Raises:
        CoincidentAgentsError: the agents coincide (``d == 0``).
    """
    _check_finite(follower, ("x", "y", "phi", "v"))
    _check_finite(predecessor, ("x", "y", "phi", "v"))
    d_x, d_y = body_frame(follower, predecessor.x, predecessor.y)
    d = math.hypot(d_x, d_y)
    if d == 0.0:
        raise CoincidentAgentsError("agents are coincident (d = 0): collision or bad initial placement")
    theta = math.atan2(d_y, d_x)
    nd, nth = noise
    if nd != 0.0 or nth != 0.0:
        d = d + nd
        theta = theta + nth
        d_x = d * math.cos(theta)
        d_y = d * math.sin(theta)
    return RelativeMeasurement(d, theta, d_x, d_y)


def project_truth(follower: AgentState, follower_omega: float,
                  predecessor: AgentState, predecessor_input: ControlInput) -> TruthProjection:
    """Ground-truth predecessor velocity and acceleration in the follower frame.

    For verification only; the control path never calls this.
    ``follower_omega`` does not enter the projected acceleration but is
    accepted so callers can pass a complete pair description.
    """
    psi = angle_diff(predecessor.phi, follower.phi)
    v1x = predecessor.v * math.cos(psi)
    v1y = predecessor.v * math.sin(psi)
    u1 = predecessor_input.u
    w1 = predecessor_input.omega
    a_x = u1 * math.cos(psi) - v1y * w1
    a_y = u1 * math.sin(psi) + v1x * w1
    return TruthProjection(v1x, v1y, a_x, a_y)
