"""Closed-form barrier-function tracking laws for one follower.

Longitudinal (X+ edge) barrier ``h1 = d_x - d_s - T v`` and lateral (Y edge)
barrier ``h2 = sign(d_s) (d_y - d_s)`` are both enforced with the class-K map
``alpha(h) = -g_d h``. The tuning offsets ``x_c`` and ``y_c`` are chosen to
cancel the linear terms of the tracking Lyapunov derivatives, which pins the
equilibria at ``d_x = d_star_x + T v`` and ``d_y = d_star_y``.

Inputs here are the follower's own measurements and estimator outputs only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .estimator import EstimatorGains, EstimatorState

D_X_MIN = 0.05


@dataclass(frozen=True)
class EdgeControlParams:
    """Per-edge setpoints and safety parameters.

    X+ edges use ``d_s > 0``, ``T``, ``d_star_x`` and ``E_u``. Y edges use a
    signed ``d_s`` (left positive), ``d_star_y`` and ``E_omega``.
    """

    d_s: float
    T: float | None = None
    d_star_x: float | None = None
    d_star_y: float | None = None
    E_u: float = 1.4
    E_omega: float = 1.4

    def x_c(self, gains: EstimatorGains) -> float:
        return -gains.g_d * (self.d_star_x - self.d_s) - self.E_u

    def y_c(self, gains: EstimatorGains) -> float:
        sgn = abs(self.d_s) / self.d_s
        return sgn * (-gains.g_d * (self.d_star_y - self.d_s)) - self.E_omega


@dataclass
class SafetyEvaluation:
    h1: float
    h2: float
    alpha_h1: float
    min_h1_so_far: float = math.inf
    min_h2_so_far: float = math.inf

    def update(self, h1: float, h2: float, gains: EstimatorGains) -> None:
        self.h1 = h1
        self.h2 = h2
        self.alpha_h1 = class_k(h1, gains)
        self.min_h1_so_far = min(self.min_h1_so_far, h1)
        self.min_h2_so_far = min(self.min_h2_so_far, h2)


def class_k(h: float, gains: EstimatorGains) -> float:
    return -gains.g_d * h


def eval_h1(d_x: float, v: float, d_s: float, T: float) -> float:
    """Longitudinal barrier ``d_x - d_s - T v`` (meters)."""
    if not T > 0:
        raise ValueError(f"time headway T must be positive, got {T!r}")
    return d_x - d_s - T * v


def eval_h2(d_y: float, d_s: float) -> float:
    """Lateral barrier, sign-normalised so it is positive on the safe side."""
    if d_s == 0:
        raise ValueError("lateral safety distance d_s must be nonzero (its sign selects the side)")
    return (d_s / abs(d_s)) * (d_y - d_s)


def _finite(*vals) -> None:
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("control law received a non-finite input")


def control_longitudinal(est: EstimatorState, self_v: float, d_x_meas: float, d_y_meas: float,
                         self_omega: float, params: EdgeControlParams,
                         gains: EstimatorGains) -> float:
    """Acceleration command from the X+ edge barrier (before clamping).

    ``u = (v1x_hat - E_u - x_c - v + d_y*omega + alpha(h1)) / T`` with ``h1``
    evaluated on the measured ``d_x``.
    """
    _finite(est.v1x_hat, self_v, d_x_meas, d_y_meas, self_omega)
    h1 = eval_h1(d_x_meas, self_v, params.d_s, params.T)
    rhs = (est.v1x_hat - params.E_u - params.x_c(gains) - self_v
           + d_y_meas * self_omega + class_k(h1, gains))
    return rhs / params.T


@dataclass(frozen=True)
class LateralCommand:
    omega: float
    degenerate: bool = field(default=False)


def control_lateral(est: EstimatorState, d_x_meas: float, d_y_meas: float,
                    params: EdgeControlParams, gains: EstimatorGains,
                    previous_omega: float = 0.0, d_x_min: float = D_X_MIN) -> LateralCommand:
    """Turn-rate command from the Y edge barrier (before clamping).

    When ``|d_x| < d_x_min`` the law is singular; the previous command is held
    and the result is flagged as degenerate.
    """
    _finite(est.v1y_hat, d_x_meas, d_y_meas)
    if abs(d_x_meas) < d_x_min:
        return LateralCommand(previous_omega, True)
    d_s = params.d_s
    g_d = gains.g_d
    omega = ((est.v1y_hat - g_d * (d_y_meas - d_s)) / d_x_meas
             - abs(d_s) * (params.E_omega + params.y_c(gains)) / (d_s * d_x_meas))
    return LateralCommand(omega, False)


@dataclass(frozen=True)
class FeasibilityCheck:
    name: str
    ok: bool
    value: float
    limit: float
    message: str

    @property
    def margin(self) -> float:
        return self.value - self.limit


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[FeasibilityCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[FeasibilityCheck]:
        return [c for c in self.checks if not c.ok]


def check_feasibility(params: EdgeControlParams, gains: EstimatorGains) -> FeasibilityReport:
    """Check the setpoint conditions that make ``x_c, y_c >= 0``.

    Longitudinal: ``d_star_x >= d_s - E_u/g_d``. Lateral: ``d_star_y >= d_s -
    E_omega/g_d`` for ``d_s > 0`` and ``d_star_y <= d_s + E_omega/g_d`` for
    ``d_s < 0``. A lateral setpoint sitting exactly on ``d_s`` with a positive
    error budget fails.
    """
    checks = []
    g_d = gains.g_d
    if params.d_star_x is not None:
        if params.T is None or not params.T > 0:
            checks.append(FeasibilityCheck("headway", False, params.T or 0.0, 0.0,
                                           "time headway T must be positive"))
        if not params.d_s > 0:
            checks.append(FeasibilityCheck("x_safety_distance", False, params.d_s, 0.0,
                                           "longitudinal safety distance d_s must be positive"))
        lim = params.d_s - params.E_u / g_d
        ok = params.d_star_x >= lim
        msg = (f"d_star_x = {params.d_star_x:g} >= {lim:.6g}" if ok else
               f"d_star_x = {params.d_star_x:g} is below the minimum admissible {lim:.6g} "
               f"(= d_s - E_u/g_d); raise d_star_x or lower E_u")
        checks.append(FeasibilityCheck("longitudinal", ok, params.d_star_x, lim, msg))
    if params.d_star_y is not None:
        d_s = params.d_s
        if d_s == 0:
            checks.append(FeasibilityCheck("lateral", False, params.d_star_y, 0.0,
                                           "lateral d_s must be nonzero"))
        else:
            budget = -params.E_omega / g_d
            if d_s > 0:
                lim = d_s + budget
                ok = params.d_star_y >= lim
                val, bound = params.d_star_y, lim
                rel = ">="
            else:
                lim = d_s - budget
                ok = params.d_star_y <= lim
                # report margin as a positive-is-good quantity
                val, bound = -params.d_star_y, -lim
                rel = "<="
            msg = (f"d_star_y = {params.d_star_y:g} {rel} {lim:.6g}" if ok else
                   f"d_star_y = {params.d_star_y:g} violates d_star_y {rel} {lim:.6g} "
                   f"(safety distance {d_s:g} plus E_omega/|g_d|)")
            checks.append(FeasibilityCheck("lateral", ok, val, bound, msg))
    return FeasibilityReport(tuple(checks))
