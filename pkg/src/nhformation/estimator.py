"""Communication-free predecessor estimator, gain design and certificates.

A follower observes its predecessor only through range/bearing, projected
to ``(d_x, d_y)`` in its own frame, plus its own speed ``v`` and turn rate
``omega``. The estimator reconstructs ``x = [d_x, v1x, d_y, v1y]``::

    d_x_hat' = v1x_hat - v + d_y*omega + g_d*r_x
    v1x_hat' = g_v*r_x + v1y_hat*omega + p*omega*r_y
    d_y_hat' = v1y_hat - d_x*omega + g_d*r_y
    v1y_hat' = g_v*r_y - v1x_hat*omega - p*omega*r_x

with residuals ``r = estimate - measurement`` and negative gains. Under this
convention the error ``x_hat - x`` obeys ``e' = A(omega) e - B a`` with
``A(omega)`` as returned by :func:`error_matrix`; the measured-minus-estimated
innovation is ``-r``.

The single design knob is ``g_d``; ``g_v = -2 g_d**2 / 9`` and ``p = g_d/3``
place the error poles at ``2 g_d/3`` (twice) and ``g_d/3 +- i omega``, so the
real parts do not depend on the observer's rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NonFiniteError, RelativeMeasurement, TruthProjection


class GainError(ValueError):
    """Estimator gains violate the design constraints."""


class NotHurwitzError(ValueError):
    """Lyapunov equation requested for a matrix that is not Hurwitz."""


@dataclass(frozen=True)
class EstimatorGains:
    g_d: float
    g_v: float
    p: float
    r: float
    k_d: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.g_d, self.g_v, self.p)


def derive_gains(g_d: float) -> EstimatorGains:
    """Full gain set from the position gain ``g_d``.

    >>> derive_gains(-15.0)
    EstimatorGains(g_d=-15.0, g_v=-50.0, p=-5.0, r=10.0, k_d=725.0)

    Raises:
        GainError: ``g_d`` is not negative, or ``g_d >= -1.5`` so that
            ``r = -2 g_d / 3`` fails the requirement ``r > 1``.
    """
    g_d = float(g_d)
    if not math.isfinite(g_d):
        raise GainError(f"g_d must be finite, got {g_d!r}")
    if g_d >= 0:
        raise GainError(f"g_d must be negative (got {g_d:g}); the error dynamics need g_d < 0")
    p = g_d / 3.0
    g_v = -2.0 * g_d * g_d / 9.0
    r = -2.0 * p
    if not r > 1.0:
        raise GainError(
            f"g_d = {g_d:g} gives r = {r:.6g}; the constraint r > 1 requires g_d < -1.5"
        )
    k_d = -(abs(g_v) * g_d + r * r / 4.0)
    return EstimatorGains(g_d=g_d, g_v=g_v, p=p, r=r, k_d=k_d)


def hurwitz_window_ok(gains: EstimatorGains) -> bool:
    """``g_d < 0`` and ``-g_d**2/4 <= g_v < 0``."""
    return gains.g_d < 0 and -gains.g_d ** 2 / 4.0 <= gains.g_v < 0


def error_matrix(gains: EstimatorGains, omega: float) -> np.ndarray:
    """Error-dynamics matrix ``A(omega)`` for the state ``[d_x, v1x, d_y, v1y]``."""
    g_d, g_v, p = gains.g_d, gains.g_v, gains.p
    w = float(omega)
    return np.array(
        [
            [g_d, 1.0, 0.0, 0.0],
            [g_v, 0.0, p * w, w],
            [0.0, 0.0, g_d, 1.0],
            [-p * w, -w, g_v, 0.0],
        ]
    )


INPUT_MATRIX = np.array([[0.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class LyapunovCertificate:
    A0: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    eigenvalues: np.ndarray
    residual: float
    P_eigenvalues: np.ndarray = field(repr=False)

    @property
    def valid(self) -> bool:
        return (
            self.residual <= 1e-9
            and bool(np.all(self.P_eigenvalues > 0))
            and bool(np.all(self.eigenvalues.real < 0))
        )


def solve_lyapunov(A0, Q) -> LyapunovCertificate:
    """Solve ``A0^T P + P A0 + Q = 0`` by vectorisation.

    The Kronecker-sum system ``(I kron A0^T + A0^T kron I) vec(P) = -vec(Q)`` is
    solved directly, which is exact enough at this fixed small size.

    Raises:
        NotHurwitzError: some eigenvalue of ``A0`` has non-negative real part.
        ValueError: ``Q`` is not symmetric positive definite.
    """
    A0 = np.asarray(A0, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    n = A0.shape[0]
    if A0.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A0 and Q must be square matrices of the same size")
    if not (np.all(np.isfinite(A0)) and np.all(np.isfinite(Q))):
        raise NonFiniteError("A0 and Q must be finite")
    eig = np.linalg.eigvals(A0)
    if np.any(eig.real >= 0):
        raise NotHurwitzError(
            "A0 is not Hurwitz; eigenvalues: " + ", ".join(f"{z:.6g}" for z in eig)
        )
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ValueError("Q must be symmetric")
    if np.any(np.linalg.eigvalsh(Q) <= 0):
        raise ValueError("Q must be positive definite")

    eye = np.eye(n)
    K = np.kron(eye, A0.T) + np.kron(A0.T, eye)
    try:
        vecP = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:  # unreachable for Hurwitz A0
        raise NotHurwitzError(f"singular Kronecker sum: {exc}") from exc
    P = vecP.reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    R = A0.T @ P + P @ A0 + Q
    residual = float(np.linalg.norm(R) / np.linalg.norm(Q))
    return LyapunovCertificate(
        A0=A0, Q=Q, P=P, eigenvalues=eig, residual=residual,
        P_eigenvalues=np.linalg.eigvalsh(P),
    )


@dataclass(frozen=True)
class EstimatorState:
    d_x_hat: float
    v1x_hat: float
    d_y_hat: float
    v1y_hat: float

    @property
    def psi_hat(self) -> float:
        """Predecessor heading relative to the follower (two-argument arctangent)."""
        return math.atan2(self.v1y_hat, self.v1x_hat)

    @property
    def v1_hat(self) -> float:
        return math.hypot(self.v1x_hat, self.v1y_hat)

    def as_array(self) -> np.ndarray:
        return np.array([self.d_x_hat, self.v1x_hat, self.d_y_hat, self.v1y_hat])

    @classmethod
    def from_array(cls, a) -> "EstimatorState":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def init_estimator(meas: RelativeMeasurement, self_v: float) -> EstimatorState:
    """Warm start: position from the first measurement, ``v1x_hat = v``, ``v1y_hat = 0``."""
    return EstimatorState(meas.d_x, float(self_v), meas.d_y, 0.0)


def _est_rhs(e, mdx, mdy, v, w, g_d, g_v, p):
    dxh, vxh, dyh, vyh = e
    rx = dxh - mdx
    ry = dyh - mdy
    return (
        vxh - v + mdy * w + g_d * rx,
        g_v * rx + vyh * w + p * w * ry,
        vyh - mdx * w + g_d * ry,
        g_v * ry - vxh * w - p * w * rx,
    )


def estimator_step(est: EstimatorState, gains: EstimatorGains, meas: RelativeMeasurement,
                   self_v: float, self_omega: float, dt: float,
                   meas_next: RelativeMeasurement | None = None) -> EstimatorState:
    """Advance the estimator by one RK4 step.

    The measurement is held over the step, or linearly interpolated towards
    ``meas_next`` when it is given (first-order hold). The simulation harness
    does not use this function: it integrates estimators jointly with the
    agents so that every RK stage sees its own measurement.
    """
    vals = (est.d_x_hat, est.v1x_hat, est.d_y_hat, est.v1y_hat,
            meas.d_x, meas.d_y, self_v, self_omega, dt)
    if not all(math.isfinite(x) for x in vals):
        raise NonFiniteError("estimator_step received a non-finite input")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    g_d, g_v, p = gains.as_tuple()
    if meas_next is None:
        m0 = m1 = m2 = (meas.d_x, meas.d_y)
    else:
        m0 = (meas.d_x, meas.d_y)
        m2 = (meas_next.d_x, meas_next.d_y)
        m1 = (0.5 * (m0[0] + m2[0]), 0.5 * (m0[1] + m2[1]))
    e = est.as_array().tolist()
    h = 0.5 * dt
    k1 = _est_rhs(e, *m0, self_v, self_omega, g_d, g_v, p)
    k2 = _est_rhs([e[i] + h * k1[i] for i in range(4)], *m1, self_v, self_omega, g_d, g_v, p)
    k3 = _est_rhs([e[i] + h * k2[i] for i in range(4)], *m1, self_v, self_omega, g_d, g_v, p)
    k4 = _est_rhs([e[i] + dt * k3[i] for i in range(4)], *m2, self_v, self_omega, g_d, g_v, p)
    out = [e[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)]
    return EstimatorState(*out)


@dataclass(frozen=True)
class EstimationError:
    """Truth minus estimate, component-wise."""

    e_dx: float
    e_vx: float
    e_dy: float
    e_vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_dx, self.e_vx, self.e_dy, self.e_vy])


def estimation_error(true_meas: RelativeMeasurement, truth: TruthProjection,
                     est: EstimatorState) -> EstimationError:
    return EstimationError(
        true_meas.d_x - est.d_x_hat,
        truth.v1x - est.v1x_hat,
        true_meas.d_y - est.d_y_hat,
        truth.v1y - est.v1y_hat,
    )


def estimator_lyapunov(err, gains: EstimatorGains) -> float:
    """Sum of the per-axis quadratic candidates used for the bounded-error argument."""
    e_dx, e_vx, e_dy, e_vy = (float(x) for x in err)
    r = gains.r
    gv = abs(gains.g_v)
    vx = 0.5 * ((r * e_dx - e_vx) ** 2 + gv * e_dx ** 2 + e_vx ** 2)
    vy = 0.5 * ((r * e_dy - e_vy) ** 2 + gv * e_dy ** 2 + e_vy ** 2)
    return vx + vy


@dataclass(frozen=True)
class GuubBounds:
    eps_d: float
    eps_v: float
    eps_x: float
    eps_y: float
    c_i: float
    a_eff: float
    r: float

    @property
    def velocity_envelope(self) -> float:
        """``r * eps_d + eps_v``: bound on ``|v1x error|`` implied by both bounds."""
        return self.r * self.eps_d + self.eps_v


def guub_bounds(gains: EstimatorGains, a_eff: float) -> GuubBounds:
    """Ultimate bounds for estimation and tracking errors.

    ``a_eff`` is the acceleration bound to evaluate with; ``u_max`` is what
    the bundled scenarios report, the worst case is ``ActuationLimits.a_max``.
    """
    if not a_eff > 0:
        raise ValueError(f"a_eff must be positive, got {a_eff!r}")
    c_i = 2.0 * a_eff * a_eff
    r = gains.r
    sq = math.sqrt(c_i)
    eps_d = min(2.0 * (sq + a_eff) / r, math.sqrt(c_i / gains.k_d))
    eps_v = min(sq + a_eff, math.sqrt(c_i / (r - 1.0)))
    eps_x = math.sqrt(c_i / abs(gains.g_d))
    return GuubBounds(eps_d=eps_d, eps_v=eps_v, eps_x=eps_x, eps_y=eps_x,
                      c_i=c_i, a_eff=float(a_eff), r=r)
