"""Backend selection for the coupled RK4 kernel.

The compiled extension is used when it imports; otherwise the pure-Python
reference is used. Set ``NHFORMATION_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("NHFORMATION_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def coupled_rk4(states, controls, est, est_follower, est_target, gains, noise, dt,
                backend: str | None = None):
    """Advance agents and estimators together by one RK4 step.

    Args:
        states: ``(n, 4)`` array of ``[x, y, phi, v]`` rows.
        controls: ``(n, 2)`` array of ``[u, omega]`` held over the step.
        est: ``(m, 4)`` estimator states ``[d_x_hat, v1x_hat, d_y_hat, v1y_hat]``.
        est_follower, est_target: agent indices of each estimator's
            observer and observed predecessor.
        gains: ``(g_d, g_v, p)``.
        noise: ``(m, 2)`` additive ``(d, theta)`` measurement offsets held
            over the step.
        dt: step length in seconds.
        backend: ``"cython"``, ``"python"`` or ``None`` for the default.

    Returns:
        ``(states_next, est_next)`` with the input shapes. No clamping or
        angle wrapping is applied here.
    """
    states = np.ascontiguousarray(states, dtype=np.float64)
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    n = states.shape[0]
    est = np.ascontiguousarray(est, dtype=np.float64).reshape(-1, 4)
    m = est.shape[0]
    S = states.reshape(-1)
    E = est.reshape(-1)
    U = np.ascontiguousarray(controls[:, 0])
    W = np.ascontiguousarray(controls[:, 1])
    ef = np.ascontiguousarray(est_follower, dtype=np.int64).reshape(-1)
    et = np.ascontiguousarray(est_target, dtype=np.int64).reshape(-1)
    nz = np.ascontiguousarray(noise, dtype=np.float64).reshape(-1)
    if nz.size != 2 * m:
        raise ValueError(f"noise must have shape ({m}, 2)")
    g = (float(gains[0]), float(gains[1]), float(gains[2]))

    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        S1, E1 = _compiled.coupled_rk4(S, E, U, W, ef, et, nz, g, float(dt))
    elif use == "python":
        S1, E1 = _kernels_py.coupled_rk4(
            S.tolist(), E.tolist(), U.tolist(), W.tolist(),
            ef.tolist(), et.tolist(), nz.tolist(), g, float(dt),
        )
        S1 = np.array(S1, dtype=np.float64)
        E1 = np.array(E1, dtype=np.float64)
    else:
        raise ValueError(f"unknown backend {use!r}")
    return S1.reshape(n, 4), E1.reshape(m, 4)
