"""Pure-Python reference kernels.

Mirrors ``_kernels.pyx`` operation-for-operation so that both backends
produce the same floating point results (the extension is built without
FMA contraction).
"""

from math import atan2, cos, hypot, sin


def _derivative(S, E, U, W, ef, et, noise, noisy, gd, gv, p, dS, dE):
    n = len(U)
    for i in range(n):
        b = 4 * i
        phi = S[b + 2]
        v = S[b + 3]
        dS[b] = v * cos(phi)
        dS[b + 1] = v * sin(phi)
        dS[b + 2] = W[i]
        dS[b + 3] = U[i]
    for k in range(len(ef)):
        f = 4 * ef[k]
        t = 4 * et[k]
        ddx = S[t] - S[f]
        ddy = S[t + 1] - S[f + 1]
        c = cos(S[f + 2])
        s = sin(S[f + 2])
        mdx = c * ddx + s * ddy
        mdy = -s * ddx + c * ddy
        if noisy[k]:
            d = hypot(mdx, mdy) + noise[2 * k]
            th = atan2(mdy, mdx) + noise[2 * k + 1]
            mdx = d * cos(th)
            mdy = d * sin(th)
        w = W[ef[k]]
        vf = S[f + 3]
        b = 4 * k
        dxh = E[b]
        vxh = E[b + 1]
        dyh = E[b + 2]
        vyh = E[b + 3]
        rx = dxh - mdx
        ry = dyh - mdy
        dE[b] = vxh - vf + mdy * w + gd * rx
        dE[b + 1] = gv * rx + vyh * w + p * w * ry
        dE[b + 2] = vyh - mdx * w + gd * ry
        dE[b + 3] = gv * ry - vxh * w - p * w * rx


def coupled_rk4(S, E, U, W, ef, et, noise, gains, dt):
    """One RK4 step of agents plus estimators (flat lists, returns new lists)."""
    gd, gv, p = gains
    ns = len(S)
    ne = len(E)
    noisy = [noise[2 * k] != 0.0 or noise[2 * k + 1] != 0.0 for k in range(len(ef))]
    k1s = [0.0] * ns
    k2s = [0.0] * ns
    k3s = [0.0] * ns
    k4s = [0.0] * ns
    k1e = [0.0] * ne
    k2e = [0.0] * ne
    k3e = [0.0] * ne
    k4e = [0.0] * ne
    h2 = 0.5 * dt

    _derivative(S, E, U, W, ef, et, noise, noisy, gd, gv, p, k1s, k1e)
    Ts = [S[j] + h2 * k1s[j] for j in range(ns)]
    Te = [E[j] + h2 * k1e[j] for j in range(ne)]
    _derivative(Ts, Te, U, W, ef, et, noise, noisy, gd, gv, p, k2s, k2e)
    Ts = [S[j] + h2 * k2s[j] for j in range(ns)]
    Te = [E[j] + h2 * k2e[j] for j in range(ne)]
    _derivative(Ts, Te, U, W, ef, et, noise, noisy, gd, gv, p, k3s, k3e)
    Ts = [S[j] + dt * k3s[j] for j in range(ns)]
    Te = [E[j] + dt * k3e[j] for j in range(ne)]
    _derivative(Ts, Te, U, W, ef, et, noise, noisy, gd, gv, p, k4s, k4e)

    h6 = dt / 6.0
    S1 = [S[j] + h6 * (k1s[j] + 2.0 * k2s[j] + 2.0 * k3s[j] + k4s[j]) for j in range(ns)]
    E1 = [E[j] + h6 * (k1e[j] + 2.0 * k2e[j] + 2.0 * k3e[j] + k4e[j]) for j in range(ne)]
    return S1, E1
