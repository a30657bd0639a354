# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coupled RK4 kernel (agents + predecessor estimators)."""

from libc.math cimport atan2, cos, hypot, sin
from libc.stdlib cimport free, malloc

import numpy as np


cdef void _derivative(const double* S, const double* E, const double* U,
                      const double* W, const long* ef, const long* et,
                      const double* noise, const char* noisy, int n, int m,
                      double gd, double gv, double p,
                      double* dS, double* dE) noexcept nogil:
    cdef int i, k, b, f, t
    cdef double phi, v, ddx, ddy, c, s, mdx, mdy, d, th, w, vf
    cdef double dxh, vxh, dyh, vyh, rx, ry
    for i in range(n):
        b = 4 * i
        phi = S[b + 2]
        v = S[b + 3]
        dS[b] = v * cos(phi)
        dS[b + 1] = v * sin(phi)
        dS[b + 2] = W[i]
        dS[b + 3] = U[i]
    for k in range(m):
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


def coupled_rk4(double[::1] S, double[::1] E, double[::1] U, double[::1] W,
                long[::1] ef, long[::1] et, double[::1] noise, gains, double dt):
    """One RK4 step over the stacked state; returns ``(S_next, E_next)`` arrays."""
    cdef int n = U.shape[0]
    cdef int m = ef.shape[0]
    cdef int ns = S.shape[0]
    cdef int ne = E.shape[0]
    cdef double gd = gains[0]
    cdef double gv = gains[1]
    cdef double p = gains[2]
    cdef int j, k
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0

    S1 = np.empty(ns, dtype=np.float64)
    E1 = np.empty(ne, dtype=np.float64)
    cdef double[::1] S1v = S1
    cdef double[::1] E1v = E1

    cdef int tot = 5 * (ns + ne) + 1
    cdef double* buf = <double*> malloc(tot * sizeof(double))
    cdef char* noisy = <char*> malloc((m + 1) * sizeof(char))
    if buf == NULL or noisy == NULL:
        free(buf)
        free(noisy)
        raise MemoryError()
    cdef double* k1s = buf
    cdef double* k2s = k1s + ns
    cdef double* k3s = k2s + ns
    cdef double* k4s = k3s + ns
    cdef double* Ts = k4s + ns
    cdef double* k1e = Ts + ns
    cdef double* k2e = k1e + ne
    cdef double* k3e = k2e + ne
    cdef double* k4e = k3e + ne
    cdef double* Te = k4e + ne

    cdef const double* Sp = &S[0] if ns > 0 else NULL
    cdef const double* Ep = &E[0] if ne > 0 else NULL
    cdef const double* Up = &U[0] if n > 0 else NULL
    cdef const double* Wp = &W[0] if n > 0 else NULL
    cdef const long* efp = &ef[0] if m > 0 else NULL
    cdef const long* etp = &et[0] if m > 0 else NULL
    cdef const double* np_ = &noise[0] if m > 0 else NULL

    try:
        with nogil:
            for k in range(m):
                noisy[k] = 1 if (np_[2 * k] != 0.0 or np_[2 * k + 1] != 0.0) else 0

            _derivative(Sp, Ep, Up, Wp, efp, etp, np_, noisy, n, m, gd, gv, p, k1s, k1e)
            for j in range(ns):
                Ts[j] = Sp[j] + h2 * k1s[j]
            for j in range(ne):
                Te[j] = Ep[j] + h2 * k1e[j]
            _derivative(Ts, Te, Up, Wp, efp, etp, np_, noisy, n, m, gd, gv, p, k2s, k2e)
            for j in range(ns):
                Ts[j] = Sp[j] + h2 * k2s[j]
            for j in range(ne):
                Te[j] = Ep[j] + h2 * k2e[j]
            _derivative(Ts, Te, Up, Wp, efp, etp, np_, noisy, n, m, gd, gv, p, k3s, k3e)
            for j in range(ns):
                Ts[j] = Sp[j] + dt * k3s[j]
            for j in range(ne):
                Te[j] = Ep[j] + dt * k3e[j]
            _derivative(Ts, Te, Up, Wp, efp, etp, np_, noisy, n, m, gd, gv, p, k4s, k4e)

            for j in range(ns):
                S1v[j] = Sp[j] + h6 * (k1s[j] + 2.0 * k2s[j] + 2.0 * k3s[j] + k4s[j])
            for j in range(ne):
                E1v[j] = Ep[j] + h6 * (k1e[j] + 2.0 * k2e[j] + 2.0 * k3e[j] + k4e[j])
    finally:
        free(buf)
        free(noisy)
    return S1, E1
