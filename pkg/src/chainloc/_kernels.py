"""Hot numeric kernels, JIT-compiled when numba is available.

The power-decay multipurpose weight couples demand point, facility, and
cluster additively in its denominator, so it cannot be factored into
matrix products the way the exponential decay can; it and the other
per-facility/per-demand reductions below dominate the optimizer's inner
loop.  Every kernel accumulates in a fixed index order, and the numpy
fallbacks implement the same arithmetic, so results are bit-stable run to
run on a given install.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


def _jit(fn):
    return njit(cache=True)(fn) if HAVE_NUMBA else fn


def _power_cols_py(dem_x, dem_y, alpha_b, cluster_leg_t, q, am, x, y, a, want_mp, sp_out, mp_out):
    ddx = dem_x - x
    ddy = dem_y - y
    smoothed = alpha_b + ddx * ddx + ddy * ddy
    np.divide(a, smoothed, out=sp_out)
    if want_mp:
        leg = np.sqrt(smoothed)
        den = leg[None, :] + cluster_leg_t + q[:, None]
        np.square(den, out=den)
        np.divide(am[:, None], den, out=den)
        np.sum(den, axis=0, out=mp_out)
        mp_out *= a


def _exp_cols_py(dem_x, dem_y, lam, cluster_leg, t, x, y, a, want_mp, sp_out, mp_out):
    ddx = dem_x - x
    ddy = dem_y - y
    u = np.exp(-lam * np.sqrt(ddx * ddx + ddy * ddy))
    np.multiply(a * u, u, out=sp_out)
    if want_mp:
        mp_out[:] = (a * u) * (cluster_leg @ t)


def _share_value_py(b, w, c):
    return float(np.dot(b, w / (w + c)))


def _moved_share_value_py(b, w, col_old, col_new, c):
    w2 = w - col_old + col_new
    return float(np.dot(b, w2 / (w2 + c)))


if HAVE_NUMBA:

    @njit(cache=True)
    def power_cols(dem_x, dem_y, alpha_b, cluster_leg_t, q, am, x, y, a, want_mp, sp_out, mp_out):  # pragma: no cover
        # cluster_leg_t is (p', n): the m-outer loops keep the inner demand
        # loop contiguous so the divisions vectorize
        n = dem_x.shape[0]
        pp = q.shape[0]
        leg = np.empty(n)
        for i in range(n):
            ddx = dem_x[i] - x
            ddy = dem_y[i] - y
            smoothed = alpha_b[i] + ddx * ddx + ddy * ddy
            sp_out[i] = a / smoothed
            if want_mp:
                leg[i] = np.sqrt(smoothed)
                mp_out[i] = 0.0
        if want_mp:
            for m in range(pp):
                qm = q[m]
                amm = am[m]
                row = cluster_leg_t[m]
                for i in range(n):
                    d = leg[i] + row[i] + qm
                    mp_out[i] += amm / (d * d)
            for i in range(n):
                mp_out[i] *= a

    @njit(cache=True)
    def exp_cols(dem_x, dem_y, lam, cluster_leg, t, x, y, a, want_mp, sp_out, mp_out):  # pragma: no cover
        n = dem_x.shape[0]
        pp = cluster_leg.shape[1] if want_mp else 0
        for i in range(n):
            ddx = dem_x[i] - x
            ddy = dem_y[i] - y
            u = np.exp(-lam * np.sqrt(ddx * ddx + ddy * ddy))
            sp_out[i] = (a * u) * u
            if want_mp:
                s = 0.0
                for m in range(pp):
                    s += cluster_leg[i, m] * t[m]
                mp_out[i] = (a * u) * s

    @njit(cache=True)
    def share_value(b, w, c):  # pragma: no cover
        s = 0.0
        for i in range(b.shape[0]):
            s += b[i] * (w[i] / (w[i] + c[i]))
        return s

    @njit(cache=True)
    def moved_share_value(b, w, col_old, col_new, c):  # pragma: no cover
        s = 0.0
        for i in range(b.shape[0]):
            w2 = w[i] - col_old[i] + col_new[i]
            s += b[i] * (w2 / (w2 + c[i]))
        return s

else:
    power_cols = _power_cols_py
    exp_cols = _exp_cols_py
    share_value = _share_value_py
    moved_share_value = _moved_share_value_py
