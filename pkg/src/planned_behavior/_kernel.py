"""Compiled inner loop of the hybrid integrator.

The integrator state is ``z = (x_1..x_n, ln y_1..ln y_n)``.  Carrying the
nudges as logarithms keeps ``d(ln y)/dt = -r`` exact under RK4 at any step
size, so long quiet stretches can be crossed with large steps without the
decay going unstable.  ``ln 0 = -inf`` is a valid state.
"""
import math

import numpy as np
from numba import njit

DONE = 0
EVENT = 1
NONFINITE = 2
UNDERFLOW = 3

# p layout
SA, SS, SC, MS, MC, R, TAU = range(7)


@njit(cache=True)
def rhs(z, alphas, p, out):
    n = alphas.shape[0]
    for i in range(n):
        if n == 1:
            g = 0.0
        else:
            s = 0.0
            for j in range(n):
                if j != i:
                    s += math.exp(z[n + j])
            g = s / (n - 1)
        xi = z[i]
        out[i] = ((p[SA] * alphas[i] + p[SS] * (g - p[MS])) * p[SC] * (g + p[MC])
                  * (1.0 - xi) * (1.0 + xi))
        out[n + i] = -p[R]


@njit(cache=True)
def rk4(z, h, alphas, p):
    m = z.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    rhs(z, alphas, p, k1)
    for k in range(m):
        tmp[k] = z[k] + 0.5 * h * k1[k]
    rhs(tmp, alphas, p, k2)
    for k in range(m):
        tmp[k] = z[k] + 0.5 * h * k2[k]
    rhs(tmp, alphas, p, k3)
    for k in range(m):
        tmp[k] = z[k] + h * k3[k]
    rhs(tmp, alphas, p, k4)
    out = np.empty(m)
    for k in range(m):
        out[k] = z[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
    return out


@njit(cache=True)
def doubled_step(z, h, alphas, p, n):
    """One step of size h by step doubling.

    Returns the locally extrapolated state and the error estimate on the
    intentions, measured in atanh(x): an error in x is divided by 1 - x^2
    (floored at 1e-6), which keeps the accuracy of the log-odds uniform as x
    approaches +-1.
    """
    full = rk4(z, h, alphas, p)
    half = rk4(rk4(z, 0.5 * h, alphas, p), 0.5 * h, alphas, p)
    err = 0.0
    out = half.copy()
    for i in range(n):
        d = half[i] - full[i]
        xi = half[i]
        # floored where rounding in x (~1e-16) would swamp the tolerance
        scale = max((1.0 - xi) * (1.0 + xi), 1e-6)
        e = abs(d) / 15.0 / scale
        if e > err:
            err = e
        out[i] = half[i] + d / 15.0
    # log-nudges are exact under RK4; keep the half-step value
    return out, err


@njit(cache=True)
def _crossed(z, active, tau, n):
    for i in range(n):
        if active[i] and z[i] >= tau:
            return True
    return False


@njit(cache=True)
def _peak_over(z0, z1, h, alphas, p, active, n, event_tol):
    """Length of the sub-step up to a threshold-crossing interior maximum, or -1."""
    tau = p[TAU]
    d0 = np.empty(z0.shape[0])
    d1 = np.empty(z0.shape[0])
    rhs(z0, alphas, p, d0)
    rhs(z1, alphas, p, d1)
    best = -1.0
    for i in range(n):
        if not active[i] or d0[i] <= 0.0 or d1[i] > 0.0:
            continue
        slope = max(abs(d0[i]), abs(d1[i]))
        if max(z0[i], z1[i]) + h * slope < tau:
            continue
        lo = 0.0
        hi = h
        dm = np.empty(z0.shape[0])
        while hi - lo > event_tol:
            mid = 0.5 * (lo + hi)
            zm, _ = doubled_step(z0, mid, alphas, p, n)
            rhs(zm, alphas, p, dm)
            if dm[i] > 0.0:
                lo = mid
            else:
                hi = mid
        zp, _ = doubled_step(z0, hi, alphas, p, n)
        if zp[i] >= tau and (best < 0.0 or hi < best):
            best = hi
    return best


@njit(cache=True)
def advance(z, t, t_stop, h, alphas, p, active, rtol, dt_max, event_tol):
    """Integrate from ``t`` towards ``t_stop``, stopping early at a threshold crossing.

    Returns ``(status, t, z, h)``.  On ``EVENT`` the returned state sits at the
    right end of a bracket of width <= event_tol around the crossing, with at
    least one active intention >= tau.
    """
    n = alphas.shape[0]
    tau = p[TAU]
    while t < t_stop:
        hmin = 1e-13 * max(1.0, abs(t))
        step = min(h, dt_max)
        last = False
        if step >= t_stop - t:
            step = t_stop - t
            last = True
        z_new, err_abs = doubled_step(z, step, alphas, p, n)
        err = err_abs / rtol
        if err > 1.0 and step > hmin:
            h = step * max(0.1, 0.9 * err ** -0.2)
            continue
        for k in range(n):
            if not math.isfinite(z_new[k]):
                return NONFINITE, t, z, h
        # crossing strictly inside the step, or an interior peak above tau
        cut = -1.0
        if _crossed(z_new, active, tau, n):
            cut = step
        else:
            cut = _peak_over(z, z_new, step, alphas, p, active, n, event_tol)
        if cut > 0.0:
            lo = 0.0
            hi = cut
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                zm, _ = doubled_step(z, mid, alphas, p, n)
                if _crossed(zm, active, tau, n):
                    hi = mid
                else:
                    lo = mid
            if hi == step and last:
                z_hit, _ = doubled_step(z, hi, alphas, p, n)
                return EVENT, t_stop, z_hit, h
            z_hit, _ = doubled_step(z, hi, alphas, p, n)
            return EVENT, t + hi, z_hit, h
        z = z_new
        t = t_stop if last else t + step
        if err < 1e-30:
            grow = 4.0
        else:
            grow = min(4.0, 0.9 * err ** -0.2)
        if not last or grow < 1.0:
            h = step * grow
        if step < hmin and err > 1.0:
            return UNDERFLOW, t, z, h
    return DONE, t, z, h
