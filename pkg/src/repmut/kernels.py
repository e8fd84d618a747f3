"""Hot numeric kernels.

Each kernel exists twice: a loop form compiled with numba and a vectorized
numpy form. The module-level names dispatch to one of them according to
``repmut._accel.USE_NUMBA``; the ``*_nb`` / ``*_np`` variants stay importable
so tests and the benchmark can compare both paths directly.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

# fd_advance status codes
FD_OK = 0
FD_CFL = 1
FD_BOUNDARY = 2

LOG_SQRT_4PI = 0.5 * math.log(4.0 * math.pi)


# ---------------------------------------------------------------------------
# cumulative trapezoid on a uniform grid


@njit
def cumtrapz_nb(y, h):
    out = np.empty(y.shape[0])
    out[0] = 0.0
    acc = 0.0
    for k in range(1, y.shape[0]):
        acc += 0.5 * h * (y[k - 1] + y[k])
        out[k] = acc
    return out


def cumtrapz_np(y, h):
    out = np.empty(y.shape[0])
    out[0] = 0.0
    np.cumsum(0.5 * h * (y[1:] + y[:-1]), out=out[1:])
    return out


# ---------------------------------------------------------------------------
# explicit Euler stepping for both replicator-mutator equations


@njit
def fd_advance_nb(u, x, dx, dt, nsteps, sigma2, veq, xbar_cap, boundary_tol):
    """Advance ``u`` in place by up to ``nsteps`` Euler steps.

    Returns ``(xbars, masses, status, done)``; the traces hold the state
    at the start of each completed step.  The loop stops early with
    ``FD_CFL`` (before stepping) when ``|xbar| > xbar_cap`` and with
    ``FD_BOUNDARY`` (after stepping) when a boundary-adjacent value
    exceeds ``boundary_tol``.
    """
    n = u.shape[0]
    xbars = np.empty(nsteps)
    masses = np.empty(nsteps)
    new = np.empty(n)
    lam = dt / (dx * dx)
    for step in range(nsteps):
        m0 = 0.0
        m1 = 0.0
        for j in range(n):
            m0 += u[j]
            m1 += x[j] * u[j]
        m0 -= 0.5 * (u[0] + u[n - 1])
        m1 -= 0.5 * (x[0] * u[0] + x[n - 1] * u[n - 1])
        mass = m0 * dx
        xbar = m1 * dx
        if veq and abs(xbar) > xbar_cap:
            return xbars[:step], masses[:step], FD_CFL, step
        xbars[step] = xbar
        masses[step] = mass
        if veq:
            diff = sigma2 * xbar
            for j in range(1, n - 1):
                new[j] = u[j] + diff * lam * (u[j + 1] - 2.0 * u[j] + u[j - 1]) \
                    + dt * u[j] * (x[j] - xbar)
        else:
            diff = sigma2
            inv = 1.0 / xbar
            for j in range(1, n - 1):
                new[j] = u[j] + diff * lam * (u[j + 1] - 2.0 * u[j] + u[j - 1]) \
                    + dt * u[j] * (x[j] - xbar) * inv
        new[0] = 0.0
        new[n - 1] = 0.0
        for j in range(n):
            u[j] = new[j]
        if abs(u[1]) > boundary_tol or abs(u[n - 2]) > boundary_tol:
            return xbars[: step + 1], masses[: step + 1], FD_BOUNDARY, step + 1
    return xbars, masses, FD_OK, nsteps


def fd_advance_np(u, x, dx, dt, nsteps, sigma2, veq, xbar_cap, boundary_tol):
    xbars = np.empty(nsteps)
    masses = np.empty(nsteps)
    lam = dt / (dx * dx)
    xi = x[1:-1]
    for step in range(nsteps):
        mass = dx * (u.sum() - 0.5 * (u[0] + u[-1]))
        xu = x * u
        xbar = dx * (xu.sum() - 0.5 * (xu[0] + xu[-1]))
        if veq and abs(xbar) > xbar_cap:
            return xbars[:step], masses[:step], FD_CFL, step
        xbars[step] = xbar
        masses[step] = mass
        if veq:
            diff, react = sigma2 * xbar, xi - xbar
        else:
            diff, react = sigma2, (xi - xbar) / xbar
        lap = u[2:] - 2.0 * u[1:-1] + u[:-2]
        u[1:-1] = u[1:-1] + diff * lam * lap + dt * u[1:-1] * react
        u[0] = 0.0
        u[-1] = 0.0
        if abs(u[1]) > boundary_tol or abs(u[-2]) > boundary_tol:
            return xbars[: step + 1], masses[: step + 1], FD_BOUNDARY, step + 1
    return xbars, masses, FD_OK, nsteps


# ---------------------------------------------------------------------------
# heat-kernel convolution of tabulated data, log-stable


@njit
def heat_convolve_log_nb(xd, fd, ys, t, sigma2):
    n = xd.shape[0]
    sd = math.sqrt(2.0 * sigma2 * t)
    four_s2t = 4.0 * sigma2 * t
    hmax = sd / 8.0
    out = np.empty(ys.shape[0])
    for iy in range(ys.shape[0]):
        y = ys[iy]
        lo = y - 10.0 * sd
        hi = y + 10.0 * sd
        if hi < xd[0] + 10.0 * sd:
            hi = xd[0] + 10.0 * sd
        if lo > xd[n - 1] - 10.0 * sd:
            lo = xd[n - 1] - 10.0 * sd
        i0 = np.searchsorted(xd, lo) - 1
        i1 = np.searchsorted(xd, hi)
        if i0 < 0:
            i0 = 0
        if i1 > n - 1:
            i1 = n - 1
        # pass 1: max exponent; pass 2: scaled sum
        best = -np.inf
        for i in range(i0, i1):
            h = xd[i + 1] - xd[i]
            m = int(math.ceil(h / hmax))
            if m < 1:
                m = 1
            for k in range(m + 1):
                th = k / m
                f = fd[i] + (fd[i + 1] - fd[i]) * th
                if f > 0.0:
                    xx = xd[i] + h * th
                    e = math.log(f) - (y - xx) ** 2 / four_s2t
                    if e > best:
                        best = e
        if best == -np.inf:
            out[iy] = -np.inf
            continue
        acc = 0.0
        for i in range(i0, i1):
            h = xd[i + 1] - xd[i]
            m = int(math.ceil(h / hmax))
            if m < 1:
                m = 1
            step = h / m
            for k in range(m + 1):
                th = k / m
                f = fd[i] + (fd[i + 1] - fd[i]) * th
                if f > 0.0:
                    xx = xd[i] + h * th
                    e = math.log(f) - (y - xx) ** 2 / four_s2t
                    w = step if 0 < k < m else 0.5 * step
                    acc += w * math.exp(e - best)
        out[iy] = best + math.log(acc) - LOG_SQRT_4PI - 0.5 * math.log(sigma2 * t)
    return out


def heat_convolve_log_np(xd, fd, ys, t, sigma2):
    n = xd.shape[0]
    sd = math.sqrt(2.0 * sigma2 * t)
    four_s2t = 4.0 * sigma2 * t
    hmax = sd / 8.0
    out = np.empty(ys.shape[0])
    for iy, y in enumerate(ys):
        lo = min(y - 10.0 * sd, xd[-1] - 10.0 * sd)
        hi = max(y + 10.0 * sd, xd[0] + 10.0 * sd)
        i0 = max(int(np.searchsorted(xd, lo)) - 1, 0)
        i1 = min(int(np.searchsorted(xd, hi)), n - 1)
        if i1 <= i0:
            out[iy] = -np.inf
            continue
        h = np.diff(xd[i0 : i1 + 1])
        m = np.maximum(np.ceil(h / hmax).astype(np.int64), 1)
        # sub-nodes of every interval, endpoints included per interval
        reps = m + 1
        owner = np.repeat(np.arange(i0, i1), reps)
        k = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        mm = np.repeat(m, reps)
        th = k / mm
        f = fd[owner] + (fd[owner + 1] - fd[owner]) * th
        xx = xd[owner] + np.repeat(h, reps) * th
        w = np.repeat(h, reps) / mm
        w = np.where((k == 0) | (k == mm), 0.5 * w, w)
        with np.errstate(divide="ignore"):
            e = np.log(f) - (y - xx) ** 2 / four_s2t
        pos = f > 0.0
        if not pos.any():
            out[iy] = -np.inf
            continue
        best = e[pos].max()
        acc = np.sum(w[pos] * np.exp(e[pos] - best))
        out[iy] = best + math.log(acc) - LOG_SQRT_4PI - 0.5 * math.log(sigma2 * t)
    return out


# ---------------------------------------------------------------------------
# RK4 for phi' = ubar(phi) with a cubic Hermite interpolant of ubar


@njit
def _hermite_nb(p, h, vals, ders):
    nint = vals.shape[0] - 1
    i = int(p / h)
    if i >= nint:
        i = nint - 1
    if i < 0:
        i = 0
    s = p / h - i
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * vals[i] + (s3 - 2 * s2 + s) * h * ders[i]
            + (-2 * s3 + 3 * s2) * vals[i + 1] + (s3 - s2) * h * ders[i + 1])


@njit
def rk4_warp_nb(h, vals, ders, phi0, dt, nsteps):
    """Integrate ``phi' = ubar(phi)`` from ``phi0``.

    Returns ``(phis, done)``; ``done < nsteps`` means a stage left the
    table horizon and the caller must extend the table.
    """
    horizon = h * (vals.shape[0] - 1)
    phis = np.empty(nsteps + 1)
    phis[0] = phi0
    p = phi0
    for k in range(nsteps):
        if p > horizon:
            return phis[: k + 1], k
        k1 = _hermite_nb(p, h, vals, ders)
        q = p + 0.5 * dt * k1
        if q > horizon:
            return phis[: k + 1], k
        k2 = _hermite_nb(q, h, vals, ders)
        q = p + 0.5 * dt * k2
        if q > horizon:
            return phis[: k + 1], k
        k3 = _hermite_nb(q, h, vals, ders)
        q = p + dt * k3
        if q > horizon:
            return phis[: k + 1], k
        k4 = _hermite_nb(q, h, vals, ders)
        p = p + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        phis[k + 1] = p
    return phis, nsteps


def _hermite_np(p, h, vals, ders):
    i = min(max(int(p / h), 0), vals.shape[0] - 2)
    s = p / h - i
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * vals[i] + (s3 - 2 * s2 + s) * h * ders[i]
            + (-2 * s3 + 3 * s2) * vals[i + 1] + (s3 - s2) * h * ders[i + 1])


def rk4_warp_np(h, vals, ders, phi0, dt, nsteps):
    horizon = h * (vals.shape[0] - 1)
    phis = np.empty(nsteps + 1)
    phis[0] = phi0
    p = phi0
    for k in range(nsteps):
        if p > horizon:
            return phis[: k + 1], k
        k1 = _hermite_np(p, h, vals, ders)
        stages = [k1]
        for frac in (0.5, 0.5, 1.0):
            q = p + frac * dt * stages[-1]
            if q > horizon:
                return phis[: k + 1], k
            stages.append(_hermite_np(q, h, vals, ders))
        k1, k2, k3, k4 = stages
        p = p + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        phis[k + 1] = p
    return phis, nsteps


if USE_NUMBA:
    cumtrapz = cumtrapz_nb
    fd_advance = fd_advance_nb
    heat_convolve_log = heat_convolve_log_nb
    rk4_warp = rk4_warp_nb
else:
    cumtrapz = cumtrapz_np
    fd_advance = fd_advance_np
    heat_convolve_log = heat_convolve_log_np
    rk4_warp = rk4_warp_np
