"""Assemble ``u(t, x)`` from the mean table and the heat flow.

    log u(t, x) = log w(t, x + 2 sigma2 B(t)) - t + x A(t) + sigma2 D(t)

with ``A, B, D`` the cumulative integrals stored in a :class:`MeanTable`.
Everything stays in log space until the final exponentiation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._csvio import fmt, write_rows
from .errors import ZOutOfRange
from .heatprop import HeatEval
from .initdata import DensitySpec, cgf_handle, moment
from .meanfit import MeanTable, variance_of

WINDOW_SDS = 12.0
MOMENT_POINTS = 4801


@dataclass(frozen=True)
class SolutionField:
    """Density samples ``u[j, i] = u(t[j], x[i])`` plus per-time moments."""

    t: np.ndarray
    x: np.ndarray
    log_u: np.ndarray
    u: np.ndarray
    mass: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    @property
    def argmax(self) -> np.ndarray:
        """Peak location, refined by a parabola through ``log_u`` at the best node."""
        out = np.empty(self.t.size)
        for j in range(self.t.size):
            i = int(np.argmax(self.u[j]))
            out[j] = self.x[i]
            if 0 < i < self.x.size - 1:
                lm, l0, lp = self.log_u[j, i - 1 : i + 2]
                curv = lm - 2.0 * l0 + lp
                h = self.x[i + 1] - self.x[i]
                if np.isfinite(curv) and curv < 0 and abs(self.x[i] - self.x[i - 1] - h) <= 1e-9 * h:
                    out[j] += 0.5 * h * (lm - lp) / curv
        return out

    def time_index(self, t: float, atol: float = 1e-9) -> int | None:
        j = int(np.argmin(np.abs(self.t - t)))
        return j if abs(self.t[j] - t) <= atol else None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "u", "log_u"])
            for j, tj in enumerate(self.t):
                tj = fmt(tj)
                for i, xi in enumerate(self.x):
                    w.writerow([tj, fmt(xi), fmt(self.u[j, i]), fmt(self.log_u[j, i])])

    def moments_to_csv(self, path) -> None:
        write_rows(path, ["t", "mass", "mean", "var", "argmax"],
                   zip(self.t, self.mass, self.mean, self.var, self.argmax))


def trapezoid_moments(x: np.ndarray, u: np.ndarray) -> tuple[float, float, float]:
    """Mass, mean and variance of samples ``u`` on grid ``x`` by trapezoid."""
    m0 = np.trapezoid(u, x)
    m1 = np.trapezoid(x * u, x) / m0
    var = np.trapezoid((x - m1) ** 2 * u, x) / m0
    return float(m0), float(m1), float(var)


def u_eval(table: MeanTable, heat: HeatEval, t: float, x):
    """Return ``(log_u, u)`` at time ``t`` for points ``x``."""
    A = table.interp("A", t)
    B = table.interp("B", t)
    D = table.interp("D", t)
    sigma2 = table.sigma2
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    log_w, _ = heat(t, x + 2.0 * sigma2 * B)
    log_u = log_w - t + x * A + sigma2 * D
    u = np.exp(log_u)
    if scalar:
        return float(log_u[0]), float(u[0])
    return log_u, u


def moment_window(table: MeanTable, t: float, n_sds: float = WINDOW_SDS) -> tuple[float, float]:
    """``[mean - n sd, mean + n sd]`` predicted from the table at time ``t``."""
    mean = table.interp("ubar", t)
    sd = math.sqrt(variance_of(table, None, t))
    return mean - n_sds * sd, mean + n_sds * sd


def solution_moments(table: MeanTable, heat: HeatEval, t: float,
                     n_points: int = MOMENT_POINTS) -> tuple[float, float, float]:
    """Quadrature mass, mean and variance on the predicted moment window.

    At ``t = 0`` the exact moments of the initial density are returned
    (the uniform datum is discontinuous there).
    """
    if t == 0.0:
        spec = heat.spec
        return moment(spec, 0), moment(spec, 1), spec.variance()
    lo, hi = moment_window(table, t)
    xs = np.linspace(lo, hi, n_points)
    _, u = u_eval(table, heat, t, xs)
    return trapezoid_moments(xs, u)


def field_on_grid(table: MeanTable, heat: HeatEval, times, xs, n_moment_points: int = MOMENT_POINTS) -> SolutionField:
    """Evaluate ``u`` on ``times x xs``; moments come from the predicted window."""
    times = np.asarray(times, dtype=float)
    xs = np.asarray(xs, dtype=float)
    log_u = np.empty((times.size, xs.size))
    mass = np.empty(times.size)
    mean = np.empty(times.size)
    var = np.empty(times.size)
    for j, tj in enumerate(times):
        log_u[j], _ = u_eval(table, heat, float(tj), xs)
        mass[j], mean[j], var[j] = solution_moments(table, heat, float(tj), n_moment_points)
    return SolutionField(t=times, x=xs, log_u=log_u, u=np.exp(log_u), mass=mass, mean=mean, var=var)


def auto_window(table: MeanTable, times, n_sds: float = WINDOW_SDS) -> tuple[float, float]:
    """Envelope of the predicted moment windows over ``times``."""
    los, his = zip(*(moment_window(table, float(t), n_sds) for t in times))
    return min(los), max(his)


# ---------------------------------------------------------------------------
# full cumulant generating function


def quadratic_term(table: MeanTable, t: float) -> float:
    """``D(t) - 2 A(t) B(t) + A(t)^2 t``, i.e. ``int_0^t (A(r) - A(t))^2 dr``."""
    A, B, D = (table.interp(k, t) for k in "ABD")
    return D - 2.0 * A * B + A * A * t


def quadratic_term_direct(table: MeanTable, t: float, n: int = 1001) -> float:
    """``int_{-t}^0 (int_0^s dtau / ubar(t + tau))^2 ds`` by nested Simpson.

    Uses only ``ubar``; serves as an independent check of :func:`quadratic_term`.
    """
    from scipy.integrate import simpson

    if t == 0.0:
        return 0.0
    s = np.linspace(-t, 0.0, n)
    frac = np.linspace(0.0, 1.0, n)
    # tau runs from 0 down to s for each s
    tau = s[:, None] * frac[None, :]
    inv = 1.0 / np.interp(t + tau, table.t, table.ubar)
    inner = simpson(inv, x=frac, axis=1) * s
    return float(simpson(inner * inner, x=s))


def quadratic_identity_gap(table: MeanTable, times=None) -> float:
    """Largest gap between the closed rewrite and the direct nested integral."""
    if times is None:
        times = np.linspace(0.0, table.T, 7)
    return max(abs(quadratic_term(table, float(t)) - quadratic_term_direct(table, float(t))) for t in times)


def cgf_full(table: MeanTable, spec: DensitySpec | None, t: float, z):
    """``C(t, z) = ln int u(t, x) e^{zx} dx`` from the mean table alone."""
    cgf = table.cgf if spec is None else cgf_handle(spec)
    A = table.interp("A", t)
    E = table.interp("E", t)
    z = np.asarray(z, dtype=float)
    arg = z + A
    if np.any(arg < cgf.z_min) or np.any(arg > cgf.z_max):
        raise ZOutOfRange(f"z + A(t) outside certified range [{cgf.z_min}, {cgf.z_max}]")
    s2 = table.sigma2
    out = cgf(arg, 0) + s2 * t * z * z + 2.0 * s2 * z * E + s2 * quadratic_term(table, t) - t
    return float(out) if out.ndim == 0 else out
