"""Time warp between the two equations.

If ``phi' = ubar(phi)``, ``phi(0) = 0``, then ``v(t, x) = u(phi(t), x)``
solves the mean-modulated diffusion equation.  ``phi`` grows at least like
``m0 t`` and much faster later, so the mean table is re-solved on doubled
horizons whenever an RK4 stage would step past it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import kernels
from ._csvio import write_rows
from .errors import HorizonExceeded, RepmutError, TOutOfRange
from .heatprop import HeatEval
from .meanfit import MeanTable, extend_table
from .reconstruct import u_eval

MAX_EXTENSIONS = 12


@dataclass(frozen=True)
class TimeWarp:
    t: np.ndarray
    phi: np.ndarray
    table: MeanTable

    @property
    def T_v(self) -> float:
        return float(self.t[-1])

    @property
    def slope(self) -> np.ndarray:
        """``phi'`` at the nodes, read off the ODE."""
        return self.table.interp("ubar", self.phi)

    def __call__(self, t):
        """``phi(t)`` by cubic Hermite interpolation with exact node slopes."""
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0) or np.any(tt > self.T_v * (1 + 1e-12)):
            raise TOutOfRange(f"t outside [0, {self.T_v}]")
        spline = CubicHermiteSpline(self.t, self.phi, self.slope)
        out = spline(np.clip(tt, 0.0, self.T_v))
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        write_rows(path, ["t", "phi"], zip(self.t, self.phi))


def solve_warp(table: MeanTable, T_v: float, steps: int) -> TimeWarp:
    """RK4 for ``phi' = ubar(phi)`` on ``[0, T_v]`` with ``steps`` steps.

    ``ubar`` is the cubic Hermite interpolant of the table using the exact
    node slopes ``V / ubar``.  The table is extended as needed; the warp
    keeps a reference to the final one.
    """
    if not T_v > 0 or steps < 1:
        raise ValueError("need T_v > 0 and steps >= 1")
    dt = T_v / steps
    phis = np.empty(steps + 1)
    phis[0] = 0.0
    done = 0
    extensions = 0
    while True:
        vals = np.ascontiguousarray(table.ubar)
        ders = np.ascontiguousarray(table.dubar)
        seg, k = kernels.rk4_warp(table.step, vals, ders, phis[done], dt, steps - done)
        phis[done : done + k + 1] = seg[: k + 1]
        done += k
        if done == steps:
            break
        if extensions >= MAX_EXTENSIONS:
            raise HorizonExceeded(f"warp needs phi beyond {table.T} after {extensions} extensions")
        try:
            table = extend_table(table)
        except RepmutError as exc:
            raise HorizonExceeded(f"extending the mean table to {2 * table.T} failed: {exc}") from exc
        extensions += 1
    t = np.linspace(0.0, T_v, steps + 1)
    return TimeWarp(t=t, phi=phis, table=table)


def v_eval(warp: TimeWarp, heat: HeatEval, t: float, x):
    """``(log_v, v)`` at time ``t`` as ``u(phi(t), x)``."""
    return u_eval(warp.table, heat, warp(t), x)


def v_moments(warp: TimeWarp, t) -> tuple:
    """Mean and variance of ``v(t, .)`` carried over from the mean table."""
    from .meanfit import variance_of

    phi = warp(t)
    return warp.table.interp("ubar", phi), variance_of(warp.table, None, phi)
