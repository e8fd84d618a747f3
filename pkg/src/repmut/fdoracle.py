"""Explicit finite differences for both equations.

Forward Euler in time, centered second differences in space, the nonlocal
mean by a trapezoid sum every step, zero Dirichlet values at the artificial
boundaries.  No renormalization: the mass drift is reported instead, since
hiding it would hide the discretization error this oracle exists to expose.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._csvio import write_rows
from .errors import CflViolated, DomainTooSmall, TimeMissing
from .initdata import DensitySpec
from .reconstruct import SolutionField, trapezoid_moments

EQUATIONS = ("u_eq", "v_eq")
CFL_LIMIT = 0.5
BOUNDARY_TOL = 1e-8
MAX_HALVINGS = 30


@dataclass(frozen=True)
class FdConfig:
    """Grid and horizon for :func:`fd_solve`.

    ``xbar_bound`` (v_eq only) is an a-priori bound on ``|xbar|`` used for
    the stability check; without it the step is halved adaptively.
    """

    equation: str
    x_lo: float
    x_hi: float
    dx: float
    dt: float
    T: float
    sigma2: float
    xbar_bound: float | None = None
    boundary_tol: float = BOUNDARY_TOL

    def __post_init__(self):
        if self.equation not in EQUATIONS:
            raise ValueError(f"equation must be one of {EQUATIONS}, got {self.equation!r}")
        if not (self.x_hi > self.x_lo and self.dx > 0 and self.dt > 0 and self.T > 0 and self.sigma2 > 0):
            raise ValueError("need x_hi > x_lo and positive dx, dt, T, sigma2")

    @property
    def grid(self) -> np.ndarray:
        n = int(round((self.x_hi - self.x_lo) / self.dx))
        return self.x_lo + self.dx * np.arange(n + 1)


@dataclass(frozen=True)
class FdResult:
    field: SolutionField
    mass_drift_max: float
    xbar_t: np.ndarray = field(repr=False)
    xbar: np.ndarray = field(repr=False)
    cfl_margin_min: float = 0.0
    dt_final: float = 0.0

    def diagnostics(self, xbar_trace_path: str = "") -> dict:
        return {"mass_drift_max": self.mass_drift_max, "xbar_trace_path": str(xbar_trace_path),
                "cfl_margin_min": self.cfl_margin_min}

    def write_xbar_trace(self, path) -> None:
        write_rows(path, ["t", "xbar"], zip(self.xbar_t, self.xbar))

    def write_diagnostics(self, path, xbar_trace_path="") -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.diagnostics(xbar_trace_path), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cfl_ratio(cfg: FdConfig, xbar_abs: float, dt: float) -> float:
    coeff = cfg.sigma2 if cfg.equation == "u_eq" else cfg.sigma2 * xbar_abs
    return coeff * dt / (cfg.dx * cfg.dx)


def fd_solve(cfg: FdConfig, spec: DensitySpec, record_times=None) -> FdResult:
    """Integrate from the cell averages of ``spec`` up to ``cfg.T``.

    ``record_times`` (default ``[0, T]``) are hit exactly by shortening the
    last step before each of them.
    """
    x = cfg.grid
    dx = cfg.dx
    veq = cfg.equation == "v_eq"
    times = np.array([0.0, cfg.T] if record_times is None else sorted(record_times), dtype=float)
    if times[0] < 0 or times[-1] > cfg.T * (1 + 1e-12):
        raise ValueError("record_times must lie in [0, T]")

    u = spec.cell_average(x, dx)
    if u[0] > cfg.boundary_tol or u[-1] > cfg.boundary_tol:
        raise DomainTooSmall(f"initial density at the boundary exceeds {cfg.boundary_tol}")
    u[0] = u[-1] = 0.0

    xbar0 = abs(trapezoid_moments(x, u)[1])
    dt = cfg.dt
    if veq:
        bound = cfg.xbar_bound
        ref = max(xbar0, bound) if bound is not None else xbar0
        if _cfl_ratio(cfg, ref, dt) > CFL_LIMIT:
            raise CflViolated(f"sigma2 * {ref:.4g} * dt / dx^2 = {_cfl_ratio(cfg, ref, dt):.4g} > {CFL_LIMIT}")
    elif _cfl_ratio(cfg, 0.0, dt) > CFL_LIMIT:
        raise CflViolated(f"sigma2 dt / dx^2 = {_cfl_ratio(cfg, 0.0, dt):.4g} > {CFL_LIMIT}")

    def cap_for(step):
        if not veq:
            return math.inf
        if cfg.xbar_bound is not None:
            return cfg.xbar_bound
        return CFL_LIMIT * dx * dx / (cfg.sigma2 * step)

    snaps = np.empty((times.size, x.size))
    tr_t, tr_x, tr_m = [], [], []
    t_now = 0.0
    halvings = 0
    margin = math.inf
    running = xbar0
    for j, target in enumerate(times):
        while target - t_now > 1e-12 * max(1.0, target):
            remaining = target - t_now
            nfull = int(math.floor(remaining / dt * (1 + 1e-12)))
            if nfull == 0:
                step, n = remaining, 1
            else:
                step, n = dt, nfull
            xb, ms, status, done = kernels.fd_advance(u, x, dx, step, n, cfg.sigma2, veq, cap_for(step),
                                                      cfg.boundary_tol)
            if done:
                tr_t.append(t_now + step * np.arange(done))
                tr_x.append(xb)
                tr_m.append(ms)
                if veq:
                    running = max(running, float(np.abs(xb).max()))
                margin = min(margin, CFL_LIMIT - _cfl_ratio(cfg, running, step))
            if status == kernels.FD_OK:
                exact = nfull == 0 or nfull * dt >= remaining * (1 - 1e-12)
                t_now = target if exact else t_now + n * step
                continue
            t_now += done * step
            if status == kernels.FD_BOUNDARY:
                raise DomainTooSmall(f"density at the boundary exceeded {cfg.boundary_tol} at t = {t_now:.6g}")
            if cfg.xbar_bound is not None:
                raise CflViolated(f"|xbar| passed the bound {cfg.xbar_bound} at t = {t_now:.6g}")
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise CflViolated("adaptive step halving did not restore stability")
            dt *= 0.5
        snaps[j] = u

    xb_final = trapezoid_moments(x, u)
    tr_t.append(np.array([t_now]))
    tr_x.append(np.array([xb_final[0] * xb_final[1]]))
    tr_m.append(np.array([xb_final[0]]))
    masses = np.concatenate(tr_m)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_u = np.where(snaps > 0, np.log(np.where(snaps > 0, snaps, 1.0)), -np.inf)
    moms = np.array([trapezoid_moments(x, row) for row in snaps])
    fld = SolutionField(t=times, x=x, log_u=log_u, u=snaps, mass=moms[:, 0], mean=moms[:, 1], var=moms[:, 2])
    return FdResult(field=fld, mass_drift_max=float(np.abs(masses - 1.0).max()),
                    xbar_t=np.concatenate(tr_t), xbar=np.concatenate(tr_x),
                    cfl_margin_min=float(margin), dt_final=dt)


def compare_l1(a: SolutionField, b: SolutionField, t: float) -> float:
    """Trapezoid L1 distance at time ``t`` on ``a``'s grid.

    ``b`` is linearly resampled (zero outside its range) when grids differ.
    """
    ja, jb = a.time_index(t), b.time_index(t)
    if ja is None or jb is None:
        raise TimeMissing(f"time {t} is not stored in both fields")
    ua = a.u[ja]
    if a.x.shape == b.x.shape and np.allclose(a.x, b.x, rtol=0, atol=1e-12):
        ub = b.u[jb]
    else:
        ub = np.interp(a.x, b.x, b.u[jb], left=0.0, right=0.0)
    return float(np.trapezoid(np.abs(ua - ub), a.x))
