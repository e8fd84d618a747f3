"""Mean fitness by Picard iteration.

The mean ``ubar`` of the solution solves the fixed-point problem

    ubar(t)**2 = m0**2 + 2 sigma2 t**2 + 2 int_0^t C0''(A(s)) ds,
    A(s) = int_0^s dtau / ubar(tau),

which is iterated from ``q0 = m0`` on a uniform grid with cumulative
trapezoid sums.  The converged table stores every cumulative integral the
reconstruction formula needs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import kernels
from ._csvio import fmt
from .errors import NoConvergence, NonPositiveMeanRequired, TOutOfRange, ZRangeExceeded
from .initdata import CgfHandle, DensitySpec, cgf_handle

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 64


@dataclass(frozen=True)
class MeanTable:
    t: np.ndarray
    ubar: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    sigma2: float
    iter_count: int
    residual_norm: float
    spec: DensitySpec = field(repr=False)
    cgf: CgfHandle = field(repr=False)
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def V(self) -> np.ndarray:
        """Variance at the grid nodes."""
        return self.cgf(self.A, 2, check=False) + 2.0 * self.sigma2 * self.t

    @property
    def dubar(self) -> np.ndarray:
        """``d ubar / dt = V / ubar`` at the grid nodes (from d/dt ubar^2 = 2V)."""
        return self.V / self.ubar

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        # allow rounding slack at the horizon
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-12)):
            raise TOutOfRange(f"t outside [0, {self.T}]")
        return t

    def interp(self, name: str, t):
        """Piecewise-linear interpolation of ``ubar``, ``A``, ``B``, ``D`` or ``E``."""
        t = self._check_t(t)
        out = np.interp(t, self.t, getattr(self, name))
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        V = self.V
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "ubar", "A", "B", "D", "E", "V"])
            for k in range(self.t.size):
                w.writerow([fmt(self.t[k]), fmt(self.ubar[k]), fmt(self.A[k]), fmt(self.B[k]),
                            fmt(self.D[k]), fmt(self.E[k]), fmt(V[k])])


def _grid(T: float, N: int) -> np.ndarray:
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if N < 2:
        raise ValueError(f"need N >= 2 intervals, got {N}")
    return np.linspace(0.0, T, N + 1)


def _picard_step(q, t, h, m0, sigma2, cgf):
    """One application of the fixed-point map to the iterate ``q``."""
    A = kernels.cumtrapz(1.0 / q, h)
    curv = cgf(A, 2, check=False)
    integral = kernels.cumtrapz(curv, h)
    return np.sqrt(m0 * m0 + 2.0 * sigma2 * t * t + 2.0 * integral)


def _validate(spec: DensitySpec, sigma2: float):
    if not spec.m0 > 0:
        raise NonPositiveMeanRequired(f"mean solver needs m0 > 0, got {spec.m0}")
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")


def picard_iterates(spec: DensitySpec, sigma2: float, T: float, N: int, n_iters: int) -> np.ndarray:
    """Return the iterates ``q_0 .. q_{n_iters}`` as rows of an array."""
    _validate(spec, sigma2)
    t = _grid(T, N)
    h = t[1] - t[0]
    cgf = cgf_handle(spec)
    out = np.empty((n_iters + 1, t.size))
    out[0] = spec.m0
    for n in range(n_iters):
        out[n + 1] = _picard_step(out[n], t, h, spec.m0, sigma2, cgf)
    return out


def picard_trace(spec: DensitySpec, sigma2: float, T: float, N: int, n_iters: int) -> np.ndarray:
    """Sup-norm distances ``||q_{n+1} - q_n||`` for ``n = 0 .. n_iters - 1``."""
    q = picard_iterates(spec, sigma2, T, N, n_iters)
    return np.abs(np.diff(q, axis=0)).max(axis=1)


def lipschitz_constant(spec: DensitySpec, z_hi: float, m0: float | None = None, n: int = 2001) -> float:
    """``max |C0'''|`` on ``[0, z_hi]`` divided by ``m0**3``."""
    m0 = spec.m0 if m0 is None else m0
    z = np.linspace(0.0, z_hi, n)
    return float(np.abs(cgf_handle(spec)(z, 3, check=False)).max()) / m0**3


def picard_envelope(d0: float, k: float, T: float, n_terms: int) -> np.ndarray:
    """Factorial bound ``d0 (k T^2)^n / n!`` for ``n = 0 .. n_terms - 1``."""
    n = np.arange(n_terms)
    if k == 0:
        return np.where(n == 0, d0, 0.0)
    return d0 * np.exp(n * math.log(k * T * T) - gammaln(n + 1))


def _table_from(q, t, spec, cgf, sigma2, iters, residual, tol, max_iter) -> MeanTable:
    h = t[1] - t[0]
    A = kernels.cumtrapz(1.0 / q, h)
    B = kernels.cumtrapz(A, h)
    D = kernels.cumtrapz(A * A, h)
    E = kernels.cumtrapz(t / q, h)
    for arr in (t, q, A, B, D, E):
        arr.flags.writeable = False
    return MeanTable(t=t, ubar=q, A=A, B=B, D=D, E=E, sigma2=sigma2, iter_count=iters,
                     residual_norm=residual, spec=spec, cgf=cgf, tol=tol, max_iter=max_iter)


def solve_mean(spec: DensitySpec, sigma2: float, T: float, N: int,
               tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> MeanTable:
    """Solve for ``ubar`` on ``[0, T]`` with ``N`` uniform intervals.

    Iterates until the sup-norm change drops below ``tol``.  Raises
    :class:`NoConvergence` after ``max_iter`` sweeps and
    :class:`ZRangeExceeded` when ``A(T)`` leaves the certified range of a
    tabulated CGF.
    """
    _validate(spec, sigma2)
    t = _grid(T, N)
    h = t[1] - t[0]
    cgf = cgf_handle(spec)
    q = np.full(t.size, spec.m0)
    residual = math.inf
    for it in range(1, max_iter + 1):
        q_new = _picard_step(q, t, h, spec.m0, sigma2, cgf)
        residual = float(np.abs(q_new - q).max())
        q = q_new
        if residual < tol:
            break
    else:
        raise NoConvergence(f"Picard iteration stalled at residual {residual:.3e} after {max_iter} sweeps",
                            residual=residual)
    table = _table_from(q, t, spec, cgf, sigma2, it, residual, tol, max_iter)
    if table.A[-1] > cgf.z_max:
        raise ZRangeExceeded(f"A(T) = {table.A[-1]:.6g} exceeds the certified CGF range z_max = {cgf.z_max:.6g}")
    return table


def extend_table(table: MeanTable, factor: int = 2) -> MeanTable:
    """Re-solve on ``factor`` times the horizon with the same step.

    The cumulative trapezoid is causal, so the values on the old horizon are
    reproduced to within the Picard tolerance.
    """
    N = table.t.size - 1
    return solve_mean(table.spec, table.sigma2, table.T * factor, N * factor,
                      tol=table.tol, max_iter=table.max_iter)


def mean_consistency(table: MeanTable, spec: DensitySpec | None = None) -> float:
    """``max_k |ubar_k - C0'(A_k) - 2 sigma2 E_k|``.

    This identity is not used inside the iteration, so it is an independent
    check on the converged table.
    """
    cgf = table.cgf if spec is None else cgf_handle(spec)
    rhs = cgf(table.A, 1, check=False) + 2.0 * table.sigma2 * table.E
    return float(np.abs(table.ubar - rhs).max())


def variance_of(table: MeanTable, spec: DensitySpec | None, t):
    """``V(t) = C0''(A(t)) + 2 sigma2 t`` with ``A`` linearly interpolated."""
    cgf = table.cgf if spec is None else cgf_handle(spec)
    V = cgf(table.interp("A", t), 2, check=False) + 2.0 * table.sigma2 * np.asarray(t, dtype=float)
    return float(V) if np.ndim(t) == 0 else V


def fixed_point_defect(table: MeanTable) -> float:
    """Sup-norm change from one more Picard sweep on the converged table."""
    q = _picard_step(np.asarray(table.ubar), table.t, table.step, table.spec.m0, table.sigma2, table.cgf)
    return float(np.abs(q - table.ubar).max())
