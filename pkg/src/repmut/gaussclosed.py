"""Closed-form Gaussian solutions.

A Gaussian profile ``sqrt(a/2pi) exp(-a (x - m)^2 / 2)`` stays Gaussian under
both equations; only the inverse variance ``a`` and mean ``m`` move.

* constant diffusion:  ``a = a0 / (1 + 2 a0 sigma2 t)``, ``m^2 = m0^2 + 2 t / a0 + 2 sigma2 t^2``
* mean-modulated diffusion:  ``m' = 1/a``, ``a' = -2 sigma2 a^2 m``, so
  ``m'' = 2 sigma2 m``, which may blow up (``a -> inf``) in finite time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._csvio import write_rows
from .errors import NonPositiveA0, PastBlowup, StiffnessAbort

CASE_TOL = 1e-12
A_CAP = 1e12


@dataclass(frozen=True)
class GaussianState:
    a: float
    m: float

    @property
    def V(self) -> float:
        return 1.0 / self.a


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    a: np.ndarray
    m: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return 1.0 / self.a

    def to_csv(self, path) -> None:
        write_rows(path, ["t", "a", "m", "V"], zip(self.t, self.a, self.m, self.V))


def _check_a0(a0):
    if not a0 > 0:
        raise NonPositiveA0(f"a0 must be positive, got {a0}")


def gauss_u(a0: float, m0: float, sigma2: float, t, branch: str = "plus"):
    """Gaussian solution of the constant-diffusion equation.

    ``branch`` ('plus' or 'minus') picks the sign of the mean when
    ``m0 == 0``, where both directions of propagation solve the equation.
    Vector ``t`` gives a :class:`Trajectory`.
    """
    _check_a0(a0)
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("t must be non-negative")
    sign = 1.0 if m0 > 0 else -1.0 if m0 < 0 else (1.0 if branch == "plus" else -1.0)
    a = a0 / (1.0 + 2.0 * a0 * sigma2 * tt)
    m = sign * np.sqrt(2.0 * sigma2 * tt * tt + 2.0 * tt / a0 + m0 * m0)
    if tt.ndim == 0:
        return GaussianState(float(a), float(m))
    return Trajectory(tt, a, m)


def _threshold(a0, sigma2):
    return -1.0 / (a0 * math.sqrt(2.0 * sigma2))


def gauss_v_classify(a0: float, m0: float, sigma2: float) -> str:
    """'I' (finite-time concentration), 'II' (boundary) or 'III' (global growth)."""
    _check_a0(a0)
    mc = _threshold(a0, sigma2)
    if abs(m0 - mc) <= CASE_TOL * abs(mc):
        return "II"
    return "I" if m0 < mc else "III"


def blowup_time(a0: float, m0: float, sigma2: float) -> float | None:
    """Time at which ``a`` diverges in case I, ``None`` otherwise."""
    if gauss_v_classify(a0, m0, sigma2) != "I":
        return None
    s = math.sqrt(sigma2)
    k = 2.0 * a0 * m0 * s
    return math.log((k - math.sqrt(2.0)) / (k + math.sqrt(2.0))) / (2.0 * math.sqrt(2.0 * sigma2))


def gauss_v_eval(a0: float, m0: float, sigma2: float, t):
    """Gaussian solution of the mean-modulated equation at ``t``.

    Raises :class:`PastBlowup` for ``t >= T*`` in case I.
    """
    case = gauss_v_classify(a0, m0, sigma2)
    tt = np.asarray(t, dtype=float)
    if case == "I":
        tstar = blowup_time(a0, m0, sigma2)
        if np.any(tt >= tstar):
            raise PastBlowup(f"t = {np.max(tt)} is past the blow-up time {tstar}")
    r = math.sqrt(2.0 * sigma2)
    if case == "II":
        # exact boundary forms; the general ones cancel catastrophically here
        m = m0 * np.exp(-r * tt)
        a = a0 * np.exp(r * tt)
    else:
        s = math.sqrt(sigma2)
        plus = math.sqrt(2.0) + 2.0 * a0 * m0 * s
        minus = math.sqrt(2.0) - 2.0 * a0 * m0 * s
        ep, em = np.exp(r * tt), np.exp(-r * tt)
        m = plus / (4.0 * a0 * s) * ep - minus / (4.0 * a0 * s) * em
        a = 2.0 * math.sqrt(2.0) * a0 / (plus * ep + minus * em)
    if tt.ndim == 0:
        return GaussianState(float(a), float(m))
    return Trajectory(tt, a, m)


def asymptotic_constants(a0: float, m0: float, sigma2: float) -> tuple[float, float]:
    """``(C_m, C_V)`` with ``m ~ C_m e^{rt}`` and ``V ~ C_V e^{rt}`` in case III."""
    s = math.sqrt(sigma2)
    k = 2.0 * a0 * m0 * s + math.sqrt(2.0)
    return k / (4.0 * a0 * s), k / (2.0 * math.sqrt(2.0) * a0)


def _rhs(a, m, sigma2):
    return -2.0 * sigma2 * a * a * m, 1.0 / a


def gauss_v_ode(a0: float, m0: float, sigma2: float, T: float, steps: int, cap: float = A_CAP) -> Trajectory:
    """Classical RK4 on ``(a, m)``; a cross-check for :func:`gauss_v_eval`.

    Raises :class:`StiffnessAbort` (carrying ``t_abort`` and the partial
    trajectory) once ``a`` exceeds ``cap`` or stops being a finite positive
    number before ``T``.
    """
    _check_a0(a0)
    dt = T / steps
    ts = np.linspace(0.0, T, steps + 1)
    a_out = np.empty(steps + 1)
    m_out = np.empty(steps + 1)
    a, m = float(a0), float(m0)
    a_out[0], m_out[0] = a, m
    for k in range(steps):
        ka1, km1 = _rhs(a, m, sigma2)
        ka2, km2 = _rhs(a + 0.5 * dt * ka1, m + 0.5 * dt * km1, sigma2)
        ka3, km3 = _rhs(a + 0.5 * dt * ka2, m + 0.5 * dt * km2, sigma2)
        ka4, km4 = _rhs(a + dt * ka3, m + dt * km3, sigma2)
        a = a + dt * (ka1 + 2 * ka2 + 2 * ka3 + ka4) / 6.0
        m = m + dt * (km1 + 2 * km2 + 2 * km3 + km4) / 6.0
        if not (math.isfinite(a) and 0.0 < a <= cap):
            partial = Trajectory(ts[: k + 1], a_out[: k + 1], m_out[: k + 1])
            raise StiffnessAbort(f"a left (0, {cap:g}] at t = {ts[k + 1]:.6g}", t_abort=float(ts[k + 1]),
                                 trajectory=partial)
        a_out[k + 1], m_out[k + 1] = a, m
    return Trajectory(ts, a_out, m_out)
