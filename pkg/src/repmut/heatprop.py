"""Heat flow ``w_t = sigma2 w_yy`` started from the initial density.

Values are returned as ``(log_w, w)`` pairs.  The reconstruction multiplies
``w`` by ``exp(x A(t))``, so far-tail digits of ``w`` matter and the log is
computed directly, never as ``log(w)`` after underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfcx

from . import kernels
from .errors import NegativeTime
from .initdata import DensitySpec

SMALL_T = 1e-6


def log_erfc(x: np.ndarray) -> np.ndarray:
    """``log(erfc(x))`` for ``x >= 0`` without underflow."""
    return np.log(erfcx(x)) - x * x


def log_erf_diff(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``log(erf(p) - erf(q))`` for ``p > q``, stable in both far tails."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p, q = np.broadcast_arrays(p, q)
    out = np.empty(p.shape)
    right = q >= 0.0
    left = p <= 0.0
    mid = ~(right | left)
    if right.any():
        # erfc(q) - erfc(p), erfc(q) the larger
        a, b = log_erfc(q[right]), log_erfc(p[right])
        out[right] = a + np.log1p(-np.exp(b - a))
    if left.any():
        a, b = log_erfc(-p[left]), log_erfc(-q[left])
        out[left] = a + np.log1p(-np.exp(b - a))
    if mid.any():
        out[mid] = np.log(erf(p[mid]) - erf(q[mid]))
    return out


@dataclass(frozen=True)
class HeatEval:
    spec: DensitySpec
    sigma2: float

    @property
    def mode(self) -> str:
        return "convolution" if self.spec.family == "tabulated" else "closed_form"

    def __call__(self, t: float, y):
        return heat_eval(self, t, y)


def heat_eval(h: HeatEval, t: float, y):
    """Return ``(log_w, w)`` at time ``t`` and points ``y``."""
    if t < 0:
        raise NegativeTime(f"heat flow needs t >= 0, got {t}")
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    spec = h.spec
    if t == 0.0 or (spec.family == "tabulated" and t < SMALL_T):
        log_w = spec.logpdf(y)
    elif spec.family == "gaussian":
        a0, m0 = spec.params["a0"], spec.params["m0"]
        var = 1.0 / a0 + 2.0 * h.sigma2 * t
        log_w = -0.5 * (y - m0) ** 2 / var - 0.5 * math.log(2.0 * math.pi * var)
    elif spec.family == "uniform":
        lo, hi = spec.params["lo"], spec.params["hi"]
        r = math.sqrt(4.0 * h.sigma2 * t)
        # the 1/(hi - lo) height generalizes the unit-width erf formula
        log_w = log_erf_diff((hi - y) / r, (lo - y) / r) + math.log(0.5 / (hi - lo))
    else:
        log_w = kernels.heat_convolve_log(spec.x, spec.f, y, float(t), float(h.sigma2))
    w = np.exp(log_w)
    if scalar:
        return float(log_w[0]), float(w[0])
    return log_w, w
