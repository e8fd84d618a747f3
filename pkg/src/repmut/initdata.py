"""Initial densities and their cumulant generating functions.

Three families are supported: Gaussian ``(a0, m0)`` with ``a0`` the inverse
variance, uniform on ``[lo, hi]``, and tabulated samples ``(x_i, f_i)``.
Analytic families use closed forms everywhere; tabulated data go through
composite Simpson quadrature on the stored grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import ndtr

from .errors import (
    ConfigInvalid,
    HeavyTail,
    MassMismatch,
    NegativeDensity,
    NonPositiveMass,
    NonPositiveMeanRequired,
    UnsortedGrid,
    ZOutOfRange,
)

FAMILIES = ("gaussian", "uniform", "tabulated")

ENDPOINT_TOL = 1e-12
RENORM_TOL = 1e-3
TAIL_GUARD = 1e-10
# |w| below which ln(sinh w / w) and its derivatives use the even series
SERIES_SWITCH = 0.1


def simpson_weights(x: np.ndarray) -> np.ndarray:
    """Composite Simpson weights for an arbitrary increasing grid.

    Pairs of intervals use the three-point quadratic rule; an odd interval
    count closes with the quadratic through the last three nodes.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    w = np.zeros(n)
    if n == 2:
        h = x[1] - x[0]
        w[:] = 0.5 * h
        return w
    h = np.diff(x)
    npairs = (n - 1) // 2
    h0 = h[0 : 2 * npairs : 2]
    h1 = h[1 : 2 * npairs : 2]
    hs = h0 + h1
    i = 2 * np.arange(npairs)
    np.add.at(w, i, hs / 6.0 * (2.0 - h1 / h0))
    np.add.at(w, i + 1, hs**3 / (6.0 * h0 * h1))
    np.add.at(w, i + 2, hs / 6.0 * (2.0 - h0 / h1))
    if (n - 1) % 2 == 1:
        ha, hb = h[-2], h[-1]
        w[-1] += (2.0 * hb**2 + 3.0 * ha * hb) / (6.0 * (ha + hb))
        w[-2] += (hb**2 + 3.0 * ha * hb) / (6.0 * ha)
        w[-3] -= hb**3 / (6.0 * ha * (ha + hb))
    return w


@dataclass(frozen=True)
class DensitySpec:
    """A validated unit-mass initial density.

    ``params`` holds ``a0, m0`` (gaussian), ``lo, hi`` (uniform) or is empty
    for tabulated data, whose samples live in ``x`` and ``f``.  ``scale`` is
    the factor applied to tabulated values to reach unit mass.
    """

    family: str
    params: dict
    m0: float
    mass: float = 1.0
    scale: float = 1.0
    x: np.ndarray | None = field(default=None, repr=False)
    f: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> tuple[float, float]:
        if self.family == "gaussian":
            return (-math.inf, math.inf)
        if self.family == "uniform":
            return (self.params["lo"], self.params["hi"])
        return (float(self.x[0]), float(self.x[-1]))

    def variance(self) -> float:
        return moment(self, 2) - moment(self, 1) ** 2

    def logpdf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            a0, m0 = self.params["a0"], self.params["m0"]
            return 0.5 * math.log(a0 / (2.0 * math.pi)) - 0.5 * a0 * (y - m0) ** 2
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(y))

    def pdf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            return np.exp(self.logpdf(y))
        if self.family == "uniform":
            lo, hi = self.params["lo"], self.params["hi"]
            return np.where((y >= lo) & (y <= hi), 1.0 / (hi - lo), 0.0)
        return np.interp(y, self.x, self.f, left=0.0, right=0.0)

    def cell_average(self, xs, dx: float) -> np.ndarray:
        """Mean of the density over ``[x - dx/2, x + dx/2]`` for each node.

        Exact for the analytic families; point samples for tabulated data.
        """
        xs = np.asarray(xs, dtype=float)
        if self.family == "gaussian":
            a0, m0 = self.params["a0"], self.params["m0"]
            s = math.sqrt(a0)
            return (ndtr((xs + 0.5 * dx - m0) * s) - ndtr((xs - 0.5 * dx - m0) * s)) / dx
        if self.family == "uniform":
            lo, hi = self.params["lo"], self.params["hi"]
            left = np.clip(xs - 0.5 * dx, lo, hi)
            right = np.clip(xs + 0.5 * dx, lo, hi)
            return (right - left) / ((hi - lo) * dx)
        return self.pdf(xs)


def gaussian(a0: float, m0: float, **kw) -> DensitySpec:
    return make_density({"family": "gaussian", "a0": a0, "m0": m0}, **kw)


def uniform(lo: float, hi: float, **kw) -> DensitySpec:
    return make_density({"family": "uniform", "lo": lo, "hi": hi}, **kw)


def tabulated(x, f, **kw) -> DensitySpec:
    return make_density({"family": "tabulated", "x": x, "f": f}, **kw)


def _require(raw, key):
    if key not in raw:
        raise ConfigInvalid(f"missing required field '{key}'", path=key)
    try:
        return float(raw[key])
    except (TypeError, ValueError):
        raise ConfigInvalid(f"field '{key}' must be a number", path=key) from None


def make_density(raw: Mapping, *, require_positive_mean: bool = False) -> DensitySpec:
    """Validate raw parameters and build a :class:`DensitySpec`.

    ``raw`` is a mapping with a ``family`` key plus the family parameters
    (``a0``/``m0``, ``lo``/``hi`` or ``x``/``f``; ``path`` loads a CSV).
    Tabulated data within ``1e-3`` of unit mass are rescaled, anything
    further off is rejected.
    """
    family = raw.get("family")
    if family not in FAMILIES:
        raise ConfigInvalid(f"unknown family {family!r}; expected one of {FAMILIES}", path="family")

    if family == "gaussian":
        a0 = _require(raw, "a0")
        m0 = _require(raw, "m0")
        if not a0 > 0 or not math.isfinite(a0):
            raise NonPositiveMass(f"gaussian needs a finite a0 > 0, got {a0}")
        spec = DensitySpec("gaussian", {"a0": a0, "m0": m0}, m0=m0)
    elif family == "uniform":
        lo = _require(raw, "lo")
        hi = _require(raw, "hi")
        if not hi > lo:
            raise NonPositiveMass(f"uniform needs hi > lo, got [{lo}, {hi}]")
        spec = DensitySpec("uniform", {"lo": lo, "hi": hi}, m0=0.5 * (lo + hi))
    else:
        if "path" in raw and "x" not in raw:
            x, f = read_density_csv(raw["path"])
        else:
            x = np.asarray(raw.get("x"), dtype=float)
            f = np.asarray(raw.get("f"), dtype=float)
        spec = _tabulated_spec(x, f)

    if require_positive_mean and not spec.m0 > 0:
        raise NonPositiveMeanRequired(f"the replicator-mutator solver needs m0 > 0, got m0 = {spec.m0}")
    return spec


def _tabulated_spec(x: np.ndarray, f: np.ndarray) -> DensitySpec:
    if x.ndim != 1 or x.shape != f.shape or x.size < 3:
        raise ConfigInvalid("tabulated data need matching 1-d x and f with at least 3 samples", path="x")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(f))):
        raise ConfigInvalid("tabulated data must be finite", path="f")
    if np.any(np.diff(x) <= 0):
        raise UnsortedGrid("tabulated grid must be strictly increasing")
    if np.any(f < 0):
        raise NegativeDensity(f"density is negative at x = {x[np.argmax(f < 0)]}")
    w = simpson_weights(x)
    mass = float(w @ f)
    if not mass > 0:
        raise NonPositiveMass(f"tabulated mass is {mass}")
    if abs(mass - 1.0) >= RENORM_TOL:
        raise MassMismatch(f"tabulated mass {mass} is not within {RENORM_TOL} of 1")
    scale = 1.0 / mass
    f = f * scale
    if f[0] >= ENDPOINT_TOL or f[-1] >= ENDPOINT_TOL:
        raise HeavyTail(
            f"endpoint values {f[0]:.3g}, {f[-1]:.3g} must be below {ENDPOINT_TOL}; extend the grid"
        )
    x = x.copy()
    x.flags.writeable = False
    f.flags.writeable = False
    w.flags.writeable = False
    m0 = float(w @ (x * f))
    return DensitySpec("tabulated", {}, m0=m0, mass=1.0, scale=scale, x=x, f=f, weights=w)


def read_density_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``x,f`` CSV; a non-numeric first row is a header."""
    xs, fs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            try:
                xv, fv = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if row_no == 0:
                    continue
                raise ConfigInvalid(f"{path}: bad row {row_no + 1}: {row}", path="path") from None
            xs.append(xv)
            fs.append(fv)
    return np.array(xs), np.array(fs)


def moment(spec: DensitySpec, k: int) -> float:
    """Raw moment ``int x**k u0(x) dx`` for ``k`` in 0, 1, 2."""
    if k not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {k}")
    if spec.family == "gaussian":
        a0, m0 = spec.params["a0"], spec.params["m0"]
        return (1.0, m0, 1.0 / a0 + m0 * m0)[k]
    if spec.family == "uniform":
        lo, hi = spec.params["lo"], spec.params["hi"]
        return (1.0, 0.5 * (lo + hi), (hi**3 - lo**3) / (3.0 * (hi - lo)))[k]
    return float(spec.weights @ (spec.x**k * spec.f))


# ---------------------------------------------------------------------------
# cumulant generating function


def _logsinhc_derivs(w: np.ndarray, order: int) -> np.ndarray:
    """``d^order/dw^order ln(sinh(w)/w)``, even in w up to the sign of odd orders."""
    aw = np.abs(w)
    small = aw < SERIES_SWITCH
    out = np.empty_like(aw)
    ws = aw[small]
    w2 = ws * ws
    if order == 0:
        out[small] = w2 * (1 / 6 + w2 * (-1 / 180 + w2 * (1 / 2835 + w2 * (-1 / 37800 + w2 / 467775))))
    elif order == 1:
        out[small] = ws * (1 / 3 + w2 * (-4 / 180 + w2 * (6 / 2835 + w2 * (-8 / 37800 + w2 * 10 / 467775))))
    elif order == 2:
        out[small] = 1 / 3 + w2 * (-12 / 180 + w2 * (30 / 2835 + w2 * (-56 / 37800 + w2 * 90 / 467775)))
    else:
        out[small] = ws * (-24 / 180 + w2 * (120 / 2835 + w2 * (-336 / 37800 + w2 * 720 / 467775)))
    wl = aw[~small]
    if wl.size:
        e = np.exp(-2.0 * wl)
        if order == 0:
            out[~small] = wl + np.log1p(-e) - math.log(2.0) - np.log(wl)
        elif order == 1:
            out[~small] = (1.0 + e) / (1.0 - e) - 1.0 / wl
        elif order == 2:
            out[~small] = 1.0 / wl**2 - 4.0 * e / (1.0 - e) ** 2
        else:
            out[~small] = 8.0 * e * (1.0 + e) / (1.0 - e) ** 3 - 2.0 / wl**3
    if order % 2 == 1:
        out = np.where(w < 0, -out, out)
    return out


@dataclass(frozen=True)
class CgfHandle:
    """Certified evaluation range of ``C0`` for one density.

    Analytic families are valid on the whole real line.  Tabulated data are
    certified on ``[z_min, z_max]`` where the exponentially tilted endpoint
    contribution stays below ``1e-10`` of the quadrature sum.
    """

    spec: DensitySpec
    z_min: float
    z_max: float

    def __call__(self, z, order: int = 0, *, check: bool = True):
        return cgf0(self, z, order, check=check)


def _tilt_share(spec: DensitySpec, z: float, end: int) -> float:
    s = z * spec.x
    with np.errstate(divide="ignore"):
        s = s + np.log(spec.f)
    smax = s.max()
    total = float(spec.weights @ np.exp(s - smax))
    return abs(spec.weights[end]) * math.exp(s[end] - smax) / total


def _guard_bound(spec: DensitySpec, sign: int) -> float:
    end = -1 if sign > 0 else 0
    if spec.f[end] == 0.0:
        return sign * math.inf
    if _tilt_share(spec, 0.0, end) >= TAIL_GUARD:
        return 0.0
    lo, hi = 0.0, 1.0
    while _tilt_share(spec, sign * hi, end) < TAIL_GUARD:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            return sign * math.inf
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _tilt_share(spec, sign * mid, end) < TAIL_GUARD:
            lo = mid
        else:
            hi = mid
    return sign * lo


def cgf_handle(spec: DensitySpec) -> CgfHandle:
    if spec.family != "tabulated":
        return CgfHandle(spec, -math.inf, math.inf)
    return CgfHandle(spec, _guard_bound(spec, -1), _guard_bound(spec, +1))


def _tabulated_cgf(spec: DensitySpec, z: np.ndarray, order: int) -> np.ndarray:
    x, w = spec.x, spec.weights
    with np.errstate(divide="ignore"):
        logf = np.log(spec.f)
    s = z[:, None] * x[None, :] + logf[None, :]
    smax = s.max(axis=1, keepdims=True)
    p = np.exp(s - smax) * w[None, :]
    s0 = p.sum(axis=1)
    if order == 0:
        return smax[:, 0] + np.log(s0)
    mu = (p @ x) / s0
    if order == 1:
        return mu
    d = x[None, :] - mu[:, None]
    if order == 2:
        return np.einsum("ij,ij->i", p, d * d) / s0
    return np.einsum("ij,ij->i", p, d * d * d) / s0


def cgf0(handle: CgfHandle, z, order: int = 0, *, check: bool = True):
    """``C0^(order)(z)`` for order 0..3; scalar in, scalar out.

    Raises :class:`ZOutOfRange` outside the certified range unless
    ``check`` is false.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"order must be 0..3, got {order}")
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if check and (np.any(z > handle.z_max) or np.any(z < handle.z_min)):
        bad = z[(z > handle.z_max) | (z < handle.z_min)][0]
        raise ZOutOfRange(f"z = {bad} outside certified range [{handle.z_min}, {handle.z_max}]")
    spec = handle.spec
    if spec.family == "gaussian":
        a0, m0 = spec.params["a0"], spec.params["m0"]
        out = (m0 * z + z * z / (2 * a0), m0 + z / a0, np.full_like(z, 1 / a0), np.zeros_like(z))[order]
    elif spec.family == "uniform":
        lo, hi = spec.params["lo"], spec.params["hi"]
        half = 0.5 * (hi - lo)
        c = 0.5 * (lo + hi)
        g = _logsinhc_derivs(half * z, order) * half**order
        if order == 0:
            out = c * z + g
        elif order == 1:
            out = c + g
        else:
            out = g
    else:
        out = _tabulated_cgf(spec, z, order)
    return float(out[0]) if scalar else out
