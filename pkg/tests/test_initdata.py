import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repmut.errors import (ConfigInvalid, HeavyTail, MassMismatch, NegativeDensity, NonPositiveMass,
                           NonPositiveMeanRequired, UnsortedGrid, ZOutOfRange)
from repmut.initdata import (cgf0, cgf_handle, gaussian, make_density, moment, read_density_csv,
                             simpson_weights, tabulated, uniform)

from conftest import TAB_X


def gauss_cgf(z, a0=1.0, m0=4.0):
    return [m0 * z + z * z / (2 * a0), m0 + z / a0, 1.0 / a0 + 0 * z, 0 * z]


def test_make_density_examples():
    assert gaussian(1.0, 4.0).m0 == 4.0
    u = uniform(0.5, 1.5)
    assert u.m0 == 1.0
    with pytest.raises(NonPositiveMeanRequired):
        gaussian(1.0, 0.0, require_positive_mean=True)


def test_make_density_rejects_bad_input():
    with pytest.raises(ConfigInvalid) as exc:
        make_density({"family": "gaussian", "a0": 1.0})
    assert exc.value.path == "m0"
    with pytest.raises(ConfigInvalid):
        make_density({"family": "cauchy"})
    with pytest.raises(NonPositiveMass):
        gaussian(-1.0, 1.0)
    with pytest.raises(NonPositiveMass):
        uniform(1.0, 1.0)
    x = np.linspace(-5, 5, 101)
    f = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    with pytest.raises(UnsortedGrid):
        tabulated(x[::-1], f)
    g = f.copy()
    g[50] = -1e-3
    with pytest.raises(NegativeDensity):
        tabulated(x, g)
    with pytest.raises(MassMismatch):
        tabulated(x, 1.01 * f)
    with pytest.raises(HeavyTail):
        xs = np.linspace(-2, 2, 101)
        fs = np.exp(-xs * xs / 2)
        tabulated(xs, fs / (simpson_weights(xs) @ fs))


def test_tabulated_renormalizes_small_mass_drift():
    x = np.linspace(-10, 10, 2001)
    f = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    spec = tabulated(x, 1.0005 * f)
    assert abs(moment(spec, 0) - 1.0) < 1e-12
    assert abs(spec.scale - 1 / 1.0005) < 1e-9


def test_read_density_csv(tmp_path):
    p = tmp_path / "d.csv"
    x = np.linspace(-10, 10, 401)
    f = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    p.write_text("x,f\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(x, f)))
    xs, fs = read_density_csv(p)
    np.testing.assert_array_equal(xs, x)
    spec = make_density({"family": "tabulated", "path": str(p)})
    assert abs(spec.m0) < 1e-12


@pytest.mark.parametrize("n", [5, 6, 11, 40])
def test_simpson_weights_exact_for_quadratics_on_nonuniform_grids(n):
    rng = np.random.default_rng(n)
    x = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, n - 2)]))
    w = simpson_weights(x)
    assert abs(w @ x**2 - 1 / 3) < 1e-13
    assert abs(w.sum() - 1.0) < 1e-13


def test_simpson_weights_exact_for_cubics_on_even_uniform_grid():
    x = np.linspace(0.0, 1.0, 9)
    assert abs(simpson_weights(x) @ x**3 - 0.25) < 1e-15


def test_cgf_examples(gau, uni, tab_gau):
    h = cgf_handle(gau)
    assert cgf0(h, 1.0, 0) == pytest.approx(4.5, abs=1e-15)
    assert cgf0(h, 1.0, 2) == pytest.approx(1.0, abs=1e-15)
    assert cgf0(cgf_handle(uni), 0.0, 2) == pytest.approx(1 / 12, abs=1e-15)


def test_tabulated_cgf_matches_closed_form(tab_gau):
    h = cgf_handle(tab_gau)
    assert h.z_max > 2.0
    z = np.linspace(0.0, 2.0, 41)
    exact = gauss_cgf(z)
    # higher orders lose digits to the truncated tilted tail at x = 12
    for order, tol in [(0, 1e-8), (1, 1e-8), (2, 1e-7), (3, 1e-6)]:
        err = np.max(np.abs(cgf0(h, z, order) - exact[order]))
        assert err <= tol, (order, err)


def test_tabulated_guard_raises_outside_range(tab_gau):
    h = cgf_handle(tab_gau)
    with pytest.raises(ZOutOfRange):
        cgf0(h, h.z_max + 0.1)
    assert np.isfinite(cgf0(h, h.z_max + 0.1, check=False))


def test_moment_examples(uni, gau, tab_gau):
    assert moment(uni, 1) == 1.0
    assert moment(gau, 2) == 17.0
    assert abs(moment(tab_gau, 1) - 4.0) <= 1e-8
    assert abs(moment(tab_gau, 0) - 1.0) <= 1e-10


@pytest.mark.parametrize("name", ["gau", "uni", "tab_gau"])
def test_cgf_normalization_and_convexity(name, request):
    spec = request.getfixturevalue(name)
    h = cgf_handle(spec)
    assert abs(cgf0(h, 0.0, 0)) <= 1e-10
    assert abs(cgf0(h, 0.0, 1) - moment(spec, 1)) <= 1e-10
    zmax = min(h.z_max, 3.0)
    z = np.linspace(1e-4, zmax - 1e-4, 25)
    c2 = cgf0(h, z, 2)
    assert np.all(c2 > 0)
    hh = 1e-4
    fd = (cgf0(h, z + hh, 0, check=False) - 2 * cgf0(h, z, 0) + cgf0(h, z - hh, 0, check=False)) / hh**2
    np.testing.assert_allclose(fd, c2, rtol=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.01, 4.0), st.floats(-50.0, 50.0))
def test_uniform_cgf_is_smooth_across_series_switch(lo, width, z):
    spec = uniform(lo, lo + width)
    h = cgf_handle(spec)
    for order in range(4):
        val = cgf0(h, z, order)
        assert np.isfinite(val)
    # the series and closed branches meet continuously
    w_switch = 0.1
    zs = 2 * w_switch / width
    for order in range(4):
        a = cgf0(h, zs * (1 - 1e-9), order)
        b = cgf0(h, zs * (1 + 1e-9), order)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_uniform_cgf_matches_direct_integral():
    spec = uniform(0.5, 1.5)
    h = cgf_handle(spec)
    for z in [1e-6, 1e-3, 0.05, 0.3, 2.0, 10.0, -4.0]:
        direct = 0.5 * z + math.log(math.expm1(z) / z)
        assert cgf0(h, z) == pytest.approx(direct, rel=1e-9, abs=1e-14)


def test_cell_average_has_unit_mass(gau, uni):
    x = np.linspace(-10, 20, 3001)
    dx = x[1] - x[0]
    assert abs(gau.cell_average(x, dx).sum() * dx - 1) < 1e-12
    assert abs(uni.cell_average(x, dx).sum() * dx - 1) < 1e-12
