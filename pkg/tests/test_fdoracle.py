import json
import math

import numpy as np
import pytest

from repmut.errors import CflViolated, DomainTooSmall, TimeMissing
from repmut.fdoracle import FdConfig, compare_l1, fd_solve
from repmut.gaussclosed import gauss_u, gauss_v_eval
from repmut.initdata import gaussian
from repmut.reconstruct import SolutionField


def gauss_field(a0, m0, s2, t, x):
    st = gauss_u(a0, m0, s2, t)
    log_u = 0.5 * np.log(st.a / (2 * np.pi)) - 0.5 * st.a * (x - st.m) ** 2
    return SolutionField(t=np.array([t]), x=x, log_u=log_u[None], u=np.exp(log_u)[None], mass=np.ones(1),
                         mean=np.array([st.m]), var=np.array([st.V]))


def test_gaussian_against_closed_form(gau):
    cfg = FdConfig("u_eq", -6.0, 16.0, 0.02, 1e-4, 1.0, 1.0)
    res = fd_solve(cfg, gau)
    exact = gauss_field(1.0, 4.0, 1.0, 1.0, cfg.grid)
    assert compare_l1(res.field, exact, 1.0) <= 1e-2


def test_cfl_violation_at_setup(gau):
    dx = 0.02
    cfg = FdConfig("u_eq", -6.0, 16.0, dx, 0.6 * dx * dx, 1.0, 1.0)
    with pytest.raises(CflViolated):
        fd_solve(cfg, gau)
    with pytest.raises(CflViolated):
        fd_solve(FdConfig("v_eq", -6.0, 16.0, dx, 0.2 * dx * dx, 1.0, 1.0, xbar_bound=3.0), gau)


def test_uniform_mass_drift(uni):
    res = fd_solve(FdConfig("u_eq", -8.0, 12.0, 0.02, 1e-4, 1.0, 1.0), uni)
    assert abs(res.field.mass[-1] - 1) <= 1e-3
    assert res.mass_drift_max <= 1e-3
    assert 0 < res.cfl_margin_min <= 0.5


def test_compare_l1_basics(gau):
    x = np.linspace(-2.0, 10.0, 1201)
    f = gauss_field(1.0, 4.0, 1.0, 0.5, x)
    assert compare_l1(f, f, 0.5) == 0.0
    dx = x[1] - x[0]
    shifted = SolutionField(t=f.t, x=x + dx, log_u=f.log_u, u=f.u, mass=f.mass, mean=f.mean, var=f.var)
    d = compare_l1(f, shifted, 0.5)
    du = np.trapezoid(np.abs(np.gradient(f.u[0], x)), x)
    assert d > 0 and d == pytest.approx(dx * du, rel=2e-2)
    with pytest.raises(TimeMissing):
        compare_l1(f, f, 0.7)


def test_refinement_ladder(gau):
    errs = []
    for dx in (0.08, 0.04, 0.02):
        cfg = FdConfig("u_eq", -6.0, 16.0, dx, dx * dx / 4, 1.0, 1.0)
        res = fd_solve(cfg, gau)
        errs.append(compare_l1(res.field, gauss_field(1.0, 4.0, 1.0, 1.0, cfg.grid), 1.0))
    # dt shrinks with dx^2, so O(dt + dx^2) shows up as a factor of about four per level
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.0 < r1 < 5.0 and 3.0 < r2 < 5.0


def test_xbar_trace_matches_mean_table(uni, uni_table):
    res = fd_solve(FdConfig("u_eq", -8.0, 12.0, 0.02, 1e-4, 1.0, 1.0), uni)
    ref = uni_table.interp("ubar", res.xbar_t)
    assert np.max(np.abs(res.xbar / ref - 1)) <= 2e-2


def test_v_equation_variance_signature():
    # negative initial mean, case III; milder than the headline parameters so
    # that the anti-diffusive start stays within reach of an explicit scheme
    a0, m0 = 1.0, -0.5
    times = np.linspace(0.0, 1.5, 31)
    spec = gaussian(a0, m0)
    res = fd_solve(FdConfig("v_eq", -15.0, 25.0, 0.2, 0.2**2 / 20, 1.5, 1.0), spec, times)
    V = res.field.var
    ex = gauss_v_eval(a0, m0, 1.0, times)
    k = int(np.argmin(V))
    assert 0 < k < times.size - 1
    assert np.all(np.diff(V[: k + 1]) < 0) and np.all(np.diff(V[k:]) > 0)
    assert abs(times[k] - times[np.argmin(ex.V)]) <= 0.1
    # the sign change of the mean sits at the turning point
    assert ex.m[k - 1] < 0 < ex.m[min(k + 2, times.size - 1)]


def test_v_equation_adaptive_halving(uni):
    res = fd_solve(FdConfig("v_eq", -8.0, 12.0, 0.02, 1e-4, 1.0, 1.0), uni, [0.5, 1.0])
    assert res.dt_final < 1e-4
    assert np.all(np.abs(res.field.mass - 1) <= 1e-4)


def test_domain_too_small(gau):
    with pytest.raises(DomainTooSmall):
        fd_solve(FdConfig("u_eq", 0.0, 8.0, 0.02, 1e-4, 1.0, 1.0), gau)
    with pytest.raises(DomainTooSmall):
        fd_solve(FdConfig("u_eq", -2.0, 10.0, 0.02, 1e-4, 3.0, 1.0), gau)


def test_record_times_hit_exactly(uni):
    res = fd_solve(FdConfig("u_eq", -8.0, 12.0, 0.04, 3e-4, 0.5, 1.0), uni, [0.0, 0.1234, 0.5])
    np.testing.assert_array_equal(res.field.t, [0.0, 0.1234, 0.5])
    assert res.field.mass[0] == pytest.approx(1.0, abs=1e-12)


def test_diagnostics_json(tmp_path, uni):
    res = fd_solve(FdConfig("u_eq", -8.0, 12.0, 0.04, 3e-4, 0.2, 1.0), uni)
    res.write_xbar_trace(tmp_path / "xbar.csv")
    res.write_diagnostics(tmp_path / "d.json", "xbar.csv")
    doc = json.loads((tmp_path / "d.json").read_text())
    assert set(doc) == {"mass_drift_max", "xbar_trace_path", "cfl_margin_min"}
    assert (tmp_path / "xbar.csv").read_text().startswith("t,xbar\n")


def test_config_validation():
    with pytest.raises(ValueError):
        FdConfig("w_eq", -1.0, 1.0, 0.1, 0.001, 1.0, 1.0)
    with pytest.raises(ValueError):
        FdConfig("u_eq", 1.0, -1.0, 0.1, 0.001, 1.0, 1.0)
