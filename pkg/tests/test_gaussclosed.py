import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repmut.errors import NonPositiveA0, PastBlowup, StiffnessAbort
from repmut.gaussclosed import (asymptotic_constants, blowup_time, gauss_u, gauss_v_classify, gauss_v_eval,
                                gauss_v_ode)
from repmut.initdata import gaussian
from repmut.meanfit import solve_mean, variance_of

CASE_I = (5 / 64, -585 / 64, 1.0)
CASE_II = (3 / 16, -8 * math.sqrt(2) / 3, 1.0)
CASE_III = (3 / 2, 7 / 2, 1.0)
R2 = math.sqrt(2.0)


def test_gauss_u_examples():
    st1 = gauss_u(1.0, 4.0, 1.0, 1.0)
    assert st1.a == pytest.approx(1 / 3, rel=1e-15)
    assert st1.m == pytest.approx(math.sqrt(20), rel=1e-15)
    t = np.linspace(0, 3, 7)
    plus = gauss_u(1.0, 0.0, 1.0, t, branch="plus")
    minus = gauss_u(1.0, 0.0, 1.0, t, branch="minus")
    np.testing.assert_allclose(plus.m, np.sqrt(2 * t * t + 2 * t), rtol=1e-15)
    np.testing.assert_array_equal(minus.m, -plus.m)
    with pytest.raises(NonPositiveA0):
        gauss_u(0.0, 1.0, 1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-5.0, 5.0).filter(lambda m: abs(m) > 1e-3), st.floats(0.1, 3.0),
       st.floats(0.1, 3.0))
def test_gauss_u_satisfies_odes(a0, m0, s2, t):
    h = 1e-5
    a = gauss_u(a0, m0, s2, t)
    ap, am = gauss_u(a0, m0, s2, t + h), gauss_u(a0, m0, s2, t - h)
    da = (ap.a - am.a) / (2 * h)
    dm = (ap.m - am.m) / (2 * h)
    assert abs(-da / 2 - s2 * a.a**2) <= 1e-6 * max(1.0, s2 * a.a**2)
    assert abs(a.a * a.m * dm - 1) <= 1e-6


def test_variance_duality_with_mean_table():
    tb = solve_mean(gaussian(2.0, 1.5), 0.8, 2.0, 2000)
    t = np.linspace(0, 2, 9)
    st_ = gauss_u(2.0, 1.5, 0.8, t)
    np.testing.assert_allclose(variance_of(tb, None, t), st_.V, rtol=1e-12)


def test_classification_examples():
    assert gauss_v_classify(*CASE_I) == "I"
    assert gauss_v_classify(*CASE_II) == "II"
    assert gauss_v_classify(*CASE_III) == "III"
    assert gauss_v_classify(0.2, -3.4, 1.0) == "III"


def test_case_two_exact_forms():
    a0, m0, s2 = CASE_II
    t = np.linspace(0, 5, 11)
    tr = gauss_v_eval(a0, m0, s2, t)
    np.testing.assert_allclose(tr.m, m0 * np.exp(-R2 * t), rtol=1e-14)
    np.testing.assert_allclose(tr.a, a0 * np.exp(R2 * t), rtol=1e-14)


@pytest.mark.parametrize("case", [CASE_I, CASE_II, CASE_III, (0.2, -3.4, 1.0)])
def test_initial_state(case):
    st0 = gauss_v_eval(*case, 0.0)
    assert st0.a == pytest.approx(case[0], rel=1e-14)
    assert st0.m == pytest.approx(case[1], rel=1e-14)


def test_case_three_asymptotics():
    cm, cv = asymptotic_constants(*CASE_III)
    assert cm == pytest.approx((10.5 + R2) / 6, rel=1e-14)
    st10 = gauss_v_eval(*CASE_III, 10.0)
    assert abs(st10.m / math.exp(R2 * 10) - cm) <= 1e-4
    assert abs(st10.V / math.exp(R2 * 10) - cv) <= 1e-4


@pytest.mark.parametrize("case", [CASE_I, CASE_III, (0.2, -3.4, 1.0), (1.0, 2.0, 0.5)])
def test_m_second_derivative(case):
    s2 = case[2]
    h = 1e-4
    for t in (0.2, 0.8, 1.5):
        m = lambda s: gauss_v_eval(*case, s).m
        mpp = (m(t + h) - 2 * m(t) + m(t - h)) / h**2
        assert abs(mpp - 2 * s2 * m(t)) <= 1e-4 * max(1.0, abs(m(t)))
    # exact check of the first-order system a' = -2 sigma2 a^2 m, m' = 1/a
    t = 0.7
    st_ = gauss_v_eval(*case, t)
    dm = (gauss_v_eval(*case, t + 1e-6).m - gauss_v_eval(*case, t - 1e-6).m) / 2e-6
    assert dm == pytest.approx(1 / st_.a, rel=1e-6)


def test_blowup_examples():
    tstar = blowup_time(*CASE_I)
    assert abs(tstar - 1.878) <= 1e-2
    m_star = gauss_v_eval(*CASE_I, tstar - 1e-12).m
    assert abs(m_star - (-1.277)) <= 1e-2
    assert blowup_time(*CASE_III) is None
    assert blowup_time(*CASE_II) is None
    near = gauss_v_eval(*CASE_I, np.array([tstar - 1e-2, tstar - 1e-3]))
    assert near.a[1] > near.a[0]
    prod = near.a * (tstar - near.t)
    assert np.all(prod < 10.0) and abs(prod[1] / prod[0] - 1) < 0.05
    with pytest.raises(PastBlowup):
        gauss_v_eval(*CASE_I, tstar)


def test_ode_matches_closed_form():
    tr = gauss_v_ode(*CASE_III, 2.0, 10_000)
    ex = gauss_v_eval(*CASE_III, 2.0)
    assert tr.a[0] == CASE_III[0] and tr.m[0] == CASE_III[1]
    assert abs(tr.a[-1] / ex.a - 1) <= 1e-6
    assert abs(tr.m[-1] / ex.m - 1) <= 1e-6


def test_ode_aborts_near_blowup():
    tstar = blowup_time(*CASE_I)
    with pytest.raises(StiffnessAbort) as exc:
        gauss_v_ode(*CASE_I, 3.0, 30_000)
    assert abs(exc.value.t_abort - tstar) <= 1e-2
    assert exc.value.trajectory.t[-1] < exc.value.t_abort


def test_anti_diffusion_signature():
    a0, m0, s2 = 0.2, -3.4, 1.0
    t = np.linspace(0.0, 3.0, 200)
    tr = gauss_v_eval(a0, m0, s2, t)
    dV = np.diff(tr.V)
    neg = tr.m[:-1] < 0
    assert np.any(neg) and np.any(~neg)
    assert np.all(dV[neg & (tr.m[1:] < 0)] < 0)
    assert np.all(dV[~neg] > 0)


def test_trajectory_csv(tmp_path):
    tr = gauss_u(1.0, 4.0, 1.0, np.linspace(0, 3, 4))
    tr.to_csv(tmp_path / "tr.csv")
    rows = (tmp_path / "tr.csv").read_text().splitlines()
    assert rows[0] == "t,a,m,V" and rows[-1].split(",")[3] == "7"
