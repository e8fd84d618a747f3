import numpy as np
import pytest

from repmut.heatprop import HeatEval
from repmut.initdata import gaussian, tabulated, uniform
from repmut.meanfit import solve_mean

TAB_X = np.linspace(-4.0, 12.0, 4001)


@pytest.fixture(scope="session")
def uni():
    return uniform(0.5, 1.5)


@pytest.fixture(scope="session")
def gau():
    return gaussian(1.0, 4.0)


@pytest.fixture(scope="session")
def tab_gau():
    f = np.exp(-0.5 * (TAB_X - 4.0) ** 2) / np.sqrt(2.0 * np.pi)
    return tabulated(TAB_X, f)


@pytest.fixture(scope="session")
def uni_table(uni):
    return solve_mean(uni, 1.0, 3.0, 3000)


@pytest.fixture(scope="session")
def gau_table(gau):
    return solve_mean(gau, 1.0, 3.0, 3000)


@pytest.fixture(scope="session")
def uni_heat(uni):
    return HeatEval(uni, 1.0)


@pytest.fixture(scope="session")
def gau_heat(gau):
    return HeatEval(gau, 1.0)
