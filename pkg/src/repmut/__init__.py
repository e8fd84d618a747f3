"""Semi-analytic solvers for density-dependent replicator-mutator dynamics.

The constant-diffusion equation ``u_t = sigma2 u_xx + u (x - xbar) / xbar`` is
solved by a fixed point for the mean followed by a heat-kernel
reconstruction.  The companion equation with diffusion ``sigma2 xbar`` is
reached through a time warp.  Closed Gaussian forms and an explicit
finite-difference oracle serve as cross-checks.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ConfigInvalid, RepmutError, SolverError
from .initdata import DensitySpec, cgf0, cgf_handle, gaussian, make_density, moment, tabulated, uniform
from .meanfit import MeanTable, picard_trace, solve_mean
from .heatprop import HeatEval, heat_eval
from .reconstruct import SolutionField, cgf_full, field_on_grid, u_eval
from .gaussclosed import blowup_time, gauss_u, gauss_v_classify, gauss_v_eval, gauss_v_ode
from .timewarp import TimeWarp, solve_warp, v_eval
from .fdoracle import FdConfig, FdResult, compare_l1, fd_solve

__all__ = [
    "ConfigError", "ConfigInvalid", "RepmutError", "SolverError",
    "DensitySpec", "cgf0", "cgf_handle", "gaussian", "make_density", "moment", "tabulated", "uniform",
    "MeanTable", "picard_trace", "solve_mean",
    "HeatEval", "heat_eval",
    "SolutionField", "cgf_full", "field_on_grid", "u_eval",
    "blowup_time", "gauss_u", "gauss_v_classify", "gauss_v_eval", "gauss_v_ode",
    "TimeWarp", "solve_warp", "v_eval",
    "FdConfig", "FdResult", "compare_l1", "fd_solve",
]
