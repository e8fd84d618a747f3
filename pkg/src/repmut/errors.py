"""Exception hierarchy.

Every solver error carries a short ``code`` so the command-line runner can
report which module failed without parsing messages.
"""


class RepmutError(Exception):
    code = "repmut"


class ConfigError(RepmutError):
    code = "config"


class SolverError(RepmutError):
    code = "solver"


# initdata
class NonPositiveMass(ConfigError):
    code = "initdata.non_positive_mass"


class MassMismatch(ConfigError):
    code = "initdata.mass_mismatch"


class NegativeDensity(ConfigError):
    code = "initdata.negative_density"


class NonPositiveMeanRequired(ConfigError):
    code = "initdata.non_positive_mean"


class UnsortedGrid(ConfigError):
    code = "initdata.unsorted_grid"


class HeavyTail(ConfigError):
    code = "initdata.heavy_tail"


class ZOutOfRange(SolverError):
    code = "initdata.z_out_of_range"


# meanfit
class NoConvergence(SolverError):
    code = "meanfit.no_convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ZRangeExceeded(SolverError):
    code = "meanfit.z_range_exceeded"


class TOutOfRange(SolverError):
    code = "t_out_of_range"


# heatprop
class NegativeTime(SolverError):
    code = "heatprop.negative_time"


# gaussclosed
class NonPositiveA0(ConfigError):
    code = "gaussclosed.non_positive_a0"


class PastBlowup(SolverError):
    code = "gaussclosed.past_blowup"


class StiffnessAbort(SolverError):
    code = "gaussclosed.stiffness_abort"

    def __init__(self, message, t_abort=None, trajectory=None):
        super().__init__(message)
        self.t_abort = t_abort
        self.trajectory = trajectory


# timewarp
class HorizonExceeded(SolverError):
    code = "timewarp.horizon_exceeded"


# fdoracle
class CflViolated(SolverError):
    code = "fdoracle.cfl_violated"


class DomainTooSmall(SolverError):
    code = "fdoracle.domain_too_small"


class TimeMissing(SolverError):
    code = "fdoracle.time_missing"


# cli
class ConfigInvalid(ConfigError):
    code = "cli.config_invalid"

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
