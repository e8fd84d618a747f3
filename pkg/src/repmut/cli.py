"""Command-line scenario runner.

Every subcommand builds a scenario dictionary (or reads one from JSON) and
writes CSV/JSON artifacts into the output directory.  Exit status is 0 on
success, 2 for configuration errors and 3 for solver errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from ._accel import USE_NUMBA
from ._csvio import write_rows
from .errors import ConfigError, ConfigInvalid, RepmutError
from .fdoracle import FdConfig, compare_l1, fd_solve
from .gaussclosed import gauss_u, gauss_v_classify, gauss_v_eval, blowup_time
from .heatprop import HeatEval
from .initdata import make_density
from .meanfit import mean_consistency, picard_iterates, picard_trace, solve_mean
from .reconstruct import SolutionField, auto_window, field_on_grid
from .timewarp import solve_warp

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["name", "equation", "initial", "sigma2", "horizon", "solver"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "equation": {"enum": ["u_eq", "v_eq"]},
        "initial": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["gaussian", "uniform", "tabulated"]},
                "a0": {"type": "number"},
                "m0": {"type": "number"},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
                "path": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "sigma2": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "time_samples": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "x_window": {
            "oneOf": [
                {"const": "auto"},
                {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            ]
        },
        "x_step": {"type": "number", "exclusiveMinimum": 0},
        "solver": {"enum": ["semi_analytic", "closed_gaussian", "fd_oracle", "compare"]},
        "branch": {"enum": ["plus", "minus"]},
        "picard_iterates": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "picard_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "grid_N": {"type": "integer", "minimum": 2},
                "fd_dx": {"type": "number", "exclusiveMinimum": 0},
                "fd_dt": {"type": "number", "exclusiveMinimum": 0},
                "warp_steps": {"type": "integer", "minimum": 1},
            },
        },
        "output_dir": {"type": "string"},
    },
}

DEFAULT_TOLERANCES = {"picard_tol": 1e-10, "max_iter": 64, "grid_N": 3000, "fd_dx": 0.02, "fd_dt": 1e-4,
                      "warp_steps": 2000}


# ---------------------------------------------------------------------------
# validation


def validate_scenario(cfg: dict) -> dict:
    """Check ``cfg`` against the schema and cross-field rules; fill defaults."""
    if not isinstance(cfg, dict):
        raise ConfigInvalid("scenario must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (len(e.path), list(map(str, e.path))))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance][0]
            path = f"{path}.{missing}" if path else missing
            raise ConfigInvalid(f"missing required field '{missing}'", path=path)
        raise ConfigInvalid(err.message, path=path or "<root>")

    out = dict(cfg)
    out["tolerances"] = {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}
    out.setdefault("x_window", "auto")
    out.setdefault("x_step", 0.05)
    out.setdefault("branch", "plus")
    out.setdefault("picard_iterates", 0)
    if "time_samples" not in out:
        out["time_samples"] = list(np.linspace(0.0, cfg["horizon"], 7))
    times = out["time_samples"]
    if max(times) > cfg["horizon"] * (1 + 1e-12):
        raise ConfigInvalid("time samples must not exceed the horizon", path="time_samples")
    out["time_samples"] = sorted(float(t) for t in times)
    if isinstance(out["x_window"], list) and not out["x_window"][1] > out["x_window"][0]:
        raise ConfigInvalid("x_window needs hi > lo", path="x_window")

    family = cfg["initial"]["family"]
    if cfg["solver"] == "closed_gaussian" and family != "gaussian":
        raise ConfigInvalid("closed_gaussian needs a gaussian initial density", path="initial.family")
    spec = make_density(cfg["initial"])
    if cfg["solver"] in ("semi_analytic", "compare") and not spec.m0 > 0:
        raise ConfigInvalid(f"solver '{cfg['solver']}' for {cfg['equation']} needs m0 > 0, got {spec.m0}",
                            path="initial")
    out["_spec"] = spec
    return out


# ---------------------------------------------------------------------------
# runners


def _x_grid(lo, hi, step):
    n = max(int(math.ceil((hi - lo) / step)), 1)
    return np.linspace(lo, hi, n + 1)


def _manifest(cfg, out_dir: Path, files, residuals):
    public = {k: v for k, v in cfg.items() if not k.startswith("_")}
    public.pop("output_dir", None)
    versions = {"repmut": __version__, "numpy": np.__version__}
    try:
        import scipy

        versions["scipy"] = scipy.__version__
    except ImportError:  # pragma: no cover
        pass
    doc = {"name": cfg["name"], "scenario": public, "versions": versions, "numba": USE_NUMBA,
           "residuals": residuals, "outputs": sorted(files)}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _semi_analytic_table(cfg, horizon):
    tol = cfg["tolerances"]
    T = float(horizon)
    N = tol["grid_N"]
    return solve_mean(cfg["_spec"], cfg["sigma2"], T, N, tol=tol["picard_tol"], max_iter=tol["max_iter"])


def run_mean(cfg: dict, out_dir: Path) -> list[str]:
    table = _semi_analytic_table(cfg, cfg["horizon"])
    table.to_csv(out_dir / "mean.csv")
    files = ["mean.csv"]
    n_iter = max(cfg["picard_iterates"], table.iter_count)
    trace = picard_trace(cfg["_spec"], cfg["sigma2"], table.T, table.t.size - 1, n_iter)
    write_rows(out_dir / "picard_trace.csv", ["n", "sup_diff"], enumerate(trace))
    files.append("picard_trace.csv")
    if cfg["picard_iterates"]:
        files.append(_write_iterates(cfg, table, out_dir))
    return files, {"picard_iterations": table.iter_count, "picard_residual": table.residual_norm,
                   "mean_consistency": mean_consistency(table)}


def _write_iterates(cfg, table, out_dir):
    n = cfg["picard_iterates"]
    q = picard_iterates(cfg["_spec"], cfg["sigma2"], table.T, table.t.size - 1, n - 1)
    write_rows(out_dir / "picard.csv", ["t"] + [f"q{k}" for k in range(n)], zip(table.t, *q))
    return "picard.csv"


def _semi_field(cfg):
    """Semi-analytic field for either equation; returns (field, extras)."""
    spec = cfg["_spec"]
    heat = HeatEval(spec, cfg["sigma2"])
    times = np.array(cfg["time_samples"])
    table = _semi_analytic_table(cfg, cfg["horizon"])
    extras = {"table": table}
    if cfg["equation"] == "u_eq":
        if cfg["x_window"] == "auto":
            lo, hi = auto_window(table, times)
        else:
            lo, hi = cfg["x_window"]
        xs = _x_grid(lo, hi, cfg["x_step"])
        return field_on_grid(table, heat, times, xs), extras

    warp = solve_warp(table, cfg["horizon"], cfg["tolerances"]["warp_steps"])
    extras["warp"] = warp
    extras["table"] = warp.table
    phis = warp(times)
    if cfg["x_window"] == "auto":
        lo, hi = auto_window(warp.table, np.atleast_1d(phis))
    else:
        lo, hi = cfg["x_window"]
    xs = _x_grid(lo, hi, cfg["x_step"])
    fld = field_on_grid(warp.table, heat, np.atleast_1d(phis), xs)
    # relabel rows with v-times
    return SolutionField(t=times, x=fld.x, log_u=fld.log_u, u=fld.u, mass=fld.mass, mean=fld.mean,
                         var=fld.var), extras


def run_semi_analytic(cfg, out_dir):
    fld, extras = _semi_field(cfg)
    table = extras["table"]
    table.to_csv(out_dir / "mean.csv")
    fld.to_csv(out_dir / "field.csv")
    fld.moments_to_csv(out_dir / "moments.csv")
    files = ["mean.csv", "field.csv", "moments.csv"]
    if "warp" in extras:
        extras["warp"].to_csv(out_dir / "warp.csv")
        files.append("warp.csv")
    if cfg["picard_iterates"]:
        files.append(_write_iterates(cfg, table, out_dir))
    residuals = {"picard_iterations": table.iter_count, "picard_residual": table.residual_norm,
                 "mean_consistency": mean_consistency(table),
                 "mass_drift_max": float(np.abs(fld.mass - 1.0).max())}
    return files, residuals


def _closed_traj(cfg, times):
    p = cfg["_spec"].params
    if cfg["equation"] == "u_eq":
        return gauss_u(p["a0"], p["m0"], cfg["sigma2"], times, branch=cfg["branch"])
    return gauss_v_eval(p["a0"], p["m0"], cfg["sigma2"], times)


def run_closed_gaussian(cfg, out_dir):
    times = np.array(cfg["time_samples"])
    traj = _closed_traj(cfg, times)
    if cfg["x_window"] == "auto":
        sd = np.sqrt(traj.V)
        lo, hi = float(np.min(traj.m - 12 * sd)), float(np.max(traj.m + 12 * sd))
    else:
        lo, hi = cfg["x_window"]
    xs = _x_grid(lo, hi, cfg["x_step"])
    a, m = traj.a[:, None], traj.m[:, None]
    log_u = 0.5 * np.log(a / (2 * np.pi)) - 0.5 * a * (xs[None, :] - m) ** 2
    fld = SolutionField(t=times, x=xs, log_u=log_u, u=np.exp(log_u), mass=np.ones(times.size),
                        mean=traj.m, var=traj.V)
    traj.to_csv(out_dir / "trajectory.csv")
    fld.to_csv(out_dir / "field.csv")
    fld.moments_to_csv(out_dir / "moments.csv")
    residuals = {}
    if cfg["equation"] == "v_eq":
        p = cfg["_spec"].params
        residuals["case"] = gauss_v_classify(p["a0"], p["m0"], cfg["sigma2"])
        residuals["blowup_time"] = blowup_time(p["a0"], p["m0"], cfg["sigma2"])
    return ["trajectory.csv", "field.csv", "moments.csv"], residuals


def _fd_window(cfg):
    if cfg["x_window"] != "auto":
        return cfg["x_window"]
    spec = cfg["_spec"]
    times = np.array(cfg["time_samples"] + [cfg["horizon"]])
    if spec.family == "gaussian":
        traj = _closed_traj(cfg, times)
        sd = np.sqrt(traj.V)
        return float(np.min(traj.m - 12 * sd)), float(np.max(traj.m + 12 * sd))
    table = _semi_analytic_table(cfg, cfg["horizon"])
    if cfg["equation"] == "v_eq":
        warp = solve_warp(table, cfg["horizon"], cfg["tolerances"]["warp_steps"])
        return auto_window(warp.table, warp(times))
    return auto_window(table, times)


def _fd_run(cfg, window):
    tol = cfg["tolerances"]
    dx = tol["fd_dx"]
    lo, hi = window
    lo = dx * math.floor(lo / dx)
    hi = dx * math.ceil(hi / dx)
    fdc = FdConfig(cfg["equation"], lo, hi, dx, tol["fd_dt"], cfg["horizon"], cfg["sigma2"])
    return fd_solve(fdc, cfg["_spec"], cfg["time_samples"])


def run_fd_oracle(cfg, out_dir):
    res = _fd_run(cfg, _fd_window(cfg))
    res.field.to_csv(out_dir / "field.csv")
    res.field.moments_to_csv(out_dir / "moments.csv")
    res.write_xbar_trace(out_dir / "xbar.csv")
    res.write_diagnostics(out_dir / "diagnostics.json", "xbar.csv")
    return ["field.csv", "moments.csv", "xbar.csv", "diagnostics.json"], res.diagnostics("xbar.csv")


def run_compare(cfg, out_dir):
    files, residuals = run_semi_analytic(cfg, out_dir)
    semi, _ = _semi_field(cfg)
    res = _fd_run(cfg, (float(semi.x[0]), float(semi.x[-1])))
    res.field.to_csv(out_dir / "fd_field.csv")
    res.write_xbar_trace(out_dir / "xbar.csv")
    res.write_diagnostics(out_dir / "diagnostics.json", "xbar.csv")
    l1 = [compare_l1(res.field, semi, float(t)) for t in cfg["time_samples"]]
    write_rows(out_dir / "l1.csv", ["t", "l1"], zip(cfg["time_samples"], l1))
    residuals = {**residuals, "l1_max": max(l1), "fd": res.diagnostics("xbar.csv")}
    return files + ["fd_field.csv", "xbar.csv", "diagnostics.json", "l1.csv"], residuals


RUNNERS = {"semi_analytic": run_semi_analytic, "closed_gaussian": run_closed_gaussian,
           "fd_oracle": run_fd_oracle, "compare": run_compare}


def run_scenario(cfg: dict, out_dir=None, *, mean_only: bool = False) -> Path:
    """Validate and run one scenario; return the output directory."""
    cfg = validate_scenario(cfg)
    out_dir = Path(out_dir or cfg.get("output_dir") or f"out/{cfg['name']}")
    out_dir.mkdir(parents=True, exist_ok=True)
    if mean_only:
        files, residuals = run_mean(cfg, out_dir)
    else:
        files, residuals = RUNNERS[cfg["solver"]](cfg, out_dir)
    _manifest(cfg, out_dir, files + ["manifest.json"], residuals)
    return out_dir


# ---------------------------------------------------------------------------
# scenario files


def bundled_scenarios() -> list[str]:
    root = resources.files("repmut") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(ref: str) -> dict:
    """Load a scenario from a JSON path or a bundled scenario name."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    elif ref in bundled_scenarios():
        text = (resources.files("repmut") / "scenarios" / f"{ref}.json").read_text(encoding="utf-8")
    else:
        raise ConfigInvalid(f"no scenario file or bundled scenario named {ref!r}", path="scenario")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON: {exc}", path="scenario") from None


# ---------------------------------------------------------------------------
# argument parsing


def _parse_density(text: str) -> dict:
    family, _, rest = text.partition(":")
    if family == "csv":
        return {"family": "tabulated", "path": rest}
    raw = {"family": family}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        try:
            raw[key.strip()] = float(val)
        except ValueError:
            raise ConfigInvalid(f"bad density parameter {item!r}", path="initial") from None
    return raw


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigInvalid(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float, help="Picard stopping tolerance")
    p.add_argument("--grid", type=int, help="number of time intervals of the mean table")
    p.add_argument("--seedless", action="store_true",
                   help="reserved; the solvers use no randomness (takes no value)")


def _problem(p: argparse.ArgumentParser, equation: bool = True) -> None:
    p.add_argument("--density", default="uniform:lo=0.5,hi=1.5",
                   help="gaussian:a0=..,m0=.. | uniform:lo=..,hi=.. | csv:PATH")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=3.0)
    p.add_argument("--times", help="comma-separated output times")
    p.add_argument("--x-window", help="'auto' or 'lo,hi' (write --x-window=-8,12 for a negative lo)")
    p.add_argument("--x-step", type=float)
    if equation:
        p.add_argument("--equation", choices=["u_eq", "v_eq"], default="u_eq")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repmut", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"repmut {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_, eq in [("mean", "solve for the mean fitness only", False),
                            ("solve", "semi-analytic solution of the u-equation", False),
                            ("vsolve", "semi-analytic solution of the v-equation via the time warp", False),
                            ("gaussian", "closed-form Gaussian solution", True),
                            ("oracle", "explicit finite-difference oracle", True),
                            ("compare", "semi-analytic vs finite differences", False)]:
        p = sub.add_parser(name, help=help_)
        _problem(p, equation=eq)
        _common(p)
        if name == "gaussian":
            p.add_argument("--branch", choices=["plus", "minus"], default="plus")
        if name == "mean":
            p.add_argument("--picard-iterates", type=int, default=0)
        if name in ("oracle", "compare"):
            p.add_argument("--dx", type=float)
            p.add_argument("--dt", type=float)

    p = sub.add_parser("scenario", help="run a scenario JSON file or bundled scenario")
    p.add_argument("path", nargs="?", help="JSON path or bundled name")
    p.add_argument("--list", action="store_true", help="list bundled scenarios")
    _common(p)
    return parser


_SOLVER_FOR = {"mean": "semi_analytic", "solve": "semi_analytic", "vsolve": "semi_analytic",
               "gaussian": "closed_gaussian", "oracle": "fd_oracle", "compare": "compare"}


def _scenario_from_args(args) -> dict:
    cfg = {
        "name": args.command,
        "equation": "v_eq" if args.command == "vsolve" else getattr(args, "equation", "u_eq"),
        "initial": _parse_density(args.density),
        "sigma2": args.sigma2,
        "horizon": args.horizon,
        "solver": _SOLVER_FOR[args.command],
    }
    if args.times:
        cfg["time_samples"] = _floats(args.times)
    if args.x_window and args.x_window != "auto":
        cfg["x_window"] = _floats(args.x_window)
    if args.x_step:
        cfg["x_step"] = args.x_step
    if getattr(args, "branch", None):
        cfg["branch"] = args.branch
    if getattr(args, "picard_iterates", 0):
        cfg["picard_iterates"] = args.picard_iterates
    tol = {}
    if getattr(args, "dx", None):
        tol["fd_dx"] = args.dx
    if getattr(args, "dt", None):
        tol["fd_dt"] = args.dt
    if tol:
        cfg["tolerances"] = tol
    return cfg


def _apply_overrides(cfg: dict, args) -> dict:
    if not isinstance(cfg, dict):
        return cfg
    if args.tol is not None or args.grid is not None:
        tol = dict(cfg.get("tolerances", {}))
        if args.tol is not None:
            tol["picard_tol"] = args.tol
        if args.grid is not None:
            tol["grid_N"] = args.grid
        cfg = {**cfg, "tolerances": tol}
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "scenario":
            if args.list:
                print("\n".join(bundled_scenarios()))
                return EXIT_OK
            if not args.path:
                raise ConfigInvalid("scenario path or name required", path="scenario")
            cfg = load_scenario(args.path)
        else:
            cfg = _scenario_from_args(args)
        cfg = _apply_overrides(cfg, args)
        out = run_scenario(cfg, args.out, mean_only=args.command == "mean")
    except ConfigError as exc:
        print(f"config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RepmutError as exc:
        print(f"solver error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
