"""Config-driven experiment runner.

Usage:  rough-llg <experiment> --config cfg.json [--seed S] [--out DIR]

Experiments: driver-check, simulate, wongzakai, remainder, smallnoise,
skeleton.  Configs are JSON; unknown keys are rejected before any compute.
Each run writes manifest.json (config + seed + versions + the list of every
output file), the experiment's data CSVs, and summary.json with one pass/fail
entry per acceptance check; the exit status is nonzero iff a check fails.
Reruns with identical config and seed produce byte-identical CSV bodies.

ROUGH_LLG_THREADS caps the compiled kernels' OpenMP thread count (it is
exported as OMP_NUM_THREADS before the numerics load); result ordering is
canonical regardless.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path


class ConfigError(ValueError):
    pass


_COMMON_DEFAULTS = {"seed": 0, "out": "."}

_SCHEMAS: dict[str, dict] = {
    "driver-check": {
        "n_space": 64,
        "M": 10,
        "q": 3,
        "seeds": list(range(10)),
        "g_profile": {"amplitude": 1.0, "coefficients": [[1, 0.5]]},
        "tolerance": 1e-12,
    },
    "simulate": {
        "n_space": 128,
        "T": 0.1,
        "steps": 1000,
        "u0": "equator",
        "g_profile": 1.0,
        "noise": False,
        "seed": 0,
        "scheme": "rough_euler_imex",
        "project": True,
        "drift_enabled": True,
        "substeps_per_interval": 1,
        "stationarity_tol": 1e-3,
    },
    "wongzakai": {
        "n_space": 64,
        "M": 12,
        "levels": {"min": 4, "max": 10},
        "p": 2.5,
        "k": 2,
        "T": 2.0,
        "g_profile": {"amplitude": 2.4, "coefficients": [[1, 0.5]]},
        "u0": {"kind": "wobble", "amplitude": 0.2},
        "seed": 8,
        "slope_range": [0.7, 1.3],
        "r2_min": 0.9,
    },
    "remainder": {
        "n_space": 64,
        "M": 10,
        "p": 2.5,
        "T": 1.0,
        "g_profile": 1.0,
        "u0": {"kind": "wobble", "amplitude": 0.2},
        "seed": 0,
        "min_window": 1,
        "exponent_slack": 0.1,
    },
    "smallnoise": {
        "n_space": 64,
        "M": 9,
        "T": 0.5,
        "epsilons": [1.0, 0.25, 0.0625, 0.015625],
        "g_profile": {"amplitude": 1.0, "coefficients": [[1, 0.5]]},
        "u0": {"kind": "wobble", "amplitude": 0.2},
        "seed": 0,
        "slope_range": [0.3, 0.7],
    },
    "skeleton": {
        "n_space": 64,
        "steps": 512,
        "T": 1.0,
        "velocity": [1.0, 0.0, 0.0],
        "g_profile": 1.0,
        "u0": "equator",
        "expected_action": None,
    },
}


def load_config(experiment: str, path: str | None) -> dict:
    if experiment not in _SCHEMAS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {sorted(_SCHEMAS)}"
        )
    cfg = dict(_SCHEMAS[experiment])
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in user.items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r} for {experiment}")
            cfg[key] = value
    return cfg


def _levels_list(spec) -> list[int]:
    if isinstance(spec, dict):
        return list(range(int(spec["min"]), int(spec["max"]) + 1))
    return [int(v) for v in spec]


class RunWriter:
    """Collects artifacts so the manifest can list every output file."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.outputs: list[str] = []
        outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.outdir / name


def _versions() -> dict:
    import numpy

    from . import __version__
    from ._kernels import backend

    return {
        "rough_llg": __version__,
        "numpy": numpy.__version__,
        "python": sys.version.split()[0],
        "kernel_backend": backend(),
    }


def run(experiment: str, cfg: dict, outdir: Path) -> int:
    """Execute one experiment; returns the exit status (0 iff all checks pass)."""
    import numpy as np

    from . import experiments as X
    from .analysis import dump_table_csv
    from .llg import SolverOptions, dump_trajectory_csv

    writer = RunWriter(outdir)
    checks: dict[str, dict] = {}

    if experiment == "driver-check":
        study = X.driver_check_study(
            cfg["seeds"], cfg["M"], cfg["n_space"], cfg["g_profile"], cfg["q"], cfg["tolerance"]
        )
        dump_table_csv(study.rows, "seed,chen_defect,levy_defect,antisym_defect",
                       writer.path("defects.csv"))
        worst = max(max(r[1:]) for r in study.rows)
        checks["structural_defects"] = {
            "passed": study.passed, "value": worst, "threshold": cfg["tolerance"]
        }

    elif experiment == "simulate":
        opts = SolverOptions(
            scheme=cfg["scheme"],
            project=cfg["project"],
            drift_enabled=cfg["drift_enabled"],
            substeps_per_interval=cfg["substeps_per_interval"],
        )
        study = X.simulate_study(
            cfg["seed"], cfg["n_space"], cfg["T"], cfg["steps"],
            cfg["u0"], cfg["g_profile"], cfg["noise"], opts,
        )
        dump_trajectory_csv(study.trajectory, writer.path("trajectory.csv"))
        dump_table_csv(
            np.column_stack([study.trajectory.timegrid.nodes, study.energies]),
            "t,energy", writer.path("energies.csv"),
        )
        if cfg["project"]:
            checks["sphere_constraint"] = {
                "passed": study.sphere_defect <= 1e-12,
                "value": study.sphere_defect, "threshold": 1e-12,
            }
        if study.stationarity is not None:
            checks["equator_stationarity"] = {
                "passed": study.stationarity <= cfg["stationarity_tol"],
                "value": study.stationarity, "threshold": cfg["stationarity_tol"],
            }

    elif experiment == "wongzakai":
        study = X.wongzakai_study(
            cfg["seed"], cfg["M"], _levels_list(cfg["levels"]), cfg["n_space"],
            cfg["p"], cfg["k"], cfg["T"], cfg["g_profile"], cfg["u0"],
        )
        dump_table_csv(study.rows, "level,driver_distance,solution_distance",
                       writer.path("levels.csv"))
        lo, hi = cfg["slope_range"]
        checks["rate_slope"] = {
            "passed": lo <= study.fit.slope <= hi,
            "value": study.fit.slope, "threshold": [lo, hi],
        }
        checks["fit_quality"] = {
            "passed": study.fit.r2 >= cfg["r2_min"],
            "value": study.fit.r2, "threshold": cfg["r2_min"],
        }

    elif experiment == "remainder":
        study = X.remainder_study(
            cfg["seed"], cfg["M"], cfg["n_space"], cfg["p"], cfg["T"],
            cfg["g_profile"], cfg["u0"], cfg["min_window"],
        )
        dump_table_csv(study.windows, "window_length,omega,remainder_L2",
                       writer.path("windows.csv"))
        target = 3.0 / cfg["p"] - cfg["exponent_slack"]
        checks["remainder_exponent"] = {
            "passed": study.exponent >= target,
            "value": study.exponent, "threshold": target,
        }

    elif experiment == "smallnoise":
        study = X.smallnoise_study(
            cfg["seed"], cfg["epsilons"], cfg["M"], cfg["n_space"], cfg["T"],
            cfg["g_profile"], cfg["u0"],
        )
        dump_table_csv(study.rows, "epsilon,distance", writer.path("epsilons.csv"))
        lo, hi = cfg["slope_range"]
        checks["distance_monotone"] = {
            "passed": study.monotone, "value": study.monotone, "threshold": True
        }
        checks["epsilon_slope"] = {
            "passed": lo <= study.fit.slope <= hi,
            "value": study.fit.slope, "threshold": [lo, hi],
        }

    elif experiment == "skeleton":
        study = X.skeleton_study(
            cfg["velocity"], cfg["steps"], cfg["n_space"], cfg["T"],
            cfg["g_profile"], cfg["u0"],
        )
        dump_trajectory_csv(study.trajectory, writer.path("trajectory.csv"))
        checks["sphere_constraint"] = {
            "passed": study.sphere_defect <= 1e-12,
            "value": study.sphere_defect, "threshold": 1e-12,
        }
        expected = cfg["expected_action"]
        if expected is not None:
            checks["action_value"] = {
                "passed": study.action == float(expected),
                "value": study.action, "threshold": float(expected),
            }
        checks["action"] = {"passed": True, "value": study.action, "threshold": None}

    else:  # pragma: no cover - guarded by load_config
        raise ConfigError(f"unknown experiment {experiment!r}")

    passed = all(c["passed"] for c in checks.values())
    summary = {"experiment": experiment, "checks": checks, "passed": passed}
    writer.path("summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n"
    )
    manifest = {
        "manifest_version": 1,
        "experiment": experiment,
        "config": cfg,
        "seed": cfg.get("seed"),
        "versions": _versions(),
        "outputs": sorted(writer.outputs),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=float) + "\n"
    )
    for name, c in checks.items():
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {experiment}/{name}: "
              f"value={c['value']} threshold={c['threshold']}")
    return 0 if passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rough-llg",
        description="rough-driver numerics for the stochastic LLG equation on the torus",
    )
    parser.add_argument("experiment", choices=sorted(_SCHEMAS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)

    if "ROUGH_LLG_THREADS" in os.environ:
        os.environ.setdefault("OMP_NUM_THREADS", os.environ["ROUGH_LLG_THREADS"])

    try:
        cfg = load_config(args.experiment, args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if "seeds" in cfg:
            cfg["seeds"] = [args.seed + i for i in range(len(cfg["seeds"]))]
        else:
            cfg["seed"] = args.seed
    outdir = Path(args.out) if args.out is not None else Path(f"runs/{args.experiment}")
    try:
        return run(args.experiment, cfg, outdir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
