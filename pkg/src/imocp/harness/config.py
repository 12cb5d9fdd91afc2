"""Experiment configuration (YAML) and its validation.

Top-level keys::

    name: str                       # label used in output file names
    algorithms: [imocp, iaci, ...]  # any of aci, iaci, baci, ibaci, imocp
    alpha: 0.1
    score_bound: 1.0                # synthetic streams; datasets normalise to 1
    r_init: null                    # default 1 - alpha
    horizon: 2400
    schedule: {mode: decaying|fixed, c: 0.05, beta: 0.5}
    sigma: 0.5
    priors: [{kind: triangular, mode: 0.1}, ...]
    feedback: {probs: 0.5 | [p_1, ..., p_T] | {0: 0.5, 1: 0.3, 2: 0.1}}
    data: {source: synthetic | ujiindoorloc | surrogate, ...}
    seeds: 20 | [0, 1, 2]           # feedback seeds
    output: runs/example            # relative to the working directory
    jobs: 1                         # worker processes for seed replicas

``data`` for ``synthetic``::

    {source: synthetic, distribution: {kind: uniform}, seed: 0}

``data`` for ``ujiindoorloc`` (``path`` required) and ``surrogate``::

    {source: ujiindoorloc, path: TrainingData.csv, train_sizes: [1000, 2000, 8000],
     calibration_fraction: 0.3, bound_percentile: 99.5, out_of_range: drop,
     target: longitude, floor_dbm: -105, seed: 0,
     elm: {hidden: 256, ridge: 0.001, seed: 0}}
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from ..calibrators import ALGORITHMS, StepSchedule
from ..core import CalibrationConfig
from ..priors import prior_from_spec


class ConfigError(ValueError):
    pass


DATA_SOURCES = ("synthetic", "ujiindoorloc", "surrogate")

_DATA_DEFAULTS = {
    "train_sizes": [1000, 2000, 8000],
    "calibration_fraction": 0.3,
    "bound_percentile": 99.5,
    "out_of_range": "drop",
    "target": "longitude",
    "floor_dbm": -105.0,
    "seed": 0,
    "elm": {"hidden": 256, "ridge": 1e-3, "seed": 0},
}


@dataclass
class ExperimentConfig:
    algorithms: list
    calibration: CalibrationConfig
    schedule: StepSchedule
    priors: list
    sigma: float
    feedback_probs: Any
    data: dict
    seeds: list
    output: Path
    name: str = "experiment"
    jobs: int = 1

    def with_overrides(self, seeds=None, algorithms=None, output=None) -> "ExperimentConfig":
        cfg = self
        if seeds is not None:
            cfg = replace(cfg, seeds=_parse_seeds(seeds))
        if algorithms is not None:
            cfg = replace(cfg, algorithms=_parse_algorithms(algorithms))
        if output is not None:
            cfg = replace(cfg, output=Path(output))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        needs_prior = {"baci", "ibaci", "imocp"} & set(self.algorithms)
        if needs_prior and not self.priors:
            raise ConfigError(f"{sorted(needs_prior)} need at least one prior")
        if {"baci", "ibaci"} & set(self.algorithms) and self.schedule.eta(1) >= 1.0:
            raise ConfigError("B-ACI variants need eta_t < 1 for all t")
        if not self.seeds:
            raise ConfigError("no seeds")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        source = self.data.get("source")
        if source not in DATA_SOURCES:
            raise ConfigError(f"data.source must be one of {DATA_SOURCES}, got {source!r}")
        if source == "ujiindoorloc" and not self.data.get("path"):
            raise ConfigError("data.path is required for the ujiindoorloc source")
        if source == "synthetic":
            if isinstance(self.feedback_probs, dict):
                raise ConfigError("synthetic streams have no groups; give a scalar or per-round list")
            if isinstance(self.feedback_probs, list) and len(self.feedback_probs) < self.calibration.horizon:
                raise ConfigError("per-round feedback list shorter than the horizon")
        if source != "synthetic" and self.data.get("target") not in ("longitude", "latitude"):
            raise ConfigError("data.target must be longitude or latitude")
        if self.data.get("out_of_range", "drop") not in ("drop", "error"):
            raise ConfigError("data.out_of_range must be drop or error")


def _parse_seeds(value) -> list:
    if isinstance(value, str):
        value = value.strip()
        if "," in value:
            return [int(v) for v in value.split(",") if v.strip()]
        value = int(value)
    if isinstance(value, int):
        if value < 1:
            raise ConfigError("seed count must be positive")
        return list(range(value))
    return [int(v) for v in value]


def _parse_algorithms(value) -> list:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    algos = [str(v).strip().lower().replace("-", "") for v in value]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
    return algos


def _parse_probs(value):
    if isinstance(value, dict):
        return {int(k): float(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return float(value)


def config_from_dict(raw: dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    raw = dict(raw or {})
    try:
        alpha = float(raw.pop("alpha", 0.1))
        horizon = int(raw.pop("horizon", 1000))
        data = dict(raw.pop("data", {"source": "synthetic", "distribution": {"kind": "uniform"}}))
        source = data.get("source", "synthetic")
        if source != "synthetic":
            merged = {**_DATA_DEFAULTS, **data}
            merged["elm"] = {**_DATA_DEFAULTS["elm"], **data.get("elm", {})}
            data = merged
            bound = 1.0
        else:
            bound = float(raw.pop("score_bound", 1.0))
        raw.pop("score_bound", None)
        if data.get("path") and base_dir is not None and not Path(data["path"]).is_absolute():
            data["path"] = str(base_dir / data["path"])
        calib = CalibrationConfig(alpha=alpha, score_bound=bound,
                                  r_init=raw.pop("r_init", None), horizon=horizon)
        sched_raw = dict(raw.pop("schedule", {}))
        schedule = StepSchedule(mode=sched_raw.pop("mode", "decaying"),
                                c=float(sched_raw.pop("c", 1.0)),
                                beta=float(sched_raw.pop("beta", 0.5)),
                                horizon=horizon)
        if sched_raw:
            raise ConfigError(f"unexpected schedule fields {sorted(sched_raw)}")
        priors = [dict(p) for p in raw.pop("priors", [])]
        for p in priors:
            prior_from_spec(p, bound=bound)
        fb = raw.pop("feedback", {"probs": 1.0})
        out_dir = Path(raw.pop("output", "runs/" + str(raw.get("name", "experiment"))))
        cfg = ExperimentConfig(
            algorithms=_parse_algorithms(raw.pop("algorithms", ["imocp"])),
            calibration=calib,
            schedule=schedule,
            priors=priors,
            sigma=float(raw.pop("sigma", 0.5)),
            feedback_probs=_parse_probs(fb.get("probs", 1.0)),
            data=data,
            seeds=_parse_seeds(raw.pop("seeds", 1)),
            output=out_dir,
            name=str(raw.pop("name", "experiment")),
            jobs=int(raw.pop("jobs", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if raw:
        raise ConfigError(f"unknown configuration keys {sorted(raw)}")
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(raw, base_dir=path.parent)
