"""Drive calibrators over score streams and write per-round/summary CSVs.

Per-round CSV columns (one file per algorithm label and seed)::

    t, threshold, true_score, error, observed, prob, loss,
    running_miscoverage, cumulative_loss

``running_miscoverage`` is the fraction of rounds ``1..t`` with an error.
Floats are written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..calibrators import Calibrator, make_calibrator
from ..core import StreamRecord, check_score, hindsight_quantile, quantile_loss_array
from ..feedback import FeedbackPolicy, make_event
from ..metrics import (TheoryConstants, fit_miscoverage_decay, max_bregman_to_comparator,
                       theorem1_bound, theorem2_bound)
from ..priors import Regularizer, prior_from_spec
from . import data as datasets
from .config import ConfigError, ExperimentConfig
from .elm import residuals, train_elm

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ("t", "threshold", "true_score", "error", "observed", "prob", "loss",
                  "running_miscoverage", "cumulative_loss")
SUMMARY_COLUMNS = ("label", "algorithm", "prior", "seed", "rounds", "error_rate",
                   "miscoverage", "obs_rate", "cumulative_loss", "weighted_cumulative_loss",
                   "regret", "weighted_regret", "D_T", "theorem1_bound", "theorem2_bound",
                   "fit_A", "fit_gamma")


@dataclass
class StreamLog:
    """Per-round arrays for one calibrator run."""

    alpha: float
    thresholds: np.ndarray
    scores: np.ndarray
    errors: np.ndarray
    observed: np.ndarray
    probs: np.ndarray
    losses: np.ndarray
    label: str = ""
    seed: int = 0

    _ALIASES = {"threshold": "thresholds", "true_score": "scores", "error": "errors",
                "prob": "probs", "loss": "losses"}

    def __len__(self):
        return self.scores.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name == "weight":
            return np.where(self.observed, 1.0 / self.probs, 0.0)
        return np.asarray(getattr(self, self._ALIASES.get(name, name)), dtype=float)

    @property
    def running_miscoverage(self) -> np.ndarray:
        return np.cumsum(self.errors) / np.arange(1, len(self) + 1)

    @property
    def cumulative_loss(self) -> np.ndarray:
        return np.cumsum(self.losses)

    def records(self) -> list[StreamRecord]:
        return [StreamRecord(t + 1, float(self.thresholds[t]), float(self.scores[t]),
                             int(self.errors[t]), bool(self.observed[t]),
                             float(self.probs[t]), float(self.losses[t]))
                for t in range(len(self))]

    def to_csv(self, path) -> None:
        running = self.running_miscoverage
        cum = self.cumulative_loss
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RECORD_COLUMNS)
            for t in range(len(self)):
                w.writerow([t + 1, repr(float(self.thresholds[t])), repr(float(self.scores[t])),
                            int(self.errors[t]), int(self.observed[t]),
                            repr(float(self.probs[t])), repr(float(self.losses[t])),
                            repr(float(running[t])), repr(float(cum[t]))])


def run_stream(calibrator: Calibrator, scores, observed=None, probs=None) -> StreamLog:
    """Run ``calibrator`` over ``scores`` with the given observation draws.

    Calibrators that need feedback every round (ACI, B-ACI) are fed every
    round with ``p = 1`` regardless of ``observed``/``probs``.
    """
    scores = np.asarray(scores, dtype=float)
    T = scores.shape[0]
    for s in scores:
        check_score(s, calibrator.bound)
    if observed is None or not calibrator.intermittent:
        observed = np.ones(T, dtype=bool)
        probs = np.ones(T)
    observed = np.asarray(observed, dtype=bool)
    probs = np.asarray(probs, dtype=float)
    thresholds = np.empty(T)
    errors = np.empty(T, dtype=np.int8)
    mode = calibrator.feedback_mode
    for t in range(T):
        r = calibrator.threshold
        s = scores[t]
        thresholds[t] = r
        errors[t] = 1 if s > r else 0
        calibrator.step(make_event(bool(observed[t]), float(probs[t]), r, s, mode))
    losses = quantile_loss_array(thresholds, scores, calibrator.alpha)
    return StreamLog(calibrator.alpha, thresholds, scores, errors, observed.copy(),
                     probs.copy(), losses)


@dataclass
class PreparedStream:
    scores: np.ndarray
    groups: Optional[np.ndarray] = None
    bound: float = 1.0
    meta: dict = field(default_factory=dict)


def prepare_stream(cfg: ExperimentConfig) -> PreparedStream:
    """Build the fixed data stream (scores and building groups) for ``cfg``."""
    d = cfg.data
    T = cfg.calibration.horizon
    if d["source"] == "synthetic":
        bound = cfg.calibration.score_bound
        spec = d.get("distribution", {"kind": "uniform"})
        scores = datasets.generate_synthetic(spec, T, int(d.get("seed", 0)), bound=bound)
        return PreparedStream(scores, None, bound, {"source": "synthetic"})
    if d["source"] == "ujiindoorloc":
        samples = datasets.load_ujiindoorloc(d["path"], floor_dbm=float(d["floor_dbm"]))
    else:
        sizes = d.get("sizes", [n + 600 for n in d["train_sizes"]])
        samples = datasets.make_surrogate(sizes, seed=int(d.get("surrogate_seed", 2025)))
    return localization_stream(samples, cfg)


def localization_stream(samples: datasets.LocalizationData, cfg: ExperimentConfig) -> PreparedStream:
    d = cfg.data
    target = d["target"]
    rng = np.random.default_rng(int(d["seed"]))
    train, calib, pools = datasets.split_by_building(
        samples, d["train_sizes"], float(d["calibration_fraction"]), rng)
    elm = d["elm"]
    tr = samples.subset(train)
    model = train_elm(tr.rssi, tr.targets, hidden=int(elm["hidden"]),
                      ridge=float(elm["ridge"]), seed=int(elm["seed"]))
    cal = samples.subset(calib)
    bound = float(np.percentile(residuals(model, cal.rssi, getattr(cal, target), target),
                                float(d["bound_percentile"])))
    if not bound > 0:
        raise ConfigError("calibration residuals are all zero; cannot set the score bound")
    kept, dropped = {}, 0
    for b, idx in pools.items():
        sub = samples.subset(idx)
        res = residuals(model, sub.rssi, getattr(sub, target), target) / bound
        ok = res <= 1.0
        if d["out_of_range"] == "error" and not ok.all():
            raise datasets.DataFormatError(
                f"building {b}: {int((~ok).sum())} test residuals exceed the bound B={bound:g}")
        dropped += int((~ok).sum())
        kept[b] = (idx[ok], res[ok])
    score_of = {int(i): s for b in kept for i, s in zip(*kept[b])}
    picks, groups = datasets.sample_stream({b: v[0] for b, v in kept.items()},
                                           cfg.calibration.horizon, rng)
    scores = np.array([score_of[int(i)] for i in picks])
    meta = {
        "source": d["source"], "target": target, "bound_raw": bound,
        "dropped_out_of_range": dropped, "n_train": int(train.size), "n_calibration": int(calib.size),
        "test_pool_sizes": {int(b): int(v[0].size) for b, v in kept.items()},
        "mean_abs_residual_by_building": {
            int(b): float(np.mean(v[1]) * bound) for b, v in kept.items()},
    }
    return PreparedStream(scores, groups, 1.0, meta)


def run_label(algorithm: str, prior_spec: Optional[dict]) -> str:
    return algorithm if prior_spec is None else f"{algorithm}-{prior_spec['kind']}"


def plan_runs(cfg: ExperimentConfig) -> list[tuple[str, str, Optional[dict]]]:
    runs = []
    for algo in cfg.algorithms:
        if algo in ("aci", "iaci"):
            runs.append((run_label(algo, None), algo, None))
        else:
            for spec in cfg.priors:
                runs.append((run_label(algo, spec), algo, spec))
    labels = [r[0] for r in runs]
    if len(set(labels)) != len(labels):
        raise ConfigError("two priors of the same kind give clashing run labels")
    return runs


def summarize(log: StreamLog, calibrator: Calibrator, cfg: ExperimentConfig,
              etas: np.ndarray) -> dict:
    alpha = log.alpha
    scores = log.scores
    q = hindsight_quantile(scores, alpha)
    comparator = float(np.sum(quantile_loss_array(q, scores, alpha)))
    weights = log.column("weight")
    total = float(np.sum(log.losses))
    weighted = float(np.dot(log.losses, weights))
    rate = float(np.mean(log.errors))
    fit_a, fit_g = fit_miscoverage_decay(log.errors, alpha)
    row = {
        "rounds": len(log), "error_rate": rate, "miscoverage": abs(rate - alpha),
        "obs_rate": float(np.mean(log.observed)),
        "cumulative_loss": total, "weighted_cumulative_loss": weighted,
        "regret": total - comparator, "weighted_regret": weighted - comparator,
        "D_T": math.nan, "theorem1_bound": math.nan, "theorem2_bound": math.nan,
        "fit_A": fit_a, "fit_gamma": fit_g,
    }
    reg = getattr(calibrator, "regularizer", None)
    if calibrator.name == "imocp" and reg is not None:
        d_t = max_bregman_to_comparator(reg, log.thresholds, q)
        consts = TheoryConstants.from_run(reg, etas, p_min=float(np.min(log.probs)), D_T=d_t)
        row.update(D_T=d_t, theorem1_bound=theorem1_bound(consts, len(log)),
                   theorem2_bound=theorem2_bound(consts, etas))
    return row


def run_replica(cfg: ExperimentConfig, stream: PreparedStream, label: str, algorithm: str,
                prior_spec: Optional[dict], seed: int) -> tuple[StreamLog, dict]:
    calib = cfg.calibration
    if stream.bound != calib.score_bound:
        calib = type(calib)(calib.alpha, stream.bound, calib.r_init, calib.horizon)
    reg = None
    if prior_spec is not None:
        reg = Regularizer(prior_from_spec(prior_spec, bound=stream.bound), calib.alpha, cfg.sigma)
    calibrator = make_calibrator(algorithm, calib, cfg.schedule, reg)
    policy = FeedbackPolicy(cfg.feedback_probs, seed)
    if policy.by_group:
        if stream.groups is None:
            raise ConfigError("group feedback probabilities need a grouped data stream")
        missing = sorted(set(np.unique(stream.groups).tolist()) - set(cfg.feedback_probs))
        if missing:
            raise ConfigError(f"no feedback probability for groups {missing}")
    T = stream.scores.shape[0]
    observed, probs = policy.draw_observations(T, stream.groups)
    log = run_stream(calibrator, stream.scores, observed, probs)
    log.label, log.seed = label, seed
    row = {"label": label, "algorithm": algorithm,
           "prior": "" if prior_spec is None else prior_spec["kind"], "seed": seed}
    row.update(summarize(log, calibrator, cfg, cfg.schedule.etas(T)))
    return log, row


@dataclass
class ExperimentResult:
    summaries: list
    aggregate: list
    meta: dict
    logs: dict = field(default_factory=dict)


def aggregate_rows(rows: list, alpha: float) -> list:
    """Per-label means and standard errors across seeds."""
    out = []
    for label in dict.fromkeys(r["label"] for r in rows):
        sel = [r for r in rows if r["label"] == label]
        n = len(sel)

        def stat(key):
            v = np.array([r[key] for r in sel], dtype=float)
            se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
            return float(np.mean(v)), se

        rate, rate_se = stat("error_rate")
        loss, loss_se = stat("cumulative_loss")
        wreg, wreg_se = stat("weighted_regret")
        out.append({
            "label": label, "algorithm": sel[0]["algorithm"], "prior": sel[0]["prior"],
            "seeds": n, "mean_error_rate": rate, "se_error_rate": rate_se,
            "expected_miscoverage": abs(rate - alpha),
            "mean_cumulative_loss": loss, "se_cumulative_loss": loss_se,
            "mean_regret": stat("regret")[0],
            "mean_weighted_regret": wreg, "se_weighted_regret": wreg_se,
            "mean_theorem1_bound": stat("theorem1_bound")[0],
            "mean_theorem2_bound": stat("theorem2_bound")[0],
            "mean_obs_rate": stat("obs_rate")[0],
        })
    return out


def _write_rows(path: Path, rows: list, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


def _replica_task(args):
    cfg, stream, label, algorithm, prior_spec, seed, out_dir = args
    log, row = run_replica(cfg, stream, label, algorithm, prior_spec, seed)
    if out_dir is not None:
        log.to_csv(Path(out_dir) / "records" / f"{label}_seed{seed}.csv")
    return log, row


def run_experiment(cfg: ExperimentConfig, write: bool = True, keep_logs: bool = False,
                   stream: Optional[PreparedStream] = None) -> ExperimentResult:
    """Run every (algorithm, prior) pair for every seed on one fixed stream."""
    stream = stream if stream is not None else prepare_stream(cfg)
    out_dir = Path(cfg.output) if write else None
    if out_dir is not None:
        (out_dir / "records").mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, stream, label, algo, spec, seed, out_dir)
             for label, algo, spec in plan_runs(cfg) for seed in cfg.seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_replica_task, tasks))
    else:
        results = [_replica_task(t) for t in tasks]
    rows = [row for _, row in results]
    agg = aggregate_rows(rows, cfg.calibration.alpha)
    meta = dict(stream.meta, horizon=int(stream.scores.size), seeds=list(cfg.seeds))
    if stream.groups is not None:
        meta["obs_rate_by_group"] = _obs_by_group(results, stream.groups)
    if out_dir is not None:
        _write_rows(out_dir / "summary.csv", rows, SUMMARY_COLUMNS)
        _write_rows(out_dir / "aggregate.csv", agg, list(agg[0]))
        with open(out_dir / "stream.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    logs = {(log.label, log.seed): log for log, _ in results} if keep_logs else {}
    for a in agg:
        logger.info("%s: error rate %.4f (se %.4f), cumulative loss %.2f",
                    a["label"], a["mean_error_rate"], a["se_error_rate"], a["mean_cumulative_loss"])
    return ExperimentResult(rows, agg, meta, logs)


def _obs_by_group(results, groups) -> dict:
    out = {}
    for b in np.unique(groups):
        mask = groups == b
        rates = [float(np.mean(log.observed[mask])) for log, _ in results
                 if log.label.split("-")[0] in ("iaci", "ibaci", "imocp")]
        if rates:
            out[int(b)] = float(np.mean(rates))
    return out
