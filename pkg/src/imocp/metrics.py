"""Empirical coverage/regret metrics and the closed-form guarantees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import StreamRecord, hindsight_quantile, quantile_loss_array
from .priors import Regularizer


@dataclass
class MetricsAccumulator:
    """Running totals over a stream of :class:`StreamRecord`.

    Accumulators over disjoint chunks merge with ``+``; the score log is
    concatenated in order.
    """

    error_count: int = 0
    cumulative_loss: float = 0.0
    weighted_cumulative_loss: float = 0.0
    rounds: int = 0
    keep_scores: bool = True
    score_log: list = field(default_factory=list)

    def add(self, record: StreamRecord) -> None:
        self.rounds += 1
        self.error_count += record.error
        self.cumulative_loss += record.loss
        self.weighted_cumulative_loss += record.loss * record.weight
        if self.keep_scores:
            self.score_log.append(record.true_score)

    def __add__(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        return MetricsAccumulator(
            self.error_count + other.error_count,
            self.cumulative_loss + other.cumulative_loss,
            self.weighted_cumulative_loss + other.weighted_cumulative_loss,
            self.rounds + other.rounds,
            self.keep_scores and other.keep_scores,
            self.score_log + other.score_log,
        )

    @property
    def error_rate(self) -> float:
        return self.error_count / self.rounds if self.rounds else float("nan")


def _column(records, name: str) -> np.ndarray:
    # accepts a list of StreamRecord or any log exposing column(name)
    if hasattr(records, "column"):
        return records.column(name)
    return np.array([getattr(r, name) for r in records], dtype=float)


def miscoverage_rate(records: Sequence[StreamRecord], alpha: float) -> float:
    """``|mean(E_t) - alpha|``."""
    if len(records) == 0:
        raise ValueError("no records")
    return abs(float(np.mean(_column(records, "error"))) - alpha)


def regret(records: Sequence[StreamRecord], alpha: float, weighted: bool = False) -> float:
    """Cumulative pinball loss minus that of the best fixed threshold.

    With ``weighted=True`` the online losses are importance weighted by
    ``obs_t / p_t``; the comparator always uses every true score.
    """
    if len(records) == 0:
        raise ValueError("no records")
    scores = _column(records, "true_score")
    losses = _column(records, "loss")
    if weighted:
        losses = losses * _column(records, "weight")
    q = hindsight_quantile(scores, alpha)
    return float(np.sum(losses) - np.sum(quantile_loss_array(q, scores, alpha)))


def max_bregman_to_comparator(reg: Regularizer, thresholds, comparator: float) -> float:
    """``max_t B_R(comparator, r_t)``."""
    return max(reg.bregman(comparator, float(r)) for r in thresholds)


@dataclass(frozen=True)
class TheoryConstants:
    L: float
    mu: float
    B: float
    p_min: float
    eta_1: float
    eta_T: float
    D_T: float = 0.0
    A: Optional[float] = None
    gamma: Optional[float] = None

    @classmethod
    def from_run(cls, reg: Regularizer, etas, p_min: float, D_T: float = 0.0,
                 **extra) -> "TheoryConstants":
        etas = np.asarray(etas, dtype=float)
        return cls(L=reg.smooth_l, mu=reg.mu, B=reg.bound, p_min=float(p_min),
                   eta_1=float(etas[0]), eta_T=float(etas[-1]), D_T=float(D_T), **extra)


def theorem1_bound(consts: TheoryConstants, T: int) -> float:
    """Expected miscoverage bound ``(L B + L eta_1 / (mu p_min)) / (T eta_T)``."""
    c = consts
    return (c.L * c.B + c.L * c.eta_1 / (c.mu * c.p_min)) / (T * c.eta_T)


def theorem2_bound(consts: TheoryConstants, etas) -> float:
    """Expected regret bound ``D_T / eta_T + sum(eta) / (2 mu p_min)``."""
    etas = np.asarray(etas, dtype=float)
    c = consts
    return c.D_T / float(etas[-1]) + float(np.sum(etas)) / (2.0 * c.mu * c.p_min)


def corollary1_rates(beta: float) -> tuple[float, float]:
    """Coverage rate exponent and regret growth exponent for ``eta ~ t^-beta``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    return 1.0 - beta, max(beta, 1.0 - beta)


def fit_power_law(xs, ys) -> tuple[float, float]:
    """Least-squares fit of ``y = A x^k`` in log-log space; returns ``(A, k)``.

    Non-positive ``y`` values are dropped.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return float("nan"), float("nan")
    k, log_a = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(math.exp(log_a)), float(k)


def fit_miscoverage_decay(errors, alpha: float, burn_in: float = 0.01) -> tuple[float, float]:
    """Fit ``|running mean(E) - alpha| ~ A t^-gamma``; returns ``(A, gamma)``.

    The first ``burn_in`` fraction of rounds is skipped. Diagnostic only.
    """
    e = np.asarray(errors, dtype=float)
    t = np.arange(1, e.size + 1)
    gap = np.abs(np.cumsum(e) / t - alpha)
    start = max(1, int(burn_in * e.size))
    a, k = fit_power_law(t[start:], gap[start:])
    return a, -k
