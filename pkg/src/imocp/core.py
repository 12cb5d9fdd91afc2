"""Scalar conformal primitives: configuration, feedback events, pinball loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class ScoreRangeError(ValueError):
    """A conformal score fell outside ``[0, B]``."""


@dataclass(frozen=True)
class CalibrationConfig:
    """Target miscoverage, score bound and starting threshold for a run.

    ``r_init`` defaults to ``1 - alpha``.
    """

    alpha: float
    score_bound: float = 1.0
    r_init: Optional[float] = None
    horizon: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.score_bound > 0.0:
            raise ValueError(f"score_bound must be positive, got {self.score_bound}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        if self.r_init is None:
            object.__setattr__(self, "r_init", 1.0 - self.alpha)

    def check_score(self, score: float) -> float:
        return check_score(score, self.score_bound)


def check_score(score: float, bound: float) -> float:
    if not (0.0 <= score <= bound):
        raise ScoreRangeError(f"score {score!r} outside [0, {bound}]")
    return float(score)


@dataclass(frozen=True)
class FeedbackEvent:
    """Feedback revealed after one round.

    ``error`` carries miscoverage feedback, ``score`` carries the true
    score. Both are absent when the round was not observed.
    """

    observed: bool
    prob: float = 1.0
    error: Optional[int] = None
    score: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.prob <= 1.0:
            raise ValueError(f"feedback probability must be in (0, 1], got {self.prob}")
        if self.observed:
            if self.error is None and self.score is None:
                raise ValueError("observed event needs error or score feedback")
            if self.error is not None and self.error not in (0, 1):
                raise ValueError(f"error must be 0 or 1, got {self.error!r}")
        elif self.error is not None or self.score is not None:
            raise ValueError("unobserved event cannot carry feedback")

    @property
    def weight(self) -> float:
        """Importance weight ``obs / p``."""
        return 1.0 / self.prob if self.observed else 0.0


@dataclass(frozen=True)
class PredictionInterval:
    center: float
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    @classmethod
    def from_threshold(cls, center: float, threshold: float) -> "PredictionInterval":
        # thresholds may dip below zero (iterates are not projected)
        return cls(center, max(threshold, 0.0))

    @property
    def lower(self) -> float:
        return self.center - self.radius

    @property
    def upper(self) -> float:
        return self.center + self.radius

    def contains(self, y: float) -> bool:
        return abs(y - self.center) <= self.radius


@dataclass(frozen=True)
class StreamRecord:
    t: int
    threshold: float
    true_score: float
    error: int
    observed: bool
    prob: float
    loss: float

    def __post_init__(self):
        if self.error != miscoverage_indicator(self.threshold, self.true_score):
            raise ValueError("error flag inconsistent with threshold and score")

    @property
    def weight(self) -> float:
        return 1.0 / self.prob if self.observed else 0.0


def quantile_loss(r: float, r_star: float, alpha: float) -> float:
    """Pinball loss ``(alpha - 1{r < r_star}) * (r - r_star)``.

    Minimised in expectation at the ``1 - alpha`` quantile of ``r_star``.
    """
    return (alpha - (1.0 if r < r_star else 0.0)) * (r - r_star)


def quantile_loss_array(r, r_star, alpha: float) -> np.ndarray:
    """Vectorised :func:`quantile_loss` with numpy broadcasting."""
    r = np.asarray(r, dtype=float)
    r_star = np.asarray(r_star, dtype=float)
    diff = r - r_star
    return (alpha - (diff < 0)) * diff


def miscoverage_indicator(threshold: float, true_score: float) -> int:
    # scores equal to the threshold are covered
    return 1 if true_score > threshold else 0


def hindsight_quantile(scores: Sequence[float], alpha: float) -> float:
    """Smallest minimiser of ``u -> sum_t quantile_loss(u, scores[t], alpha)``.

    This is the ``ceil((1 - alpha) T)``-th order statistic. A small slack
    on the rank guards against ``(1 - alpha) * T`` landing a rounding error
    above an integer, which would select the right end of a flat minimum.
    """
    arr = np.sort(np.asarray(scores, dtype=float).ravel())
    n = arr.size
    if n == 0:
        raise ValueError("hindsight_quantile needs at least one score")
    k = math.ceil((1.0 - alpha) * n - 1e-9 * n)
    k = min(max(k, 1), n)
    return float(arr[k - 1])
