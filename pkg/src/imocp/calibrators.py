"""Online threshold calibrators.

Every calibrator holds the threshold ``r_t`` for the current round and
exposes ``step(event)``, which consumes the feedback of round ``t`` and
returns ``r_{t+1}``:

* ``ACI``    gradient step on the pinball loss, full feedback.
* ``IACI``   same step scaled by the importance weight ``obs / p``.
* ``BACI``   regularized follow-the-leader with the prior term ``h_t psi``.
* ``IBACI``  ``BACI`` with importance-weighted past losses.
* ``IMOCP``  mirror descent with the prior-induced mirror map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CalibrationConfig, FeedbackEvent, check_score, quantile_loss_array
from .mirror import MirrorMap
from .priors import Regularizer


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """Learning rates ``c T^-beta`` (fixed) or ``c t^-beta`` (decaying)."""

    mode: str = "decaying"
    c: float = 1.0
    beta: float = 0.5
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("fixed", "decaying"):
            raise ValueError(f"schedule mode must be 'fixed' or 'decaying', got {self.mode!r}")
        if not self.c > 0:
            raise ValueError("step-size constant c must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.mode == "fixed" and (self.horizon is None or self.horizon < 1):
            raise ValueError("fixed schedule needs the horizon T")

    def eta(self, t: int) -> float:
        if self.mode == "fixed":
            return self.c * self.horizon ** (-self.beta)
        return self.c * t ** (-self.beta)

    def etas(self, horizon: int) -> np.ndarray:
        return np.array([self.eta(t) for t in range(1, horizon + 1)])


def lemma1_bounds(varpi: float, alpha: float, bound: float, mu: float) -> tuple[float, float]:
    """Interval that contains every mirror-descent iterate.

    ``varpi`` is the running maximum of ``eta_i / p_i`` over past rounds.
    """
    return -alpha * varpi / mu, bound + (1.0 - alpha) * varpi / mu


class Calibrator:
    """Shared bookkeeping: round counter, threshold and ``varpi``."""

    name = "base"
    feedback_mode = "error"
    intermittent = True

    def __init__(self, config: CalibrationConfig, schedule: StepSchedule):
        self.config = config
        self.schedule = schedule
        self.alpha = config.alpha
        self.bound = config.score_bound
        self.threshold = float(config.r_init)
        self.t = 1
        self.varpi = 0.0

    @property
    def stored_scores(self) -> tuple:
        return ()

    def step(self, event: FeedbackEvent) -> float:
        if not self.intermittent and not (event.observed and event.prob == 1.0):
            raise ValueError(f"{self.name} requires feedback at every round (p = 1)")
        eta = self.schedule.eta(self.t)
        self.threshold = self._update(event, eta)
        self.varpi = max(self.varpi, eta / event.prob)
        self.t += 1
        return self.threshold

    def _update(self, event: FeedbackEvent, eta: float) -> float:
        raise NotImplementedError

    def _error(self, event: FeedbackEvent) -> int:
        if event.error is None:
            raise ValueError(f"{self.name} needs miscoverage feedback")
        return event.error

    def __repr__(self):
        return f"{type(self).__name__}(t={self.t}, threshold={self.threshold!r})"


class ACI(Calibrator):
    name = "aci"
    intermittent = False

    def _update(self, event, eta):
        return self.threshold - eta * (self.alpha - self._error(event))


class IACI(Calibrator):
    name = "iaci"

    def _update(self, event, eta):
        if not event.observed:
            return self.threshold
        return self.threshold - eta * (self.alpha - self._error(event)) / event.prob


class IMOCP(Calibrator):
    """Mirror descent on the pinball loss with mirror map ``grad R``.

    Unobserved rounds leave the threshold untouched; observed rounds take
    the importance-weighted gradient step in the dual space.
    """

    name = "imocp"

    def __init__(self, config: CalibrationConfig, schedule: StepSchedule,
                 regularizer: Regularizer, mirror: Optional[MirrorMap] = None):
        super().__init__(config, schedule)
        if regularizer.alpha != config.alpha:
            raise ValueError("regularizer alpha differs from calibration alpha")
        if regularizer.bound != config.score_bound:
            raise ValueError("prior support differs from the score bound")
        self.regularizer = regularizer
        self.map = mirror if mirror is not None else MirrorMap(regularizer)

    def _update(self, event, eta):
        if not event.observed:
            return self.threshold
        grad = (self.alpha - self._error(event)) / event.prob
        dual = self.map.forward(self.threshold) - eta * grad
        return self.map.inverse(dual, hint=self.threshold)

    def lemma1_bounds(self) -> tuple[float, float]:
        return lemma1_bounds(self.varpi, self.alpha, self.bound, self.regularizer.mu)


def regularized_objective(reg: Regularizer, h: float, scores, weights, r: float) -> float:
    """``h psi(r) + sum_i w_i loss(r, s_i)``."""
    losses = quantile_loss_array(r, np.asarray(scores, dtype=float), reg.alpha)
    return h * reg.psi(r) + float(np.dot(np.asarray(weights, dtype=float), losses))


def regularized_argmin(reg: Regularizer, h: float, scores, weights,
                       tol: float = 1e-10) -> float:
    """Smallest minimiser of :func:`regularized_objective` over ``r``.

    The subgradient ``h (F(r) - (1 - alpha)) + alpha W - W(r)`` where
    ``W(r)`` is the weight of scores strictly above ``r`` is
    non-decreasing, negative left of 0 and positive right of ``B``. We
    bisect for its sign change on ``[0, B]`` until the bracket is narrower
    than ``tol``.
    """
    s = np.asarray(scores, dtype=float)
    w = np.asarray(weights, dtype=float)
    if s.size == 0 or not np.any(w > 0):
        return reg.psi_argmin()
    if h < 0:
        raise ValueError("regularization weight h must be non-negative")
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    # tail[k] = weight of s_sorted[k:]
    tail = np.concatenate([np.cumsum(w[order][::-1])[::-1], [0.0]])
    total = tail[0]
    alpha = reg.alpha
    cdf = reg.prior.cdf

    def subgrad(r):
        above = tail[np.searchsorted(s_sorted, r, side="right")]
        return h * (cdf(r) - (1.0 - alpha)) + alpha * total - above

    lo, hi = 0.0, reg.bound
    if subgrad(lo) >= 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if subgrad(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


class BACI(Calibrator):
    """Follow-the-regularized-leader with the prior regularizer ``psi``.

    Stores every revealed score. The first threshold is the prior's
    ``1 - alpha`` quantile, the minimiser of ``psi`` alone.
    """

    name = "baci"
    feedback_mode = "score"
    intermittent = False

    def __init__(self, config: CalibrationConfig, schedule: StepSchedule,
                 regularizer: Regularizer, tol: float = 1e-10):
        super().__init__(config, schedule)
        if regularizer.alpha != config.alpha:
            raise ValueError("regularizer alpha differs from calibration alpha")
        if regularizer.bound != config.score_bound:
            raise ValueError("prior support differs from the score bound")
        eta1 = schedule.eta(1)
        if eta1 >= 1.0:
            # schedules are non-increasing, so eta_1 is the largest
            raise StepSizeError(f"{self.name} needs eta_t < 1, got eta_1 = {eta1}")
        self.regularizer = regularizer
        self.tol = tol
        self._scores: list[float] = []
        self._weights: list[float] = []
        self.threshold = regularizer.psi_argmin()

    @property
    def stored_scores(self) -> tuple:
        return tuple(zip(self._scores, self._weights))

    def h(self, t: int) -> float:
        eta = self.schedule.eta(t)
        if eta >= 1.0:
            raise StepSizeError(f"{self.name} needs eta_t < 1, got eta_{t} = {eta}")
        return eta * (t - 1) / (1.0 - eta)

    def _update(self, event, eta):
        if event.observed:
            if event.score is None:
                raise ValueError(f"{self.name} needs score feedback")
            self._scores.append(check_score(event.score, self.bound))
            self._weights.append(1.0 / event.prob)
        return regularized_argmin(self.regularizer, self.h(self.t + 1),
                                  self._scores, self._weights, self.tol)


class IBACI(BACI):
    name = "ibaci"
    intermittent = True


ALGORITHMS = ("aci", "iaci", "baci", "ibaci", "imocp")


def make_calibrator(name: str, config: CalibrationConfig, schedule: StepSchedule,
                    regularizer: Optional[Regularizer] = None) -> Calibrator:
    name = name.lower().replace("-", "")
    if name == "aci":
        return ACI(config, schedule)
    if name == "iaci":
        return IACI(config, schedule)
    if regularizer is None:
        raise ValueError(f"{name} needs a prior regularizer")
    if name == "baci":
        return BACI(config, schedule, regularizer)
    if name == "ibaci":
        return IBACI(config, schedule, regularizer)
    if name == "imocp":
        return IMOCP(config, schedule, regularizer)
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
