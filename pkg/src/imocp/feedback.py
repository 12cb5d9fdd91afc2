"""Seeded intermittent-feedback simulation.

Observation draws use SplitMix64 in counter mode, so the draw for round
``t`` depends only on ``(seed, t)``:

    state = (seed + t * 0x9E3779B97F4A7C15) mod 2**64
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z = z ^ (z >> 31)
    u = (z >> 11) * 2**-53            # uniform on [0, 1)
    observed = u < p_t

Rounds are 1-based. The scalar and vectorised paths produce identical bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import FeedbackEvent, miscoverage_indicator

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def splitmix64(seed: int, t: int) -> int:
    z = (seed + t * GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def uniform_draw(seed: int, t: int) -> float:
    return (splitmix64(seed, t) >> 11) * _TWO_M53


def uniform_draws(seed: int, rounds) -> np.ndarray:
    """Vectorised :func:`uniform_draw` over an array of rounds."""
    t = np.asarray(rounds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + t * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_M53


ProbSpec = Union[float, Sequence[float], Mapping[int, float]]


@dataclass(frozen=True)
class FeedbackPolicy:
    """Per-round or per-group feedback probabilities plus a seed.

    ``probs`` is either a single probability, a per-round sequence
    (index ``t - 1``), or a mapping from group id to probability.
    """

    probs: ProbSpec
    seed: int = 0
    _table: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.probs, Mapping):
            table = {int(k): float(v) for k, v in self.probs.items()}
            values = list(table.values())
        elif np.ndim(self.probs) == 0:
            table = float(self.probs)
            values = [table]
        else:
            table = np.asarray(self.probs, dtype=float)
            values = table.tolist()
        if not values:
            raise ValueError("feedback policy needs at least one probability")
        bad = [p for p in values if not 0.0 < p <= 1.0]
        if bad:
            raise ValueError(f"feedback probabilities must lie in (0, 1], got {bad[:3]}")
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @property
    def by_group(self) -> bool:
        return isinstance(self._table, dict)

    @property
    def p_min(self) -> float:
        t = self._table
        if isinstance(t, dict):
            return min(t.values())
        return float(np.min(t))

    def prob(self, t: int, group: Optional[int] = None) -> float:
        table = self._table
        if isinstance(table, dict):
            if group is None:
                raise ValueError("group-keyed policy needs a group id")
            try:
                return table[int(group)]
            except KeyError:
                raise KeyError(f"no feedback probability for group {group}") from None
        if isinstance(table, float):
            return table
        return float(table[t - 1])

    def draw_observation(self, t: int, group: Optional[int] = None) -> bool:
        return uniform_draw(self.seed, t) < self.prob(t, group)

    def draw_observations(self, horizon: int, groups=None) -> tuple[np.ndarray, np.ndarray]:
        """Observation flags and probabilities for rounds ``1..horizon``."""
        rounds = np.arange(1, horizon + 1)
        if groups is None:
            probs = np.array([self.prob(int(t)) for t in rounds])
        else:
            probs = np.array([self.prob(int(t), g) for t, g in zip(rounds, groups)])
        return uniform_draws(self.seed, rounds) < probs, probs


def draw_observation(policy: FeedbackPolicy, t: int, group: Optional[int] = None) -> bool:
    return policy.draw_observation(t, group)


def make_event(obs: bool, p: float, threshold: float, true_score: float,
               mode: str = "error") -> FeedbackEvent:
    """Package what the learner sees after a round.

    ``mode="error"`` reveals only the miscoverage flag, ``mode="score"``
    reveals the true score.
    """
    if not obs:
        return FeedbackEvent(False, p)
    if mode == "error":
        return FeedbackEvent(True, p, error=miscoverage_indicator(threshold, true_score))
    if mode == "score":
        return FeedbackEvent(True, p, score=float(true_score))
    raise ValueError(f"unknown feedback mode {mode!r}")
