"""Mirror map ``grad R`` and its inverse by safeguarded Newton/bisection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .priors import Regularizer


class InverseMapError(RuntimeError):
    pass


@dataclass(frozen=True)
class MirrorMap:
    """Forward map ``r -> grad R(r)`` and its exact inverse.

    ``grad R`` is affine with slope ``sigma`` on both sides of ``[0, B]``,
    so only the middle branch needs iteration, and the branch values at
    ``0`` and ``B`` bracket the root.
    """

    regularizer: Regularizer
    tolerance: float = 1e-12
    max_iterations: int = 200

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    def forward(self, r: float) -> float:
        return self.regularizer.grad(r)

    def inverse(self, d: float, hint: Optional[float] = None) -> float:
        """Return ``r`` with ``|forward(r) - d| <= tolerance``.

        Args:
            d: Dual value.
            hint: Optional starting point for Newton, e.g. the previous
                iterate. Ignored if it falls outside the bracket.
        """
        reg = self.regularizer
        alpha, sigma, b = reg.alpha, reg.sigma, reg.bound
        lo_val = -(1.0 - alpha)  # forward(0)
        hi_val = alpha + sigma * b  # forward(B)
        if d < lo_val:
            return (d + (1.0 - alpha)) / sigma
        if d > hi_val:
            return (d - alpha) / sigma
        if d == lo_val:
            return 0.0
        if d == hi_val:
            return b
        return self._solve(d, hint)

    def _solve(self, d: float, hint: Optional[float]) -> float:
        reg = self.regularizer
        cdf, pdf = reg.prior.cdf, reg.prior.pdf
        shift = 1.0 - reg.alpha
        sigma = reg.sigma
        lo, hi = 0.0, reg.bound
        if hint is not None and lo < hint < hi:
            r = hint
        else:
            r = 0.5 * (lo + hi)
        for _ in range(self.max_iterations):
            g = cdf(r) - shift + sigma * r - d
            if abs(g) <= self.tolerance:
                return r
            if g > 0.0:
                hi = r
            else:
                lo = r
            step = r - g / (pdf(r) + sigma)
            if lo < step < hi:
                r = step
            else:
                r = 0.5 * (lo + hi)
            if hi - lo <= 4e-16 * max(1.0, abs(hi)):
                # bracket collapsed to adjacent floats
                return r
        raise InverseMapError(
            f"inverse mirror map did not reach tolerance {self.tolerance} "
            f"in {self.max_iterations} iterations (d={d!r})"
        )
