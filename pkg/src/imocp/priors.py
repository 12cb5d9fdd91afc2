"""Score priors on ``[0, B]`` and the prior-induced regularizer.

The regularizer is the expected pinball loss under the prior plus a
quadratic term,

    R(r) = psi(r) + sigma / 2 * r**2,   psi(r) = E_{x~P}[loss(r, x)],

and everything about it (value, gradient, curvature) is expressed through
three closed-form quantities of the prior: the CDF ``F``, the partial first
moment ``M(r) = int_0^r x p(x) dx`` and the density ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Any, Mapping

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_STD_NORMAL = NormalDist()


def _phi(z: float) -> float:
    return _INV_SQRT2PI * math.exp(-0.5 * z * z)


def _Phi(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


class Prior:
    """Probability distribution supported on ``[0, bound]``.

    Subclasses implement the density and its integrals on the support;
    the public methods below handle clamping outside it.
    """

    bound: float

    def _pdf(self, r: float) -> float:
        raise NotImplementedError

    def _cdf(self, r: float) -> float:
        raise NotImplementedError

    def _partial_moment(self, r: float) -> float:
        raise NotImplementedError

    def _quantile(self, q: float) -> float:
        raise NotImplementedError

    @property
    def pdf_max(self) -> float:
        raise NotImplementedError

    @property
    def pdf_min(self) -> float:
        raise NotImplementedError

    def pdf(self, r: float) -> float:
        if r < 0.0 or r > self.bound:
            return 0.0
        return self._pdf(r)

    def cdf(self, r: float) -> float:
        if r <= 0.0:
            return 0.0
        if r >= self.bound:
            return 1.0
        return self._cdf(r)

    def partial_moment(self, r: float) -> float:
        """``int_0^r x p(x) dx``, constant outside the support."""
        if r <= 0.0:
            return 0.0
        if r >= self.bound:
            return self.mean
        return self._partial_moment(r)

    @property
    def mean(self) -> float:
        return self._partial_moment(self.bound)

    def quantile(self, q: float) -> float:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantile level must be in [0, 1], got {q}")
        return self._quantile(q)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(Prior):
    bound: float = 1.0

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("bound must be positive")

    def _pdf(self, r):
        return 1.0 / self.bound

    def _cdf(self, r):
        return r / self.bound

    def _partial_moment(self, r):
        return 0.5 * r * r / self.bound

    def _quantile(self, q):
        return q * self.bound

    @property
    def pdf_max(self):
        return 1.0 / self.bound

    @property
    def pdf_min(self):
        return 1.0 / self.bound

    def to_dict(self):
        return {"kind": "uniform", "bound": self.bound}


@dataclass(frozen=True)
class Triangular(Prior):
    """Triangular density on ``[0, bound]`` peaking at ``mode``."""

    mode: float = 0.5
    bound: float = 1.0

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("bound must be positive")
        if not 0.0 <= self.mode <= self.bound:
            raise ValueError(f"mode {self.mode} outside [0, {self.bound}]")

    def _pdf(self, r):
        b, m = self.bound, self.mode
        if r < m or (r == m and m > 0.0):
            return 2.0 * r / (b * m)
        return 2.0 * (b - r) / (b * (b - m))

    def _cdf(self, r):
        b, m = self.bound, self.mode
        if r <= m:
            return r * r / (b * m)
        u = b - r
        return 1.0 - u * u / (b * (b - m))

    def _partial_moment(self, r):
        b, m = self.bound, self.mode
        if r <= m:
            return 2.0 * r**3 / (3.0 * b * m)
        head = 2.0 * m * m / (3.0 * b)
        tail = (b * (r * r - m * m) - 2.0 * (r**3 - m**3) / 3.0) / (b * (b - m))
        return head + tail

    def _quantile(self, q):
        b, m = self.bound, self.mode
        if q <= m / b:
            return math.sqrt(q * b * m)
        return b - math.sqrt((1.0 - q) * b * (b - m))

    @property
    def pdf_max(self):
        return 2.0 / self.bound

    @property
    def pdf_min(self):
        return 0.0

    def to_dict(self):
        return {"kind": "triangular", "mode": self.mode, "bound": self.bound}


@dataclass(frozen=True)
class TruncatedGaussian(Prior):
    """Gaussian ``N(mean, variance)`` restricted to ``[0, bound]``.

    ``mean`` and ``variance`` parametrise the parent Gaussian before
    truncation; ``loc`` and ``scale`` below are the same numbers.
    """

    loc: float = 0.5
    variance: float = 1.0
    bound: float = 1.0
    _z0: float = field(init=False, repr=False, compare=False)
    _zb: float = field(init=False, repr=False, compare=False)
    _mass: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("bound must be positive")
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        s = self.scale
        z0 = (0.0 - self.loc) / s
        zb = (self.bound - self.loc) / s
        mass = _Phi(zb) - _Phi(z0)
        if not mass > 0:
            raise ValueError("truncation interval carries no Gaussian mass")
        object.__setattr__(self, "_z0", z0)
        object.__setattr__(self, "_zb", zb)
        object.__setattr__(self, "_mass", mass)

    @property
    def scale(self) -> float:
        return math.sqrt(self.variance)

    def _pdf(self, r):
        s = self.scale
        return _phi((r - self.loc) / s) / (s * self._mass)

    def _cdf(self, r):
        z = (r - self.loc) / self.scale
        return (_Phi(z) - _Phi(self._z0)) / self._mass

    def _partial_moment(self, r):
        z = (r - self.loc) / self.scale
        num = self.loc * (_Phi(z) - _Phi(self._z0)) - self.scale * (_phi(z) - _phi(self._z0))
        return num / self._mass

    def _quantile(self, q):
        target = _Phi(self._z0) + q * self._mass
        target = min(max(target, 1e-300), 1.0 - 1e-16)
        r = self.loc + self.scale * _STD_NORMAL.inv_cdf(target)
        return min(max(r, 0.0), self.bound)

    @property
    def pdf_max(self):
        peak = min(max(self.loc, 0.0), self.bound)
        return self._pdf(peak)

    @property
    def pdf_min(self):
        return min(self._pdf(0.0), self._pdf(self.bound))

    def to_dict(self):
        return {"kind": "truncated_gaussian", "mean": self.loc,
                "variance": self.variance, "bound": self.bound}


def prior_from_spec(spec: Mapping[str, Any], bound: float | None = None) -> Prior:
    """Build a prior from a config mapping such as ``{"kind": "triangular", "mode": 0.1}``.

    An explicit ``bound`` overrides the one in the mapping.
    """
    spec = dict(spec)
    kind = str(spec.pop("kind", "")).lower().replace("-", "_")
    b = float(bound if bound is not None else spec.pop("bound", 1.0))
    spec.pop("bound", None)
    if kind == "uniform":
        prior = Uniform(bound=b)
    elif kind == "triangular":
        prior = Triangular(mode=float(spec.pop("mode")), bound=b)
    elif kind in ("truncated_gaussian", "gaussian", "truncnorm"):
        prior = TruncatedGaussian(loc=float(spec.pop("mean")),
                                  variance=float(spec.pop("variance")), bound=b)
    else:
        raise ValueError(f"unknown prior kind {kind!r}")
    if spec:
        raise ValueError(f"unexpected prior fields: {sorted(spec)}")
    return prior


@dataclass(frozen=True)
class Regularizer:
    """``R(r) = psi(r) + sigma/2 r^2`` for a given prior and miscoverage level.

    ``mu`` is the global strong-convexity constant. Outside ``[0, B]`` the
    curvature is exactly ``sigma``, so ``mu = sigma`` for every prior.
    ``smooth_l`` is ``sup p + sigma``.
    """

    prior: Prior
    alpha: float
    sigma: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def bound(self) -> float:
        return self.prior.bound

    @property
    def mu(self) -> float:
        return self.sigma

    @property
    def smooth_l(self) -> float:
        return self.prior.pdf_max + self.sigma

    def psi(self, r: float) -> float:
        """Expected pinball loss of threshold ``r`` under the prior."""
        p = self.prior
        m1 = p.mean
        upper_mass = 1.0 - p.cdf(r)
        upper_moment = m1 - p.partial_moment(r)
        # alpha E[r - x] - E[(r - x) 1{x > r}]
        return self.alpha * (r - m1) - (r * upper_mass - upper_moment)

    def psi_grad(self, r: float) -> float:
        return self.prior.cdf(r) - (1.0 - self.alpha)

    def psi_argmin(self) -> float:
        """The prior's ``1 - alpha`` quantile."""
        return self.prior.quantile(1.0 - self.alpha)

    def value(self, r: float) -> float:
        return self.psi(r) + 0.5 * self.sigma * r * r

    def grad(self, r: float) -> float:
        return self.prior.cdf(r) - (1.0 - self.alpha) + self.sigma * r

    def hessian(self, r: float) -> float:
        return self.prior.pdf(r) + self.sigma

    def bregman(self, u: float, v: float) -> float:
        d = self.value(u) - self.value(v) - self.grad(v) * (u - v)
        # rounding can push an exact zero slightly negative
        return max(d, 0.0)
