"""Component families used as building blocks of the tail mixtures.

Three families are provided: :class:`Normal`, :class:`Gpd` (generalized
Pareto, positive shape only) and :class:`Weibull` (scale as divisor,
``F(x) = 1 - exp(-(x / lam) ** beta)``).  The tail families live on
``x >= 0``; a lower tail is obtained by reflecting the family through the
origin, see :class:`Orientation`.

All evaluation methods are vectorized over ``x`` and return a numpy scalar
when given a scalar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy import special

from .errors import ParameterError

ArrayLike = Union[float, np.ndarray]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _check_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if not (np.isfinite(value) and value > 0):
            raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


def _check_prob(p: np.ndarray) -> None:
    if np.any(~((p > 0) & (p < 1))):
        raise ParameterError("probabilities must lie strictly inside (0, 1)")


class Orientation(str, Enum):
    """How a family is placed on the real line.

    ``LEFT`` evaluates the family at ``-x`` (a reflected lower tail),
    ``RIGHT`` and ``CENTER`` evaluate it at ``x`` directly.
    """

    LEFT = "left"
    RIGHT = "right"
    CENTER = "center"


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mean):
            raise ParameterError(f"mean must be finite, got {self.mean!r}")
        _check_positive(sigma=self.sigma)

    @property
    def mode(self) -> float:
        return self.mean

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        z = (_arr(x) - self.mean) / self.sigma
        return (-0.5 * z * z - _LOG_SQRT_2PI - math.log(self.sigma))[()]

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self.logpdf(x))

    def pdf1(self, x: float) -> float:
        z = (x - self.mean) / self.sigma
        return math.exp(-0.5 * z * z - _LOG_SQRT_2PI) / self.sigma

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return special.ndtr((_arr(x) - self.mean) / self.sigma)[()]

    def sf(self, x: ArrayLike) -> ArrayLike:
        return special.ndtr((self.mean - _arr(x)) / self.sigma)[()]

    def ppf(self, p: ArrayLike) -> ArrayLike:
        p = _arr(p)
        _check_prob(p)
        return (self.mean + self.sigma * special.ndtri(p))[()]

    def isf(self, s: ArrayLike) -> ArrayLike:
        s = _arr(s)
        _check_prob(s)
        return (self.mean - self.sigma * special.ndtri(s))[()]


@dataclass(frozen=True)
class Gpd:
    """Generalized Pareto distribution anchored at the origin, ``xi > 0``."""

    xi: float
    sigma: float

    def __post_init__(self):
        _check_positive(xi=self.xi, sigma=self.sigma)

    @property
    def mode(self) -> float:
        return 0.0

    def _log_sf(self, x: np.ndarray) -> np.ndarray:
        # log(1 + xi x / sigma) / xi, clamped to the support
        return -np.log1p(self.xi * np.maximum(x, 0.0) / self.sigma) / self.xi

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        x = _arr(x)
        xp = np.maximum(x, 0.0)
        out = -math.log(self.sigma) - (1.0 / self.xi + 1.0) * np.log1p(self.xi * xp / self.sigma)
        return np.where(x < 0, -np.inf, out)[()]

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self.logpdf(x))

    def pdf1(self, x: float) -> float:
        if x < 0:
            return 0.0
        return math.exp(-(1.0 / self.xi + 1.0) * math.log1p(self.xi * x / self.sigma)) / self.sigma

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return (-np.expm1(self._log_sf(_arr(x))))[()]

    def sf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self._log_sf(_arr(x)))[()]

    def ppf(self, p: ArrayLike) -> ArrayLike:
        p = _arr(p)
        _check_prob(p)
        return (self.sigma / self.xi * np.expm1(-self.xi * np.log1p(-p)))[()]

    def isf(self, s: ArrayLike) -> ArrayLike:
        s = _arr(s)
        _check_prob(s)
        return (self.sigma / self.xi * np.expm1(-self.xi * np.log(s)))[()]


@dataclass(frozen=True)
class Weibull:
    """Weibull distribution with cdf ``1 - exp(-(x / lam) ** beta)``."""

    beta: float
    lam: float

    def __post_init__(self):
        _check_positive(beta=self.beta, lam=self.lam)

    @property
    def mode(self) -> float:
        if self.beta <= 1:
            return 0.0
        return self.lam * ((self.beta - 1) / self.beta) ** (1 / self.beta)

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        x = _arr(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.maximum(x, 0.0) / self.lam
            logr = np.log(r)
            out = math.log(self.beta / self.lam) + (self.beta - 1.0) * logr - r**self.beta
            if self.beta == 1.0:
                out = np.where(r == 0, math.log(1 / self.lam), out)
        return np.where(x < 0, -np.inf, out)[()]

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self.logpdf(x))

    def pdf1(self, x: float) -> float:
        if x < 0:
            return 0.0
        r = x / self.lam
        if r == 0:
            return math.inf if self.beta < 1 else (1 / self.lam if self.beta == 1 else 0.0)
        return self.beta / self.lam * r ** (self.beta - 1) * math.exp(-(r**self.beta))

    def _power(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return (np.maximum(_arr(x), 0.0) / self.lam) ** self.beta

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return (-np.expm1(-self._power(x)))[()]

    def sf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(-self._power(x))[()]

    def ppf(self, p: ArrayLike) -> ArrayLike:
        p = _arr(p)
        _check_prob(p)
        return (self.lam * (-np.log1p(-p)) ** (1.0 / self.beta))[()]

    def isf(self, s: ArrayLike) -> ArrayLike:
        s = _arr(s)
        _check_prob(s)
        return (self.lam * (-np.log(s)) ** (1.0 / self.beta))[()]


Family = Union[Normal, Gpd, Weibull]


@dataclass(frozen=True)
class Component:
    """A family together with its orientation on the real line."""

    family: Family
    orientation: Orientation = Orientation.CENTER

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def reflected(self) -> bool:
        return self.orientation is Orientation.LEFT

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        return self.family.logpdf(-_arr(x) if self.reflected else x)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return self.family.pdf(-_arr(x) if self.reflected else x)

    def pdf1(self, x: float) -> float:
        """Scalar density without numpy overhead."""
        return self.family.pdf1(-x if self.reflected else x)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        if self.reflected:
            return self.family.sf(-_arr(x))
        return self.family.cdf(x)

    def sf(self, x: ArrayLike) -> ArrayLike:
        if self.reflected:
            return self.family.cdf(-_arr(x))
        return self.family.sf(x)

    def ppf(self, p: ArrayLike) -> ArrayLike:
        if self.reflected:
            return -self.family.isf(p)
        return self.family.ppf(p)

    def isf(self, s: ArrayLike) -> ArrayLike:
        if self.reflected:
            return -self.family.ppf(s)
        return self.family.isf(s)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return family_sample(self.family, rng, n, self.orientation)


def family_pdf(params: Family, orientation: Orientation, x: ArrayLike) -> ArrayLike:
    return Component(params, orientation).pdf(x)


def family_logpdf(params: Family, orientation: Orientation, x: ArrayLike) -> ArrayLike:
    return Component(params, orientation).logpdf(x)


def family_cdf(params: Family, orientation: Orientation, x: ArrayLike) -> ArrayLike:
    return Component(params, orientation).cdf(x)


def family_quantile(params: Family, p: ArrayLike,
                    orientation: Orientation = Orientation.CENTER) -> ArrayLike:
    """Inverse of :func:`family_cdf`; raises ParameterError for p outside (0, 1)."""
    return Component(params, orientation).ppf(p)


def uniform_open(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1)."""
    u = rng.random(n)
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return u


def family_sample(params: Family, rng: np.random.Generator, n: int,
                  orientation: Orientation = Orientation.CENTER) -> np.ndarray:
    """Draw ``n`` i.i.d. values by inverting the cdf at uniform variates."""
    if n < 0:
        raise ParameterError(f"sample size must be >= 0, got {n}")
    if n == 0:
        return np.empty(0)
    return np.asarray(Component(params, orientation).ppf(uniform_open(rng, n)), dtype=float)
