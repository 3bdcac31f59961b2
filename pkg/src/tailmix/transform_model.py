"""Normal model with power-law warped tails.

The cdf is ``L(x) = Phi(q(x) / sigma)`` where ``q`` is the identity in the
centre and ``u * (x / u) ** beta`` beyond ``u + eps``.  A polynomial in
``t = x - (u - eps)`` bridges the transition zone ``(u - eps, u + eps)``.

Two bridge constructions are offered:

* ``WarpMode.FULL_C2`` (default) -- ``t**3, t**4, t**5`` terms matching
  value, slope and curvature of the tail map at the zone end, so ``q`` is
  globally C2 and ``L`` a proper continuous cdf.
* ``WarpMode.PAPER_C12`` -- the classic ``c t**4 / 12 + d t**3 / 6`` bridge
  which matches slope and curvature only and leaves a small jump in ``q``
  at ``u + eps`` (see :meth:`TailWarp.value_gap`).

A lower tail is handled by reflection: it is the upper-tail construction
applied to ``-x`` with threshold ``-u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

from .distributions import ArrayLike, Normal
from .errors import ConstructionError, InvalidWarpError, ParameterError

_BISECT_ITERS = 80
_MONOTONE_POINTS = 64


class WarpMode(str, Enum):
    PAPER_C12 = "paper-c12"
    FULL_C2 = "full-c2"


def _tail_derivs(a: float, beta: float, y: float) -> tuple[float, float, float]:
    r = y / a
    return a * r**beta, beta * r ** (beta - 1), beta * (beta - 1) / a * r ** (beta - 2)


def warp_coeffs(u: float, beta: float, eps: float,
                mode: WarpMode = WarpMode.FULL_C2) -> tuple[float, ...]:
    """Transition coefficients for a warp with threshold ``u``.

    Returns ``(c, d)`` in PAPER_C12 mode and the ``t**3, t**4, t**5``
    coefficients in FULL_C2 mode.  For a lower tail (``u < 0``) the
    coefficients refer to the reflected variable.
    """
    mode = WarpMode(mode)
    a = abs(u)
    _check_geometry(u, beta, eps)
    f, f1, f2 = _tail_derivs(a, beta, a + eps)
    span = 2.0 * eps
    if mode is WarpMode.PAPER_C12:
        k1, k2 = 4, 3
        d = (f1 - 1.0 - span / (k1 - 1) * f2) / ((1.0 / (k2 - 1) - 1.0 / (k1 - 1)) * span ** (k2 - 1))
        c = (f2 - d * span ** (k2 - 2)) / span ** (k1 - 2)
        return c, d
    system = np.array([
        [span**3, span**4, span**5],
        [3 * span**2, 4 * span**3, 5 * span**4],
        [6 * span, 12 * span**2, 20 * span**3],
    ])
    rhs = np.array([f - (a - eps) - span, f1 - 1.0, f2])
    assert abs(np.linalg.det(system)) > 0
    return tuple(float(v) for v in np.linalg.solve(system, rhs))


def _check_geometry(u: float, beta: float, eps: float) -> None:
    if not (np.isfinite(u) and u != 0):
        raise ParameterError(f"warp threshold must be finite and nonzero, got {u!r}")
    if not (np.isfinite(beta) and beta > 0):
        raise ParameterError(f"warp exponent must be > 0, got {beta!r}")
    if not (np.isfinite(eps) and eps > 0):
        raise ParameterError(f"transition half-width must be > 0, got {eps!r}")
    if not abs(u) - eps > 0:
        raise ConstructionError(f"transition zone ({abs(u) - eps:.6g}, {abs(u) + eps:.6g}) crosses the origin")


@dataclass(frozen=True)
class TailWarp:
    """Power-law warp of one tail; ``u > 0`` for the upper tail, ``u < 0`` for the lower."""

    u: float
    beta: float
    eps: float
    mode: WarpMode = WarpMode.FULL_C2
    coeffs: tuple[float, ...] = field(init=False)
    _poly: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mode", WarpMode(self.mode))
        coeffs = warp_coeffs(self.u, self.beta, self.eps, self.mode)
        object.__setattr__(self, "coeffs", coeffs)
        if self.mode is WarpMode.PAPER_C12:
            c, d = coeffs
            poly = np.array([0.0, 1.0, 0.0, d / 6.0, c / 12.0])
        else:
            poly = np.array([0.0, 1.0, 0.0, *coeffs])
        object.__setattr__(self, "_poly", poly)
        t = np.linspace(0.0, 2.0 * self.eps, _MONOTONE_POINTS)
        if np.any(P.polyval(t, P.polyder(poly)) <= 0):
            raise InvalidWarpError(
                f"warp (u={self.u:.6g}, beta={self.beta:.6g}, eps={self.eps:.6g}) is not increasing on its zone")

    @property
    def sign(self) -> float:
        return 1.0 if self.u > 0 else -1.0

    @property
    def a(self) -> float:
        return abs(self.u)

    # right-frame pieces, y = sign * x
    def _q(self, y: np.ndarray) -> np.ndarray:
        a, e = self.a, self.eps
        start = a - e
        with np.errstate(invalid="ignore", divide="ignore"):
            tail = a * (np.maximum(y, a + e) / a) ** self.beta
        zone = start + P.polyval(y - start, self._poly)
        return np.where(y < start, y, np.where(y < a + e, zone, tail))

    def _dq(self, y: np.ndarray, order: int = 1) -> np.ndarray:
        a, e = self.a, self.eps
        start = a - e
        yt = np.maximum(y, a + e) / a
        b = self.beta
        tail = b * yt ** (b - 1) if order == 1 else b * (b - 1) / a * yt ** (b - 2)
        zone = P.polyval(y - start, P.polyder(self._poly, order))
        central = 1.0 if order == 1 else 0.0
        return np.where(y < start, central, np.where(y < a + e, zone, tail))

    def q(self, x: ArrayLike) -> ArrayLike:
        s = self.sign
        return (s * self._q(s * np.asarray(x, dtype=float)))[()]

    def q_prime(self, x: ArrayLike) -> ArrayLike:
        s = self.sign
        return self._dq(s * np.asarray(x, dtype=float))[()]

    def q_second(self, x: ArrayLike) -> ArrayLike:
        s = self.sign
        return (s * self._dq(s * np.asarray(x, dtype=float), order=2))[()]

    def zone_end_values(self) -> tuple[float, float]:
        """``q`` just inside the zone end and on the tail branch, right frame."""
        a, e = self.a, self.eps
        inner = (a - e) + float(P.polyval(2 * e, self._poly))
        outer = a * ((a + e) / a) ** self.beta
        return inner, outer

    def value_gap(self) -> float:
        """Jump of ``q`` at the outer zone edge; zero (to rounding) in FULL_C2 mode."""
        inner, outer = self.zone_end_values()
        return outer - inner

    def q_inverse(self, v: ArrayLike) -> ArrayLike:
        """Branch-aware inverse.  Values inside a PAPER_C12 jump map to the zone end."""
        s = self.sign
        y = s * np.asarray(v, dtype=float)
        a, e, b = self.a, self.eps, self.beta
        start = a - e
        inner, outer = self.zone_end_values()
        with np.errstate(invalid="ignore", divide="ignore"):
            tail = a * (np.maximum(y, 1e-300) / a) ** (1.0 / b)
        out = np.where(y <= start, y, tail)
        in_zone = (y > start) & (y < inner)
        if np.any(in_zone):
            target = y[in_zone]
            lo = np.full_like(target, start)
            hi = np.full_like(target, a + e)
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                zq = start + P.polyval(mid - start, self._poly)
                below = zq < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out = np.where(in_zone, 0.0, out)
            out[in_zone] = 0.5 * (lo + hi)
        gap = (y >= inner) & (y < outer)
        out = np.where(gap, a + e, out)
        return (s * out)[()]


@dataclass(frozen=True)
class TransformModel:
    """Normal centre with optional warped lower and upper tails."""

    sigma: float
    left: Optional[TailWarp] = None
    right: Optional[TailWarp] = None

    def __post_init__(self):
        Normal(0.0, self.sigma)
        if self.left is not None and self.left.u >= 0:
            raise ConstructionError("the lower warp needs a negative threshold")
        if self.right is not None and self.right.u <= 0:
            raise ConstructionError("the upper warp needs a positive threshold")

    @property
    def central(self) -> Normal:
        return Normal(0.0, self.sigma)

    def q(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = x
        if self.right is not None:
            out = np.where(x > 0, self.right.q(x), out)
        if self.left is not None:
            out = np.where(x < 0, self.left.q(x), out)
        return out[()]

    def q_prime(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        if self.right is not None:
            out = np.where(x > 0, self.right.q_prime(x), out)
        if self.left is not None:
            out = np.where(x < 0, self.left.q_prime(x), out)
        return out[()]

    def q_inverse(self, v: ArrayLike) -> ArrayLike:
        v = np.asarray(v, dtype=float)
        out = v
        if self.right is not None:
            out = np.where(v > 0, self.right.q_inverse(v), out)
        if self.left is not None:
            out = np.where(v < 0, self.left.q_inverse(v), out)
        return out[()]

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return special.ndtr(np.asarray(self.q(x)) / self.sigma)[()]

    def sf(self, x: ArrayLike) -> ArrayLike:
        return special.ndtr(-np.asarray(self.q(x)) / self.sigma)[()]

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        z = np.asarray(self.q(x)) / self.sigma
        with np.errstate(divide="ignore"):
            return (-0.5 * z * z - 0.5 * math.log(2 * math.pi) - math.log(self.sigma)
                    + np.log(self.q_prime(x)))[()]

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self.logpdf(x))

    def ppf(self, p: ArrayLike) -> ArrayLike:
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise ParameterError("probabilities must lie strictly inside (0, 1)")
        return self.q_inverse(self.sigma * special.ndtri(p))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 0:
            raise ParameterError(f"sample size must be >= 0, got {n}")
        if n == 0:
            return np.empty(0)
        return np.asarray(self.q_inverse(self.sigma * rng.standard_normal(n)), dtype=float)

    def value_gaps(self) -> dict[str, float]:
        return {side: w.value_gap() for side, w in (("left", self.left), ("right", self.right)) if w is not None}


def build_transform(u_lower: Optional[float], u_upper: Optional[float],
                    beta_lower: float, sigma: float, beta_upper: float,
                    eps: Optional[float] = None,
                    mode: WarpMode = WarpMode.FULL_C2) -> TransformModel:
    """Two-sided transform model; ``eps`` defaults to ``sigma``."""
    eps = sigma if eps is None else eps
    left = TailWarp(u_lower, beta_lower, eps, mode) if u_lower is not None else None
    right = TailWarp(u_upper, beta_upper, eps, mode) if u_upper is not None else None
    return TransformModel(sigma, left, right)


def asymptotic_log_density_rate(warp: TailWarp, sigma: float) -> float:
    """Limit of ``log l(x) / |x| ** (2 beta)`` for a normal centre."""
    return -warp.a ** (2 - 2 * warp.beta) / (2 * sigma**2)


def local_log_density_rate(model: TransformModel, x: float, side: str = "right",
                           rel_step: float = 1e-4) -> float:
    """Slope of ``log l`` against ``|x| ** (2 beta)`` at ``x``, by central differences."""
    warp = model.right if side == "right" else model.left
    if warp is None:
        raise ParameterError(f"model has no {side} warp")
    s = warp.sign
    ax = abs(x)
    h = rel_step * ax
    lo, hi = ax - h, ax + h
    dl = float(model.logpdf(s * hi) - model.logpdf(s * lo))
    two_b = 2 * warp.beta
    return dl / (hi**two_b - lo**two_b)


def transform_cdf(m: TransformModel, x: ArrayLike) -> ArrayLike:
    return m.cdf(x)


def transform_pdf(m: TransformModel, x: ArrayLike) -> ArrayLike:
    return m.pdf(x)


def transform_log_pdf(m: TransformModel, x: ArrayLike) -> ArrayLike:
    return m.logpdf(x)


def transform_quantile(m: TransformModel, p: ArrayLike) -> ArrayLike:
    return m.ppf(p)


def transform_sample(m: TransformModel, rng: np.random.Generator, n: int) -> np.ndarray:
    return m.sample(rng, n)


def warp_q(w: TailWarp, x: ArrayLike) -> ArrayLike:
    return w.q(x)


def warp_q_prime(w: TailWarp, x: ArrayLike) -> ArrayLike:
    return w.q_prime(x)


def warp_q_inverse(w: TailWarp, v: ArrayLike) -> ArrayLike:
    return w.q_inverse(v)
