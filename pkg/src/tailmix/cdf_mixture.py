"""Smooth mixtures built by summing truncated cdfs with warped arguments.

Component ``i`` owns the band ``(u[i-1], u[i])`` of the real line.  Inside
each mixing zone ``(u[i] - eps[i], u[i] + eps[i])`` the two neighbouring
components share the probability mass through the monotone maps
:func:`mixing_q`, which squeeze the zone into each component's band.  The
resulting cdf is

    L(x) = kappa * sum_i G_i(q_i(x))

with ``G_i`` the component cdf accumulated over its band only and
``kappa`` the normalizer.  Thresholds default to the outermost crossing of
adjacent component densities, so no threshold is chosen by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .distributions import ArrayLike, Component, Normal, Orientation, uniform_open
from .errors import ConstructionError, ParameterError, ThresholdError

# standard normal quantile at 1 - 1e-12, the default outer end of a threshold search
_NORMAL_SEARCH_REACH = 7.034484825784458
_SCAN_STEPS = np.geomspace(1e-4, 1.0, 256)
_BISECT_ITERS = 80


@dataclass(frozen=True)
class MixingParams:
    u_lower: float = -math.inf
    eps_lower: float = 0.0
    u_upper: float = math.inf
    eps_upper: float = 0.0

    def __post_init__(self):
        if self.eps_lower < 0 or self.eps_upper < 0:
            raise ConstructionError("zone half-widths must be >= 0")
        lo = self.u_lower + (self.eps_lower if math.isfinite(self.u_lower) else 0.0)
        hi = self.u_upper - (self.eps_upper if math.isfinite(self.u_upper) else 0.0)
        if not lo < hi:
            raise ConstructionError(
                f"mixing zones overlap: {self.u_lower}+{self.eps_lower} >= {self.u_upper}-{self.eps_upper}")

    @property
    def has_lower(self) -> bool:
        return math.isfinite(self.u_lower)

    @property
    def has_upper(self) -> bool:
        return math.isfinite(self.u_upper)


def _zone_phase(x, u, eps):
    return math.pi * (x - u) / (2.0 * eps)


def mixing_q(mp: MixingParams, x: ArrayLike) -> ArrayLike:
    """Map ``(u_lower - eps_lower, u_upper + eps_upper)`` onto ``(u_lower, u_upper)``.

    Below the lower zone the map is ``x + eps_lower``, above the upper zone
    ``x - eps_upper`` and the identity in between.  Inside a zone a cosine
    blend joins the pieces with matching first and second derivatives.
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    with np.errstate(invalid="ignore"):
        _blend_zones(mp, x, out)
    return out[()]


def _blend_zones(mp: MixingParams, x: np.ndarray, out: np.ndarray) -> None:
    if mp.has_lower:
        u, e = mp.u_lower, mp.eps_lower
        below = x < u - e
        out[...] = np.where(below, x + e, out)
        if e > 0:
            zone = (x >= u - e) & (x < u + e)
            blend = 0.5 * (x + u + e) - e / math.pi * np.cos(_zone_phase(x, u, e))
            out[...] = np.where(zone, blend, out)
    if mp.has_upper:
        u, e = mp.u_upper, mp.eps_upper
        above = x >= u + e
        out[...] = np.where(above, x - e, out)
        if e > 0:
            zone = (x >= u - e) & (x < u + e)
            blend = 0.5 * (x + u - e) + e / math.pi * np.cos(_zone_phase(x, u, e))
            out[...] = np.where(zone, blend, out)


def mixing_q_prime(mp: MixingParams, x: ArrayLike) -> ArrayLike:
    """Exact derivative of :func:`mixing_q`; takes values in [0, 1].

    Zone edges take the limit from inside the zone, so the derivative is
    exactly 0 or 1 there.
    """
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    if mp.has_lower and mp.eps_lower > 0:
        u, e = mp.u_lower, mp.eps_lower
        zone = (x >= u - e) & (x <= u + e)
        out = np.where(zone, 0.5 + 0.5 * np.sin(_zone_phase(x, u, e)), out)
    if mp.has_upper and mp.eps_upper > 0:
        u, e = mp.u_upper, mp.eps_upper
        zone = (x >= u - e) & (x <= u + e)
        out = np.where(zone, 0.5 - 0.5 * np.sin(_zone_phase(x, u, e)), out)
    return out[()]


def _mixing_q_and_prime(mp: MixingParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = x.copy()
    dq = np.ones_like(x)
    if mp.has_lower:
        u, e = mp.u_lower, mp.eps_lower
        q[x < u - e] += e
        if e > 0:
            zone = (x >= u - e) & (x < u + e)
            if zone.any():
                xz = x[zone]
                ph = _zone_phase(xz, u, e)
                q[zone] = 0.5 * (xz + u + e) - e / math.pi * np.cos(ph)
                dq[zone] = 0.5 + 0.5 * np.sin(ph)
    if mp.has_upper:
        u, e = mp.u_upper, mp.eps_upper
        q[x >= u + e] = x[x >= u + e] - e
        if e > 0:
            zone = (x >= u - e) & (x < u + e)
            if zone.any():
                xz = x[zone]
                ph = _zone_phase(xz, u, e)
                q[zone] = 0.5 * (xz + u - e) + e / math.pi * np.cos(ph)
                dq[zone] = 0.5 - 0.5 * np.sin(ph)
    return q, dq


def mixing_q_second(mp: MixingParams, x: ArrayLike) -> ArrayLike:
    """Second derivative of :func:`mixing_q`, zone edges included in the zone."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if mp.has_lower and mp.eps_lower > 0:
        u, e = mp.u_lower, mp.eps_lower
        zone = (x >= u - e) & (x <= u + e)
        out = np.where(zone, math.pi / (4 * e) * np.cos(_zone_phase(x, u, e)), out)
    if mp.has_upper and mp.eps_upper > 0:
        u, e = mp.u_upper, mp.eps_upper
        zone = (x >= u - e) & (x <= u + e)
        out = np.where(zone, -math.pi / (4 * e) * np.cos(_zone_phase(x, u, e)), out)
    return out[()]


def _is_upper(left: Component, right: Component) -> bool:
    if right.orientation is Orientation.RIGHT:
        return True
    if left.orientation is Orientation.LEFT:
        return False
    return True


def default_search_interval(central: Component, upper: bool) -> tuple[float, float]:
    """Interval from the central mode out to its 1e-12 tail quantile."""
    fam = central.family
    mode = float(fam.mode)
    if isinstance(fam, Normal):
        reach = _NORMAL_SEARCH_REACH * fam.sigma
    else:
        reach = float(central.isf(1e-12) if upper else -central.ppf(1e-12)) - mode
        reach = abs(reach)
    return (mode, mode + reach) if upper else (mode - reach, mode)


def solve_threshold(left: Component, right: Component,
                    search_interval: Optional[tuple[float, float]] = None,
                    upper: Optional[bool] = None) -> float:
    """Outermost crossing of the densities of two adjacent components.

    Args:
        left: component owning the band below the threshold.
        right: component owning the band above the threshold.
        search_interval: where to look; defaults to the central component's
            mode out to its 1e-12 quantile on the tail side.
        upper: whether this is an upper threshold (the largest root is
            returned) or a lower one (the smallest root).  Inferred from the
            orientations when omitted.

    Raises:
        ThresholdError: if the densities do not cross on the interval.
    """
    if upper is None:
        upper = _is_upper(left, right)
    if search_interval is None:
        central = left if upper else right
        search_interval = default_search_interval(central, upper)
    lo, hi = map(float, search_interval)
    if not lo < hi:
        raise ParameterError(f"empty search interval ({lo}, {hi})")

    # geometric grid from the inner end outward, densest near the mode
    steps = _SCAN_STEPS * (hi - lo)
    grid = lo + steps if upper else hi - steps
    with np.errstate(invalid="ignore", over="ignore"):
        diff = left.pdf(grid) - right.pdf(grid)
    sign = np.sign(diff)
    change = np.flatnonzero((sign[:-1] * sign[1:] <= 0) & np.isfinite(diff[:-1]) & np.isfinite(diff[1:]))
    if change.size == 0:
        raise ThresholdError(f"densities do not cross on ({lo:.6g}, {hi:.6g})")
    j = change[-1]
    a, b = grid[j], grid[j + 1]
    if diff[j + 1] == 0:
        return float(b)
    if diff[j] == 0:
        return float(a)

    def f(t):
        return left.pdf1(t) - right.pdf1(t)

    a, b = min(a, b), max(a, b)
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        # the scan saw a sign change only at rounding level
        return a if abs(fa) < abs(fb) else b
    return optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class CdfMixtureModel:
    """Ordered components with thresholds and zone half-widths.

    The normalizer ``kappa`` and the band masses are derived on construction
    from closed-form cdfs.
    """

    components: tuple[Component, ...]
    thresholds: tuple[float, ...]
    epsilons: tuple[float, ...]
    kappa: float = field(init=False)
    band_masses: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        comps = tuple(self.components)
        us = tuple(float(u) for u in self.thresholds)
        es = tuple(float(e) for e in self.epsilons)
        k = len(comps)
        if k < 2:
            raise ConstructionError("a mixture needs at least two components")
        if len(us) != k - 1 or len(es) != k - 1:
            raise ConstructionError(f"{k} components need {k - 1} thresholds and epsilons")
        if not all(np.isfinite(us)) or any(e < 0 or not np.isfinite(e) for e in es):
            raise ConstructionError("thresholds must be finite and epsilons finite and >= 0")
        for i in range(1, k - 1):
            if not us[i] - es[i] > us[i - 1] + es[i - 1]:
                raise ConstructionError(
                    f"mixing zones {i - 1} and {i} overlap: "
                    f"{us[i - 1]:.6g}+{es[i - 1]:.6g} >= {us[i]:.6g}-{es[i]:.6g}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "thresholds", us)
        object.__setattr__(self, "epsilons", es)

        masses = []
        for i, c in enumerate(comps):
            lo, hi = self.band(i)
            if hi == math.inf:
                m = float(c.sf(lo))
            elif lo == -math.inf:
                m = float(c.cdf(hi))
            else:
                m = float(c.cdf(hi) - c.cdf(lo))
            if not m > 0:
                raise ConstructionError(f"component {i} has no mass on its band ({lo:.6g}, {hi:.6g})")
            masses.append(m)
        object.__setattr__(self, "band_masses", tuple(masses))
        object.__setattr__(self, "kappa", 1.0 / math.fsum(masses))

    @property
    def k(self) -> int:
        return len(self.components)

    def band(self, i: int) -> tuple[float, float]:
        lo = self.thresholds[i - 1] if i > 0 else -math.inf
        hi = self.thresholds[i] if i < self.k - 1 else math.inf
        return lo, hi

    def mixing_params(self, i: int) -> MixingParams:
        lo, hi = self.band(i)
        return MixingParams(lo, self.epsilons[i - 1] if i > 0 else 0.0,
                            hi, self.epsilons[i] if i < self.k - 1 else 0.0)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for i, c in enumerate(self.components):
            lo, hi = self.band(i)
            y = np.clip(mixing_q(self.mixing_params(i), x), lo, hi)
            total = total + (c.cdf(y) - c.cdf(lo))
        return np.clip(self.kappa * total, 0.0, 1.0)[()]

    def sf(self, x: ArrayLike) -> ArrayLike:
        """Survival function, accurate in the upper tail."""
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for i, c in enumerate(self.components):
            lo, hi = self.band(i)
            y = np.clip(mixing_q(self.mixing_params(i), x), lo, hi)
            total = total + (c.sf(y) - c.sf(hi))
        return np.clip(self.kappa * total, 0.0, 1.0)[()]

    def _terms(self, x: np.ndarray):
        for i, c in enumerate(self.components):
            lo, hi = self.band(i)
            y, dq = _mixing_q_and_prime(self.mixing_params(i), x)
            inside = (y > lo) & (y < hi)
            yield c, y[inside], dq[inside], inside

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for c, y, dq, inside in self._terms(x):
            with np.errstate(invalid="ignore", over="ignore"):
                total[inside] += np.where(dq > 0, c.pdf(y) * dq, 0.0)
        return (self.kappa * total)[()]

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, -np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            for c, y, dq, inside in self._terms(x):
                out[inside] = np.logaddexp(out[inside], c.logpdf(y) + np.log(dq))
        return (out + math.log(self.kappa))[()]

    def _edges(self) -> np.ndarray:
        return np.array([v for u, e in zip(self.thresholds, self.epsilons) for v in (u - e, u + e)])

    def ppf(self, p: ArrayLike) -> ArrayLike:
        """Quantile function: closed form between zones, bisection inside them."""
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise ParameterError("probabilities must lie strictly inside (0, 1)")
        flat = p.ravel()
        out = np.empty_like(flat)
        edges = self._edges()
        ledges = np.asarray(self.cdf(edges), dtype=float)
        region = np.searchsorted(ledges, flat, side="right")
        before = np.concatenate([[0.0], np.cumsum(self.band_masses)])
        after = math.fsum(self.band_masses) - before
        for r in np.unique(region):
            sel = region == r
            pr = flat[sel]
            if r % 2 == 0:
                i = r // 2
                c = self.components[i]
                lo, hi = self.band(i)
                use_sf = pr > 0.5
                res = np.empty_like(pr)
                if np.any(~use_sf):
                    target = pr[~use_sf] / self.kappa - before[i] + (float(c.cdf(lo)) if lo > -math.inf else 0.0)
                    res[~use_sf] = c.ppf(np.clip(target, 1e-300, 1 - 1e-16))
                if np.any(use_sf):
                    target = (1.0 - pr[use_sf]) / self.kappa - after[i + 1] + (float(c.sf(hi)) if hi < math.inf else 0.0)
                    res[use_sf] = c.isf(np.clip(target, 1e-300, 1 - 1e-16))
                out[sel] = np.clip(res, edges[r - 1] if r > 0 else -np.inf,
                                   edges[r] if r < len(edges) else np.inf)
            else:
                out[sel] = _bisect_cdf(self.cdf, pr, edges[r - 1], edges[r])
        return out.reshape(p.shape)[()]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 0:
            raise ParameterError(f"sample size must be >= 0, got {n}")
        if n == 0:
            return np.empty(0)
        return np.asarray(self.ppf(uniform_open(rng, n)), dtype=float)


def _bisect_cdf(cdf, p: np.ndarray, a: float, b: float) -> np.ndarray:
    lo = np.full_like(p, a)
    hi = np.full_like(p, b)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _central_index(components: Sequence[Component]) -> int:
    for i, c in enumerate(components):
        if c.orientation is Orientation.CENTER:
            return i
    raise ConstructionError("no CENTER component to anchor thresholds and epsilons")


def build_mixture(components: Sequence[Component],
                  eps: Union[str, float, Sequence[float]] = "sigma",
                  thresholds: Optional[Sequence[float]] = None) -> CdfMixtureModel:
    """Assemble a :class:`CdfMixtureModel`, solving thresholds if not given.

    Args:
        components: ordered from the lower tail to the upper tail.
        eps: zone half-widths; ``"sigma"`` ties every zone to the scale of
            the central normal component, a float applies to every zone.
        thresholds: explicit thresholds; when omitted each adjacent pair is
            solved with :func:`solve_threshold`, searching outward from the
            central component.
    """
    comps = tuple(components)
    k = len(comps)
    if k < 2:
        raise ConstructionError("a mixture needs at least two components")
    if isinstance(eps, str):
        if eps != "sigma":
            raise ParameterError(f"unknown epsilon rule {eps!r}")
        central = comps[_central_index(comps)].family
        if not isinstance(central, Normal):
            raise ConstructionError("the 'sigma' epsilon rule needs a normal central component")
        eps_list = [central.sigma] * (k - 1)
    elif np.isscalar(eps):
        eps_list = [float(eps)] * (k - 1)
    else:
        eps_list = [float(e) for e in eps]
    if thresholds is None:
        ci = _central_index(comps)
        us = []
        for i in range(k - 1):
            upper = i >= ci
            central = comps[ci]
            us.append(solve_threshold(comps[i], comps[i + 1],
                                      default_search_interval(central, upper), upper=upper))
    else:
        us = [float(u) for u in thresholds]
    return CdfMixtureModel(comps, tuple(us), tuple(eps_list))


def mixture_cdf(m: CdfMixtureModel, x: ArrayLike) -> ArrayLike:
    return m.cdf(x)


def mixture_pdf(m: CdfMixtureModel, x: ArrayLike) -> ArrayLike:
    return m.pdf(x)


def mixture_log_pdf(m: CdfMixtureModel, x: ArrayLike) -> ArrayLike:
    return m.logpdf(x)


def mixture_quantile(m: CdfMixtureModel, p: ArrayLike) -> ArrayLike:
    return m.ppf(p)


def mixture_sample(m: CdfMixtureModel, rng: np.random.Generator, n: int) -> np.ndarray:
    return m.sample(rng, n)
