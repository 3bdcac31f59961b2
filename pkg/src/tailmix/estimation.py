"""Maximum likelihood fitting of the three five-parameter model kinds.

Mixture kinds never take a threshold as input: every objective evaluation
rebuilds the model, re-solving the thresholds from the density crossings
and tying the zone half-widths to the current central scale.

Internally the optimizer works on data divided by the sample standard
deviation, which keeps every parameter of order one; results are mapped
back to data units before they are returned.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .cdf_mixture import CdfMixtureModel, build_mixture
from .distributions import Component, Gpd, Normal, Orientation, Weibull
from .errors import DataError, FitError, ParameterError, TailmixError
from .transform_model import TransformModel, WarpMode, build_transform

logger = logging.getLogger(__name__)

Model = Union[CdfMixtureModel, TransformModel]

#: returned by :func:`negative_log_likelihood` for parameter vectors that do not define a model
INFEASIBLE_NLL = 1e100
MIN_FIT_SIZE = 50


class ModelKind(str, Enum):
    GPD_N_GPD = "gpd-n-gpd"
    WEIBULL_N_WEIBULL = "weibull-n-weibull"
    TRANSFORM_NORMAL = "transform-normal"

    @property
    def is_mixture(self) -> bool:
        return self is not ModelKind.TRANSFORM_NORMAL


PARAM_NAMES = {
    ModelKind.GPD_N_GPD: ("xi_1", "sigma_1", "sigma_2", "xi_3", "sigma_3"),
    ModelKind.WEIBULL_N_WEIBULL: ("beta_1", "lambda_1", "sigma_2", "beta_3", "lambda_3"),
    ModelKind.TRANSFORM_NORMAL: ("u_1", "u_2", "beta_1", "sigma_2", "beta_3"),
}

# which entries of the parameter vector carry the units of the data
_SCALE_PARAMS = {
    ModelKind.GPD_N_GPD: (False, True, True, False, True),
    ModelKind.WEIBULL_N_WEIBULL: (False, True, True, False, True),
    ModelKind.TRANSFORM_NORMAL: (True, True, False, True, False),
}

_SIGMA_INDEX = {ModelKind.GPD_N_GPD: 2, ModelKind.WEIBULL_N_WEIBULL: 2, ModelKind.TRANSFORM_NORMAL: 3}


def build_model(kind: ModelKind, params: Sequence[float], *,
                transform_eps: Optional[float] = None,
                transform_mode: WarpMode = WarpMode.FULL_C2,
                thresholds: Optional[Sequence[float]] = None) -> Model:
    """Model of the given kind; raises a TailmixError for infeasible parameters.

    ``transform_eps=None`` ties the transform model's zone half-width to its
    central scale, like the mixture kinds.  ``thresholds`` fixes the two
    thresholds of a mixture kind instead of solving them; the transform kind
    carries its thresholds as parameters and ignores it.
    """
    kind = ModelKind(kind)
    p = [float(v) for v in params]
    if len(p) != 5:
        raise ParameterError(f"{kind.value} takes 5 parameters, got {len(p)}")
    if kind is ModelKind.TRANSFORM_NORMAL:
        u1, u2, b1, s2, b3 = p
        return build_transform(u1, u2, b1, s2, b3, eps=transform_eps, mode=transform_mode)
    family = Gpd if kind is ModelKind.GPD_N_GPD else Weibull
    a1, b1, s2, a3, b3 = p
    return build_mixture([
        Component(family(a1, b1), Orientation.LEFT),
        Component(Normal(0.0, s2), Orientation.CENTER),
        Component(family(a3, b3), Orientation.RIGHT),
    ], eps="sigma", thresholds=thresholds)


def model_thresholds(model: Model) -> tuple[float, float]:
    if isinstance(model, CdfMixtureModel):
        return model.thresholds[0], model.thresholds[-1]
    return (model.left.u if model.left else -math.inf, model.right.u if model.right else math.inf)


def model_epsilons(model: Model) -> tuple[float, float]:
    if isinstance(model, CdfMixtureModel):
        return model.epsilons[0], model.epsilons[-1]
    return (model.left.eps if model.left else 0.0, model.right.eps if model.right else 0.0)


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DataError("data is empty")
    if not np.all(np.isfinite(x)):
        raise DataError("data contains non-finite values")
    return x


def _nll(kind: ModelKind, params, x: np.ndarray, transform_eps, transform_mode) -> Optional[float]:
    try:
        model = build_model(kind, params, transform_eps=transform_eps, transform_mode=transform_mode)
    except TailmixError:
        return None
    with np.errstate(all="ignore"):
        value = -float(np.sum(model.logpdf(x)))
    return value if math.isfinite(value) else None


def negative_log_likelihood(kind: ModelKind, params: Sequence[float], data, *,
                            transform_eps: Optional[float] = None,
                            transform_mode: WarpMode = WarpMode.FULL_C2) -> float:
    """Negative log-likelihood; infeasible parameters give :data:`INFEASIBLE_NLL`."""
    x = _as_data(data)
    value = _nll(ModelKind(kind), params, x, transform_eps, WarpMode(transform_mode))
    return INFEASIBLE_NLL if value is None else value


def starting_values(kind: ModelKind, data) -> np.ndarray:
    x = _as_data(data)
    if x.size < 2:
        raise DataError("need at least two observations")
    s = float(np.std(x, ddof=1))
    if not s > 0:
        raise DataError("data has zero variance")
    kind = ModelKind(kind)
    if kind is ModelKind.GPD_N_GPD:
        return np.array([0.1, s / 2, s, 0.1, s / 2])
    if kind is ModelKind.WEIBULL_N_WEIBULL:
        return np.array([1.0, s / 2, s, 1.0, s / 2])
    return np.array([-1.5 * s, 1.5 * s, 0.7, s, 0.7])


# tail shapes screened alongside starting_values, in units of the sample std,
# ordered from light to heavy; left and right shapes are combined independently
_SCREEN_SHAPES = {
    ModelKind.GPD_N_GPD: [(0.1, 0.5), (0.2, 0.6), (0.3, 0.4)],
    ModelKind.WEIBULL_N_WEIBULL: [(1.0, 0.5), (0.8, 0.4), (0.7, 0.3), (0.6, 0.25), (0.5, 0.15)],
    ModelKind.TRANSFORM_NORMAL: [(1.5, 0.7), (1.5, 0.5), (2.0, 0.5)],
}


def _screen_candidates(kind: ModelKind) -> list[np.ndarray]:
    shapes = _SCREEN_SHAPES[kind]
    out = []
    for a, b in shapes:
        for c, d in shapes:
            if kind is ModelKind.TRANSFORM_NORMAL:
                out.append(np.array([-a, c, b, 1.0, d]))
            else:
                out.append(np.array([a, b, 1.0, c, d]))
    return out


def default_bounds(kind: ModelKind, data) -> list[tuple[float, float]]:
    x = _as_data(data)
    s = float(np.std(x, ddof=1))
    scale = (1e-8, 100 * s)
    kind = ModelKind(kind)
    if kind is ModelKind.GPD_N_GPD:
        shape = (1e-6, 2.0)
        return [shape, scale, scale, shape, scale]
    if kind is ModelKind.WEIBULL_N_WEIBULL:
        shape = (0.05, 5.0)
        return [shape, scale, scale, shape, scale]
    shape = (0.05, 3.0)
    return [(min(float(x.min()), -2 * s), -1e-8 * s), (1e-8 * s, max(float(x.max()), 2 * s)),
            shape, scale, shape]


@dataclass
class FitOptions:
    """Knobs for :func:`fit`.

    Attributes:
        bounds: per-parameter (low, high) in data units; defaults per kind.
        max_iter: optimizer iteration cap per start.
        tol: relative objective tolerance of the optimizer.
        n_starts: total number of starts; extra starts perturb the default one.
        threshold_penalty: weight of the quadratic pull of the thresholds
            towards ``threshold_anchors`` (off when 0).
        threshold_anchors: (a_1, a_2) in data units.
        seed: seeds the multistart perturbations.
        transform_eps: fixed zone half-width for the transform kind; ``None``
            ties it to the central scale.
        transform_mode: bridge construction for the transform kind.
    """

    bounds: Optional[Sequence[tuple[float, float]]] = None
    max_iter: int = 500
    tol: float = 1e-8
    n_starts: int = 1
    threshold_penalty: float = 0.0
    threshold_anchors: Optional[tuple[float, float]] = None
    seed: int = 0
    transform_eps: Optional[float] = None
    transform_mode: WarpMode = WarpMode.FULL_C2

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.n_starts < 1 or self.max_iter < 1:
            raise ValueError("n_starts and max_iter must be >= 1")
        if self.threshold_penalty < 0:
            raise ValueError("threshold_penalty must be >= 0")
        if self.threshold_penalty > 0 and self.threshold_anchors is None:
            raise ValueError("threshold_penalty needs threshold_anchors")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError(f"bad bound ({lo}, {hi})")
        self.transform_mode = WarpMode(self.transform_mode)


@dataclass
class FitResult:
    kind: ModelKind
    params: tuple[float, ...]
    thresholds: tuple[float, float]
    epsilons: tuple[float, float]
    kappa: Optional[float]
    loglik: float
    converged: bool
    n_iter: int
    n_eval: int
    n_obs: int
    message: str = ""
    transform_eps: Optional[float] = None
    transform_mode: WarpMode = WarpMode.FULL_C2

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.kind]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.param_names, self.params))

    def model(self) -> Model:
        """The fitted model, with the thresholds found during the fit."""
        return build_model(self.kind, self.params, transform_eps=self.transform_eps,
                           transform_mode=self.transform_mode,
                           thresholds=self.thresholds if self.kind.is_mixture else None)


class _Objective:
    """Penalized objective on standardized data.

    Infeasible vectors score strictly above every feasible value seen so
    far, so a descent method is always pushed back into the feasible set.
    """

    def __init__(self, kind, z, bounds, transform_eps, transform_mode, penalty, anchors):
        self.kind = kind
        self.z = z
        self.lo = np.array([b[0] for b in bounds])
        self.hi = np.array([b[1] for b in bounds])
        self.transform_eps = transform_eps
        self.transform_mode = transform_mode
        self.penalty = penalty
        self.anchors = anchors
        self.feasible_max = -math.inf
        self.n_eval = 0

    def raw(self, theta) -> Optional[float]:
        self.n_eval += 1
        if np.any(theta < self.lo) or np.any(theta > self.hi):
            return None
        try:
            model = build_model(self.kind, theta, transform_eps=self.transform_eps,
                                transform_mode=self.transform_mode)
        except TailmixError:
            return None
        with np.errstate(all="ignore"):
            value = -float(np.sum(model.logpdf(self.z)))
        if not math.isfinite(value):
            return None
        if self.penalty > 0:
            u1, u2 = model_thresholds(model)
            s2 = theta[_SIGMA_INDEX[self.kind]]
            value += self.penalty * ((u1 - self.anchors[0]) ** 2 + (u2 - self.anchors[1]) ** 2) / s2**2
        return value

    def infeasible_value(self) -> float:
        base = self.feasible_max if math.isfinite(self.feasible_max) else 0.0
        return base + 1e3 + 1e-3 * abs(base)

    def __call__(self, theta) -> float:
        value = self.raw(np.asarray(theta, dtype=float))
        if value is None:
            return self.infeasible_value()
        self.feasible_max = max(self.feasible_max, value)
        return value


def _perturbed_start(rng, start, lo, hi):
    x = start * np.exp(0.25 * rng.standard_normal(start.size))
    return np.clip(x, lo + 1e-12 * np.abs(lo), hi - 1e-12 * np.abs(hi))


_MAX_RESTARTS = 5


def _nelder_mead(obj, start, lo, hi, options):
    """Adaptive Nelder-Mead restarted from its own optimum until a restart
    stops improving the objective (at most ``_MAX_RESTARTS`` restarts)."""
    bounds = list(zip(lo, hi))
    nm = {"maxiter": options.max_iter * start.size, "maxfev": 2 * options.max_iter * start.size,
          "xatol": 1e-7, "fatol": options.tol, "adaptive": True}
    res = optimize.minimize(obj, start, method="Nelder-Mead", bounds=bounds, options=nm)
    nit, ok = int(res.nit), False
    for _ in range(_MAX_RESTARTS):
        nxt = optimize.minimize(obj, res.x, method="Nelder-Mead", bounds=bounds, options=nm)
        nit += int(nxt.nit)
        stable = res.fun - nxt.fun <= 1e-6 * max(1.0, abs(res.fun))
        if nxt.fun <= res.fun:
            res, prev_success = nxt, res.success
        else:
            prev_success = res.success
        if stable:
            ok = bool(prev_success and nxt.success)
            break
    return res.x, float(res.fun), ok, nit, str(res.message)


def fit(kind: ModelKind, data, options: Optional[FitOptions] = None) -> FitResult:
    """Fit all five parameters of ``kind`` by maximum likelihood.

    The optimizer is a bounded adaptive Nelder-Mead, restarted from its
    own optimum; the fit counts as converged when a restart no longer
    improves the objective and both of the last two runs report success.
    :func:`starting_values` and a grid of tail shapes are screened by their
    objective value; the best of them and the all-light and all-heavy tail
    candidates are optimized.  Extra starts
    (``options.n_starts``) are lognormal perturbations of the best screened
    candidate.  The best objective wins.

    Raises:
        DataError: fewer than 50 observations, non-finite or constant data.
        FitError: every start was infeasible.
    """
    kind = ModelKind(kind)
    options = options or FitOptions()
    x = _as_data(data)
    if x.size < MIN_FIT_SIZE:
        raise DataError(f"need at least {MIN_FIT_SIZE} observations to fit, got {x.size}")
    s = float(np.std(x, ddof=1))
    if not s > 0:
        raise DataError("data has zero variance")
    z = x / s
    unit = np.where(_SCALE_PARAMS[kind], s, 1.0)

    bounds = options.bounds if options.bounds is not None else default_bounds(kind, x)
    zbounds = [(lo / u, hi / u) for (lo, hi), u in zip(bounds, unit)]
    t_eps = None if options.transform_eps is None else options.transform_eps / s
    anchors = None if options.threshold_anchors is None else tuple(a / s for a in options.threshold_anchors)
    obj = _Objective(kind, z, zbounds, t_eps, options.transform_mode, options.threshold_penalty, anchors)
    lo, hi = obj.lo, obj.hi

    rng = np.random.default_rng(options.seed)
    # the objective has local optima whose basins are not predictable from the
    # start value: polish the best screened candidate and the all-light and
    # all-heavy tail candidates
    grid = _screen_candidates(kind)
    screened = []
    for cand in [starting_values(kind, z)] + grid:
        cand = np.clip(cand, lo, hi)
        value = obj.raw(cand)
        if value is not None:
            screened.append((value, cand))
    screened.sort(key=lambda vc: vc[0])
    bases = [c for _, c in screened[:1]]
    for cand in (grid[0], grid[-1]):
        cand = np.clip(cand, lo, hi)
        if not any(np.allclose(cand, b) for b in bases):
            bases.append(cand)
    starts = bases + [_perturbed_start(rng, bases[0], lo, hi) for _ in range(options.n_starts - 1)]

    best = None
    for start in starts:
        if obj.raw(start) is None:
            logger.debug("skipping infeasible start %s", start)
            continue
        theta, value, ok, nit, msg = _nelder_mead(obj, start, lo, hi, options)
        if obj.raw(theta) is None:
            continue
        if best is None or value < best[1]:
            best = (theta, value, ok, nit, msg)
    if best is None:
        raise FitError(f"no feasible start for {kind.value}")

    theta, _, ok, nit, msg = best
    params = tuple(float(v) for v in theta * unit)
    # rescale the thresholds solved on the standardized data rather than
    # re-solving them: an optimum on the edge of the feasible set may have
    # densities that touch only to rounding accuracy
    fixed = None
    if kind.is_mixture:
        fixed = tuple(s * u for u in model_thresholds(build_model(kind, theta)))
    model = build_model(kind, params, transform_eps=options.transform_eps,
                        transform_mode=options.transform_mode, thresholds=fixed)
    with np.errstate(all="ignore"):
        loglik = float(np.sum(model.logpdf(x)))
    return FitResult(
        kind=kind, params=params,
        thresholds=model_thresholds(model), epsilons=model_epsilons(model),
        kappa=model.kappa if isinstance(model, CdfMixtureModel) else None,
        loglik=loglik, converged=ok, n_iter=nit, n_eval=obj.n_eval, n_obs=int(x.size),
        message=msg, transform_eps=options.transform_eps, transform_mode=options.transform_mode,
    )
