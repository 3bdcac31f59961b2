"""Goodness-of-fit data products: binned L1 distance, quantile tables,
normal QQ pairs and logarithmic tail-plot series."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special

from .errors import DataError

DEFAULT_PROBS = (0.001, 0.01, 0.99, 0.999)
L1_BINS = 100
_LOG_FLOOR = 1e-300


def _cdf_of(model) -> Callable:
    return model if callable(model) and not hasattr(model, "cdf") else model.cdf


def _sf_of(model) -> Callable:
    if hasattr(model, "sf"):
        return model.sf
    cdf = _cdf_of(model)
    return lambda x: 1.0 - np.asarray(cdf(x))


def l1_bin_edges(reference, n_bins: int = L1_BINS) -> np.ndarray:
    """Finite bin edges: ``n_bins - 2`` equal intervals over the reference's
    0.001..0.999 quantile range; the two unbounded end bins are implicit."""
    lo, hi = np.asarray(reference.ppf([0.001, 0.999]), dtype=float)
    return np.linspace(lo, hi, n_bins - 1)


def binned_probabilities(model, edges: np.ndarray) -> np.ndarray:
    cdf = np.asarray(_cdf_of(model)(edges), dtype=float)
    inner = np.diff(cdf)
    upper = float(_sf_of(model)(edges[-1]))
    return np.concatenate([[cdf[0]], inner, [upper]])


def l1_distance(model_a, model_b, reference=None, n_bins: int = L1_BINS) -> float:
    """Half the summed absolute difference of binned probabilities.

    Bins follow :func:`l1_bin_edges` of ``reference`` (``model_a`` when
    omitted), so no tail mass is ever dropped.
    """
    edges = l1_bin_edges(model_a if reference is None else reference, n_bins)
    pa = binned_probabilities(model_a, edges)
    pb = binned_probabilities(model_b, edges)
    return float(0.5 * np.sum(np.abs(pa - pb)))


def quantile_table(model, probs: Sequence[float] = DEFAULT_PROBS) -> list[tuple[float, float]]:
    xs = np.atleast_1d(model.ppf(np.asarray(probs, dtype=float)))
    return [(float(p), float(x)) for p, x in zip(probs, xs)]


def _sorted_data(data, min_size: int) -> np.ndarray:
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.size < min_size:
        raise DataError(f"need at least {min_size} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("data contains non-finite values")
    return x


def plotting_positions(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / (n + 1.0)


def qq_normal_data(data) -> tuple[np.ndarray, np.ndarray]:
    """Normal QQ pairs ``(theoretical, empirical)`` of standardized data.

    The data are centred by the sample mean and divided by the sample
    standard deviation; plotting positions are ``t / (N + 1)``.
    """
    x = _sorted_data(data, 2)
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise DataError("data has zero variance")
    empirical = (x - x.mean()) / sd
    theoretical = special.ndtri(plotting_positions(x.size))
    return theoretical, empirical


@dataclass(frozen=True)
class TailPlotSeries:
    """Order statistics with model and empirical log tail probabilities.

    For the left side the columns are ``log F(X_(t))`` and
    ``log(t / (N + 1))``; for the right side ``log(1 - F(X_(t)))`` and
    ``log((N + 1 - t) / (N + 1))``.  ``clamped`` flags points where the
    model probability underflowed and was floored before the log.
    """

    side: str
    x: np.ndarray
    log_model: np.ndarray
    log_empirical: np.ndarray
    clamped: np.ndarray

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.x.tolist(), self.log_model.tolist(), self.log_empirical.tolist()))


def tail_plot_series(data, model: Union[object, Callable], side: str = "right") -> TailPlotSeries:
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    x = _sorted_data(data, 10)
    n = x.size
    pos = plotting_positions(n)
    if side == "left":
        prob = np.asarray(_cdf_of(model)(x), dtype=float)
        emp = np.log(pos)
    else:
        prob = np.asarray(_sf_of(model)(x), dtype=float)
        emp = np.log(pos[::-1])
    clamped = ~(prob > _LOG_FLOOR)
    log_model = np.log(np.clip(prob, _LOG_FLOOR, 1.0))
    return TailPlotSeries(side, x, log_model, emp, clamped)


def empirical_step_cdf(data) -> Callable[[np.ndarray], np.ndarray]:
    """cdf interpolating ``t / (N + 1)`` at the order statistics."""
    x = np.sort(np.asarray(data, dtype=float))
    pos = plotting_positions(x.size)

    def cdf(v):
        return np.interp(v, x, pos)

    return cdf
