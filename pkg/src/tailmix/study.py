"""Cross-fitting Monte Carlo study.

Samples are drawn from a generator model, every requested kind is fitted to
each sample, and parameter, threshold, quantile, L1 and log-likelihood
statistics are aggregated per (fitted kind, sample size).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .diagnostics import DEFAULT_PROBS, l1_distance
from .errors import ParameterError, TailmixError
from .estimation import PARAM_NAMES, FitOptions, ModelKind, build_model, fit, model_thresholds
from .transform_model import WarpMode

SCHEMA_VERSION = 1
ALL_KINDS = (ModelKind.GPD_N_GPD, ModelKind.WEIBULL_N_WEIBULL, ModelKind.TRANSFORM_NORMAL)


def _quantile_key(p: float) -> str:
    return f"q_{p:g}"


@dataclass(frozen=True)
class StudyConfig:
    """Study definition.

    Attributes:
        generator: kind of the true model.
        true_params: parameter vector of the true model.
        sample_sizes: sizes at which every kind in ``fit_kinds`` is fitted.
        self_fit_sizes: additional sizes at which only the generator kind is
            fitted.
        replications: number of simulated samples per size.
        fit_kinds: kinds fitted to every sample.
        probs: quantile levels reported for each fit.
        seed: master seed; replication ``i`` at size ``m`` uses the
            substream ``SeedSequence(seed, spawn_key=(i, m))``.
        transform_eps: zone half-width for transform models, ``None`` ties
            it to the central scale.
        transform_mode: bridge construction for transform models.
        n_jobs: worker processes; results do not depend on it.
    """

    generator: ModelKind
    true_params: tuple[float, ...]
    sample_sizes: tuple[int, ...] = (1000,)
    self_fit_sizes: tuple[int, ...] = (10000,)
    replications: int = 50
    fit_kinds: tuple[ModelKind, ...] = ALL_KINDS
    probs: tuple[float, ...] = DEFAULT_PROBS
    seed: int = 0
    transform_eps: Optional[float] = None
    transform_mode: WarpMode = WarpMode.FULL_C2
    n_jobs: int = 1

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "generator", ModelKind(self.generator))
        set_(self, "fit_kinds", tuple(ModelKind(k) for k in self.fit_kinds))
        set_(self, "transform_mode", WarpMode(self.transform_mode))
        for name in ("true_params", "probs"):
            set_(self, name, tuple(float(v) for v in getattr(self, name)))
        for name in ("sample_sizes", "self_fit_sizes"):
            set_(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.replications < 2:
            raise ParameterError(f"replications must be >= 2, got {self.replications}")
        if any(m < 100 for m in self.sample_sizes + self.self_fit_sizes):
            raise ParameterError("sample sizes must be >= 100")
        if not self.sample_sizes and not self.self_fit_sizes:
            raise ParameterError("no sample sizes given")
        if not self.fit_kinds:
            raise ParameterError("no kinds to fit")
        if any(not 0 < p < 1 for p in self.probs):
            raise ParameterError("probs must lie in (0, 1)")
        if self.n_jobs < 1:
            raise ParameterError("n_jobs must be >= 1")
        self.true_model()

    def true_model(self):
        return build_model(self.generator, self.true_params, transform_eps=self.transform_eps,
                           transform_mode=self.transform_mode)

    def plan(self) -> list[tuple[int, tuple[ModelKind, ...]]]:
        """(sample size, kinds fitted at that size) in report order."""
        out = [(m, self.fit_kinds) for m in self.sample_sizes]
        out += [(m, (self.generator,)) for m in self.self_fit_sizes if m not in self.sample_sizes]
        return out

    def fit_options(self) -> FitOptions:
        return FitOptions(transform_eps=self.transform_eps, transform_mode=self.transform_mode)

    def to_dict(self) -> dict[str, Any]:
        return {
            "generator": self.generator.value,
            "true_params": list(self.true_params),
            "sample_sizes": list(self.sample_sizes),
            "self_fit_sizes": list(self.self_fit_sizes),
            "replications": self.replications,
            "fit_kinds": [k.value for k in self.fit_kinds],
            "probs": list(self.probs),
            "seed": self.seed,
            "transform_eps": self.transform_eps,
            "transform_mode": self.transform_mode.value,
            "n_jobs": self.n_jobs,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StudyConfig":
        d = dict(d)
        for name in ("true_params", "sample_sizes", "self_fit_sizes", "fit_kinds", "probs"):
            if name in d:
                d[name] = tuple(d[name])
        return cls(**d)


def replication_rng(seed: int, index: int, size: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, size)))


def _fit_record(config: StudyConfig, kind: ModelKind, data: np.ndarray, truth) -> dict[str, Any]:
    rec: dict[str, Any] = {"kind": kind.value, "converged": False, "error": None}
    try:
        res = fit(kind, data, config.fit_options())
        model = res.model()
        rec.update(
            converged=bool(res.converged),
            message=res.message,
            params=list(res.params),
            thresholds=list(res.thresholds),
            quantiles=[float(v) for v in np.atleast_1d(model.ppf(np.array(config.probs)))],
            l1=l1_distance(model, truth, reference=truth),
            loglik=res.loglik,
        )
    except TailmixError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def run_replication(config: StudyConfig, index: int) -> dict[str, Any]:
    """Simulate and fit every planned (size, kind) pair for one replication.

    The result depends only on ``config`` and ``index``.  Fit failures are
    recorded in the per-kind entries instead of being raised.
    """
    truth = config.true_model()
    fits = []
    for m, kinds in config.plan():
        data = truth.sample(replication_rng(config.seed, index, m), m)
        for kind in kinds:
            rec = _fit_record(config, kind, data, truth)
            rec["size"] = m
            fits.append(rec)
    return {"index": index, "fits": fits}


def _has_threshold_params(kind: ModelKind) -> bool:
    return "u_1" in PARAM_NAMES[kind]


def _stat_names(kind: ModelKind, probs: Sequence[float]) -> list[str]:
    thresholds = [] if _has_threshold_params(kind) else ["u_1", "u_2"]
    return list(PARAM_NAMES[kind]) + thresholds + [_quantile_key(p) for p in probs] + ["l1", "loglik"]


def _stat_values(rec: dict[str, Any]) -> list[float]:
    thresholds = [] if _has_threshold_params(ModelKind(rec["kind"])) else rec["thresholds"]
    return rec["params"] + thresholds + rec["quantiles"] + [rec["l1"], rec["loglik"]]


@dataclass
class StudyCell:
    """Aggregate over replications of one (fitted kind, sample size) pair.

    Means and standard deviations (ddof=1) use converged fits only;
    ``mean`` and ``std`` are empty when no fit converged.
    """

    kind: ModelKind
    size: int
    n_converged: int
    n_failed: int
    mean: dict[str, float]
    std: dict[str, float]

    @property
    def absent(self) -> bool:
        return self.n_converged == 0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "size": self.size, "n_converged": self.n_converged,
                "n_failed": self.n_failed, "mean": self.mean, "std": self.std}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StudyCell":
        return cls(ModelKind(d["kind"]), int(d["size"]), int(d["n_converged"]), int(d["n_failed"]),
                   dict(d["mean"]), dict(d["std"]))


@dataclass
class StudyReport:
    config: StudyConfig
    truth: dict[str, float]
    cells: list[StudyCell]
    replications: list[dict[str, Any]] = field(default_factory=list)

    def cell(self, kind, size: int) -> StudyCell:
        kind = ModelKind(kind)
        for c in self.cells:
            if c.kind is kind and c.size == size:
                return c
        raise KeyError((kind.value, size))

    def per_replication(self, kind, size: int, stat: str) -> np.ndarray:
        """Values of ``stat`` by replication index, NaN where the fit failed."""
        kind = ModelKind(kind)
        names = _stat_names(kind, self.config.probs)
        col = names.index(stat)
        out = np.full(len(self.replications), np.nan)
        for i, rep in enumerate(self.replications):
            for rec in rep["fits"]:
                if rec["kind"] == kind.value and rec["size"] == size and rec["converged"]:
                    out[i] = _stat_values(rec)[col]
        return out

    def to_dict(self, include_replications: bool = True) -> dict[str, Any]:
        d = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "truth": self.truth,
            "cells": [c.to_dict() for c in self.cells],
        }
        if include_replications:
            d["replications"] = self.replications
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StudyReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(StudyConfig.from_dict(d["config"]), dict(d["truth"]),
                   [StudyCell.from_dict(c) for c in d["cells"]], list(d.get("replications", [])))

    def format_table(self) -> str:
        """Plain-text summary with one mean row and one std row per cell."""
        lines = []
        for c in self.cells:
            names = _stat_names(c.kind, self.config.probs)
            lines.append(f"[{c.kind.value} m={c.size} converged={c.n_converged} failed={c.n_failed}]")
            if c.absent:
                lines.append("  (no converged fits)")
                continue
            lines.append("  " + " ".join(f"{n:>10s}" for n in names))
            lines.append("  " + " ".join(f"{c.mean[n]:10.4f}" for n in names))
            lines.append("  " + " ".join(f"{c.std[n]:10.4f}" for n in names))
        return "\n".join(lines)


def truth_row(config: StudyConfig) -> dict[str, float]:
    truth = config.true_model()
    row = {"u_1": 0.0, "u_2": 0.0}
    row["u_1"], row["u_2"] = model_thresholds(truth)
    row.update(zip(PARAM_NAMES[config.generator], config.true_params))
    for p, q in zip(config.probs, np.atleast_1d(truth.ppf(np.array(config.probs)))):
        row[_quantile_key(p)] = float(q)
    return row


def aggregate(config: StudyConfig, replications: Sequence[dict[str, Any]]) -> list[StudyCell]:
    cells = []
    for m, kinds in config.plan():
        for kind in kinds:
            names = _stat_names(kind, config.probs)
            recs = [r for rep in replications for r in rep["fits"]
                    if r["kind"] == kind.value and r["size"] == m]
            ok = np.array([_stat_values(r) for r in recs if r["converged"]], dtype=float)
            n_ok = ok.shape[0] if ok.size else 0
            mean, std = {}, {}
            if n_ok:
                mean = dict(zip(names, ok.mean(axis=0).tolist()))
                sd = ok.std(axis=0, ddof=1) if n_ok > 1 else np.full(len(names), math.nan)
                std = dict(zip(names, sd.tolist()))
            cells.append(StudyCell(kind, m, n_ok, len(recs) - n_ok, mean, std))
    return cells


def _replication_task(args):
    config, index = args
    return run_replication(config, index)


def run_study(config: StudyConfig) -> StudyReport:
    """Run all replications, in worker processes when ``n_jobs > 1``."""
    tasks = [(config, i) for i in range(config.replications)]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            reps = list(pool.map(_replication_task, tasks))
    else:
        reps = [_replication_task(t) for t in tasks]
    reps.sort(key=lambda r: r["index"])
    return StudyReport(config, truth_row(config), aggregate(config, reps), reps)
