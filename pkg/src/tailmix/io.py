"""Data ingestion, model files and CSV output."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import DataError
from .estimation import FitResult, ModelKind, build_model, model_epsilons, model_thresholds
from .transform_model import WarpMode

MODEL_SCHEMA_VERSION = 1


class Provenance(str, Enum):
    RAW = "raw"
    RETURNS_FROM_PRICES = "returns_from_prices"


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    provenance: Provenance = Provenance.RAW
    mu: float = 0.0

    def __len__(self) -> int:
        return self.values.size


def centered_log_returns(prices: Sequence[float]) -> tuple[np.ndarray, float]:
    """Log returns ``log(x[t+1] / x[t]) - mu`` with ``mu`` their mean.

    Raises:
        DataError: fewer than two prices, or a non-positive or non-finite
            price.
    """
    x = np.asarray(prices, dtype=float)
    if x.size < 2:
        raise DataError("need at least two prices to form a return")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DataError("prices must be finite and > 0")
    r = np.diff(np.log(x))
    mu = float(np.mean(r))
    return r - mu, mu


def _parse_float(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def read_column(path: Union[str, Path], column: Union[int, str, None] = None) -> np.ndarray:
    """Read one numeric column from a CSV file with an optional header row.

    ``column`` is a header name or a zero-based index; the first column is
    used by default.
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = None
    first = rows[0]
    if all(_parse_float(c) is None for c in first):
        header, rows = [c.strip() for c in first], rows[1:]
    if column is None:
        col = 0
    elif isinstance(column, int) or str(column).lstrip("-").isdigit():
        col = int(column)
    else:
        if header is None or column not in header:
            raise DataError(f"column {column!r} not found")
        col = header.index(column)
    values = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if col >= len(row) or col < -len(row):
            raise DataError(f"column {column!r} missing on data row {lineno}")
        v = _parse_float(row[col])
        if v is None or not math.isfinite(v):
            raise DataError(f"non-numeric value {row[col]!r} on data row {lineno}")
        values.append(v)
    if not values:
        raise DataError(f"{path} has no data rows")
    return np.array(values)


def ingest(path: Union[str, Path], column: Union[int, str, None] = None,
           returns_from_prices: bool = False) -> Dataset:
    values = read_column(path, column)
    if returns_from_prices:
        r, mu = centered_log_returns(values)
        return Dataset(r, Provenance.RETURNS_FROM_PRICES, mu)
    return Dataset(values)


def data_digest(values: Iterable[float]) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


@dataclass
class ModelFile:
    """Persisted model: everything needed to rebuild it exactly."""

    kind: ModelKind
    params: tuple[float, ...]
    thresholds: tuple[float, float]
    epsilons: tuple[float, float]
    kappa: Optional[float] = None
    transform_eps: Optional[float] = None
    transform_mode: Optional[WarpMode] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = ModelKind(self.kind)
        self.params = tuple(float(v) for v in self.params)
        if self.transform_mode is not None:
            self.transform_mode = WarpMode(self.transform_mode)

    def model(self):
        """Rebuild the model; mixture kinds reuse the stored thresholds."""
        mode = self.transform_mode or WarpMode.FULL_C2
        return build_model(self.kind, self.params, transform_eps=self.transform_eps, transform_mode=mode,
                           thresholds=self.thresholds if self.kind.is_mixture else None)

    @classmethod
    def from_params(cls, kind, params, transform_eps=None,
                    transform_mode: WarpMode = WarpMode.FULL_C2, **metadata) -> "ModelFile":
        kind = ModelKind(kind)
        model = build_model(kind, params, transform_eps=transform_eps, transform_mode=transform_mode)
        is_transform = not kind.is_mixture
        return cls(kind, tuple(params), model_thresholds(model), model_epsilons(model),
                   getattr(model, "kappa", None),
                   transform_eps if is_transform else None,
                   WarpMode(transform_mode) if is_transform else None,
                   dict(metadata))

    @classmethod
    def from_fit(cls, res: FitResult, data, seed: Optional[int] = None) -> "ModelFile":
        is_transform = not res.kind.is_mixture
        meta = {
            "loglik": res.loglik,
            "converged": res.converged,
            "n_obs": res.n_obs,
            "n_iter": res.n_iter,
            "seed": seed,
            "data_digest": data_digest(data),
            "message": res.message,
        }
        return cls(res.kind, res.params, res.thresholds, res.epsilons, res.kappa,
                   res.transform_eps if is_transform else None,
                   res.transform_mode if is_transform else None, meta)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": self.kind.value,
            "params": list(self.params),
            "thresholds": list(self.thresholds),
            "epsilons": list(self.epsilons),
            "kappa": self.kappa,
            "transform_eps": self.transform_eps,
            "transform_mode": self.transform_mode.value if self.transform_mode else None,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelFile":
        if d.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise DataError(f"unsupported model schema_version {d.get('schema_version')!r}")
        try:
            return cls(d["kind"], tuple(d["params"]), tuple(d["thresholds"]), tuple(d["epsilons"]),
                       d.get("kappa"), d.get("transform_eps"), d.get("transform_mode"),
                       dict(d.get("metadata", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model file: {exc}") from exc

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModelFile":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from exc
        return cls.from_dict(d)


def format_number(v: float) -> str:
    """Shortest string that round-trips the double exactly."""
    return repr(float(v))


def write_csv(out: TextIO, header: Sequence[str], columns: Sequence[Iterable[float]]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([format_number(v) if not isinstance(v, (bool, np.bool_)) else str(bool(v))
                    for v in row])
