"""Bundled synthetic price series."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .estimation import ModelKind, build_model

SYNTHETIC_PRICES_FILE = "synthetic_prices.csv"
SYNTHETIC_SEED = 20240601
SYNTHETIC_LENGTH = 4065
#: GPD-N-GPD parameters of the returns generator, in units of the unit-scale model
SYNTHETIC_PARAMS = (0.3, 0.4, 1.0, 0.2, 0.4)
SYNTHETIC_RETURN_SCALE = 0.01
SYNTHETIC_START_PRICE = 100.0


def make_synthetic_prices(n: int = SYNTHETIC_LENGTH, seed: int = SYNTHETIC_SEED) -> np.ndarray:
    """Prices whose log returns are scaled draws from a GPD-N-GPD model."""
    model = build_model(ModelKind.GPD_N_GPD, SYNTHETIC_PARAMS)
    r = SYNTHETIC_RETURN_SCALE * model.sample(np.random.default_rng(seed), n - 1)
    return SYNTHETIC_START_PRICE * np.exp(np.concatenate([[0.0], np.cumsum(r)]))


def synthetic_prices_path() -> Path:
    return Path(str(resources.files("tailmix") / "data" / SYNTHETIC_PRICES_FILE))


def write_synthetic_prices(path: Path) -> None:
    prices = make_synthetic_prices()
    with open(path, "w") as fh:
        fh.write("price\n")
        fh.writelines(f"{p!r}\n" for p in prices.tolist())


def load_synthetic_prices() -> np.ndarray:
    return np.loadtxt(synthetic_prices_path(), skiprows=1)
