"""Smooth tail mixtures: cdf-mixed GPD/Weibull-normal models and a
power-warped normal, with maximum likelihood fitting and diagnostics."""
from .cdf_mixture import CdfMixtureModel, MixingParams, build_mixture, solve_threshold
from .diagnostics import l1_distance, qq_normal_data, quantile_table, tail_plot_series
from .distributions import Component, Gpd, Normal, Orientation, Weibull
from .errors import (ConstructionError, DataError, FitError, InvalidWarpError, ParameterError,
                     TailmixError, ThresholdError)
from .estimation import FitOptions, FitResult, ModelKind, build_model, fit, negative_log_likelihood
from .study import StudyConfig, StudyReport, run_replication, run_study
from .transform_model import TailWarp, TransformModel, WarpMode, build_transform

__version__ = "0.1.0"

__all__ = [
    "CdfMixtureModel", "MixingParams", "build_mixture", "solve_threshold",
    "l1_distance", "qq_normal_data", "quantile_table", "tail_plot_series",
    "Component", "Gpd", "Normal", "Orientation", "Weibull",
    "ConstructionError", "DataError", "FitError", "InvalidWarpError", "ParameterError",
    "TailmixError", "ThresholdError",
    "FitOptions", "FitResult", "ModelKind", "build_model", "fit", "negative_log_likelihood",
    "StudyConfig", "StudyReport", "run_replication", "run_study",
    "TailWarp", "TransformModel", "WarpMode", "build_transform",
]
