"""Symbolic regression with canonical GP, pointer-based GSGP, and GSGP-Red."""

__version__ = "0.1.0"

from .data import Dataset, kfold_split, load_csv, make_synthetic, rmse, target_std
from .estimators import GPRegressor, GSGPRedRegressor, GSGPRegressor
from .gp import GpConfig, run_gp
from .gsgp import GsgpConfig, run_gsgp
from .red import run_gsgp_red
from .report import RunReport

__all__ = [
    "Dataset",
    "GPRegressor",
    "GSGPRedRegressor",
    "GSGPRegressor",
    "GpConfig",
    "GsgpConfig",
    "RunReport",
    "kfold_split",
    "load_csv",
    "make_synthetic",
    "rmse",
    "run_gp",
    "run_gsgp",
    "run_gsgp_red",
    "target_std",
]
