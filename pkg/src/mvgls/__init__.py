"""Feasible GLS estimation and intercept tests for systems of regressions
with VAR(p) errors."""

from .dist import RefDist, chi2_sf, f_sf, quantile
from .errors import MvglsError
from .fgls import GlsFit, QdModel, co_fgls, pw_fgls, quasi_difference
from .inference import (
    Restriction,
    TestResult,
    bartlett_lag,
    grs,
    har_wald,
    newey_west_lrv,
    wald_alpha,
    wald_fgls,
)
from .model import OlsFit, PanelData, StackedModel, build_stacked, ols_fit
from .var_errors import VarFit, check_stationarity, fit_var, gamma_e_infinity, select_lag_bic

__version__ = "0.1.0"

__all__ = [
    "RefDist", "chi2_sf", "f_sf", "quantile",
    "MvglsError",
    "GlsFit", "QdModel", "co_fgls", "pw_fgls", "quasi_difference",
    "Restriction", "TestResult", "bartlett_lag", "grs", "har_wald",
    "newey_west_lrv", "wald_alpha", "wald_fgls",
    "OlsFit", "PanelData", "StackedModel", "build_stacked", "ols_fit",
    "VarFit", "check_stationarity", "fit_var", "gamma_e_infinity", "select_lag_bic",
]
