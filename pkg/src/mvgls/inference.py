"""Test statistics for ``H0: R kappa = r`` and for zero intercepts.

* ``wald_fgls`` / ``wald_alpha`` -- Wald tests on PW or CO FGLS fits.
* ``har_wald`` -- OLS Wald test with a Newey-West (Bartlett) long-run variance.
* ``grs`` -- the Gibbons-Ross-Shanken F-test and its small-sample corrected
  variant, for common-factor panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .dist import RefDist, chi2, fdist
from .errors import (
    DimensionMismatch,
    NotCommonFactors,
    NotPositiveDefinite,
    SingularCovariance,
    SingularRestriction,
)

__all__ = [
    "Restriction",
    "TestResult",
    "GrsComponents",
    "alpha_restriction",
    "wald_fgls",
    "wald_alpha",
    "newey_west_lrv",
    "bartlett_lag",
    "har_wald",
    "grs_components",
    "grs",
    "TEST_NAMES",
]

TEST_NAMES = ("WaldPW", "WaldCO", "WaldHAR", "GRS", "GRS_KS")


@dataclass
class Restriction:
    """Linear restriction ``R kappa = r`` with ``R`` of full row rank."""

    R: np.ndarray
    r_vec: np.ndarray

    def __post_init__(self):
        self.R = np.atleast_2d(np.asarray(self.R, dtype=np.float64))
        self.r_vec = np.atleast_1d(np.asarray(self.r_vec, dtype=np.float64))
        if self.r_vec.shape != (self.R.shape[0],):
            raise DimensionMismatch("r_vec must have one entry per row of R")
        if self.R.shape[0] > self.R.shape[1]:
            raise SingularRestriction("more restrictions than parameters")
        tol = 1e-10 * max(np.linalg.norm(self.R, 2), 1e-300)
        if np.linalg.matrix_rank(self.R, tol=tol) < self.R.shape[0]:
            raise SingularRestriction("R is rank deficient")

    @property
    def r(self):
        return self.R.shape[0]


def alpha_restriction(N, K):
    """``R = [I_N, 0]``, ``r = 0``: all intercepts are zero."""
    return Restriction(np.hstack([np.eye(N), np.zeros((N, K))]), np.zeros(N))


@dataclass
class TestResult:
    name: str
    statistic: float
    dist: RefDist
    p_value: float

    @property
    def df(self):
        if self.dist.kind == "chi2":
            return (self.dist.df1,)
        return (self.dist.df1, self.dist.df2)

    def as_dict(self):
        return {
            "name": self.name,
            "statistic": self.statistic,
            "dist": str(self.dist),
            "df": list(self.df),
            "p_value": self.p_value,
        }


def _result(name, stat, dist):
    stat = max(float(stat), 0.0)
    return TestResult(name, stat, dist, dist.sf(stat))


def _quadratic_wald(n, d, V):
    """``n d' V^{-1} d`` through a Cholesky factor of ``V``."""
    try:
        L = linalg.cholesky(0.5 * (V + V.T), check_symmetric=False)
    except NotPositiveDefinite:
        raise SingularRestriction("restricted covariance is not positive definite") from None
    u = linalg.cho_solve(L, d)
    return n * float(d @ u)


def wald_fgls(fit, restr, name=None):
    """Wald statistic ``n (R k - r)' [R M^-1 R']^-1 (R k - r)`` with ``n`` the
    fit's effective sample size; chi-squared with ``r`` degrees of freedom."""
    if name is None:
        name = "WaldPW" if fit.kind == "PW" else "WaldCO"
    R = restr.R
    if R.shape[1] != fit.kappa_hat.size:
        raise DimensionMismatch("R has the wrong number of columns")
    try:
        L = linalg.cholesky(fit.M_hat, check_symmetric=False)
    except NotPositiveDefinite:
        raise SingularRestriction("M_hat is not positive definite") from None
    V = R @ linalg.cho_solve(L, R.T)
    d = R @ fit.kappa_hat - restr.r_vec
    return _result(name, _quadratic_wald(fit.effective_T, d, V), chi2(restr.r))


def wald_alpha(fit, name=None):
    return wald_fgls(fit, alpha_restriction(fit.N, fit.N * fit.k), name=name)


def newey_west_lrv(w_hats, l):
    """Bartlett-weighted long-run variance of the rows of ``w_hats``."""
    w = np.asarray(w_hats, dtype=np.float64)
    T = w.shape[0]
    if not 0 <= l < T:
        raise DimensionMismatch(f"lag must satisfy 0 <= l < T, got l={l}, T={T}")
    S = w.T @ w / T
    for j in range(1, l + 1):
        G = w[j:].T @ w[:-j] / T
        S += (1.0 - j / (l + 1.0)) * (G + G.T)
    return 0.5 * (S + S.T)


def bartlett_lag(T):
    """``floor(4 (T/100)^(2/9))``."""
    if T < 1:
        raise DimensionMismatch("T must be positive")
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def har_wald(ols, T=None, lag=None):
    """HAR Wald test of zero intercepts from an OLS fit.

    The covariance is the sandwich ``M^-1 Gamma M^-1`` with ``Gamma`` the
    Newey-West long-run variance of the scores; ``R`` selects its alpha block.
    """
    T = ols.w_hats.shape[0] if T is None else T
    l = bartlett_lag(T) if lag is None else lag
    gamma = newey_west_lrv(ols.w_hats, l)
    try:
        L = linalg.cholesky(ols.M_hat, check_symmetric=False)
    except NotPositiveDefinite:
        raise SingularRestriction("M_hat is not positive definite") from None
    N = ols.N
    # alpha rows of M^-1, then the alpha block of the sandwich
    Minv_R = linalg.cho_solve(L, np.eye(ols.M_hat.shape[0])[:, :N])
    V = Minv_R.T @ gamma @ Minv_R
    return _result("WaldHAR", _quadratic_wald(T, ols.alpha_hat, V), chi2(N))


@dataclass
class GrsComponents:
    x_bar: np.ndarray
    S_x: np.ndarray
    Sigma_hat: np.ndarray
    alpha_hat_ols: np.ndarray
    T: int
    N: int
    L: int


def grs_components(panel):
    if not panel.common_factors:
        raise NotCommonFactors("GRS requires factors shared by every equation")
    F = panel.factors
    T, N, L = panel.T, panel.N, panel.k
    if T <= N + L + 1:
        raise DimensionMismatch(f"GRS needs T > N + L + 1 (T={T}, N={N}, L={L})")
    D = np.hstack([np.ones((T, 1)), F])
    coef, *_ = np.linalg.lstsq(D, panel.Y, rcond=None)
    resid = panel.Y - D @ coef
    x_bar = F.mean(axis=0)
    Fc = F - x_bar
    return GrsComponents(
        x_bar=x_bar,
        S_x=Fc.T @ Fc / (T - 1),
        Sigma_hat=resid.T @ resid / (T - L - 1),
        alpha_hat_ols=coef[0],
        T=T,
        N=N,
        L=L,
    )


def grs(panel, corrected=False):
    """GRS statistic, or the variant using ``S_x* = (T-1)/T S_x`` when
    ``corrected``; referred to ``F(N, T - N - L)``."""
    c = grs_components(panel)
    T, N, L = c.T, c.N, c.L
    S = c.S_x * ((T - 1) / T) if corrected else c.S_x
    try:
        q_x = float(c.x_bar @ linalg.cho_solve(linalg.cholesky(S, check_symmetric=False), c.x_bar))
        q_a = float(
            c.alpha_hat_ols
            @ linalg.cho_solve(linalg.cholesky(c.Sigma_hat, check_symmetric=False), c.alpha_hat_ols)
        )
    except NotPositiveDefinite:
        raise SingularCovariance("factor or residual covariance is singular") from None
    stat = T * (T - N - L) / (N * (T - L - 1)) * q_a / (1.0 + q_x)
    return _result("GRS_KS" if corrected else "GRS", stat, fdist(N, T - N - L))
