"""VAR(p) model for the regression errors: OLS fit, BIC lag choice, and the
stationary variance used by the Prais-Winsten transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    InsufficientSample,
    NoConvergence,
    NonStationaryVar,
    NotPositiveDefinite,
    SingularGram,
)

__all__ = [
    "VarFit",
    "fit_var",
    "select_lag_bic",
    "check_stationarity",
    "gamma_e_infinity",
    "DEFAULT_P_MAX",
]

DEFAULT_P_MAX = 5


@dataclass
class VarFit:
    """Fitted ``e_t = Phi_1 e_{t-1} + ... + Phi_p e_{t-p} + eps_t``.

    ``Phi`` has shape ``(p, N, N)``; ``Omega`` is the innovation covariance
    ``H H' / (T - p)``.
    """

    p: int
    Phi: np.ndarray
    Omega: np.ndarray
    sample_used: int

    @property
    def N(self):
        return self.Omega.shape[0]

    @classmethod
    def from_params(cls, Phi, Omega, sample_used=0):
        Omega = np.atleast_2d(np.asarray(Omega, dtype=np.float64))
        N = Omega.shape[0]
        Phi = np.asarray(Phi, dtype=np.float64).reshape(-1, N, N)
        return cls(p=Phi.shape[0], Phi=Phi, Omega=Omega, sample_used=sample_used)

    @property
    def phi_sum(self):
        return self.Phi.sum(axis=0) if self.p else np.zeros((self.N, self.N))


def _lag_matrix(e, p, start):
    """Rows ``t = start..T-1`` of ``[e_{t-1}', ..., e_{t-p}']``."""
    T = e.shape[0]
    return np.concatenate([e[start - j : T - j] for j in range(1, p + 1)], axis=1)


def _check_sample(T, N, p):
    if p < 0:
        raise InsufficientSample(f"lag order must be >= 0, got {p}")
    if T - p < N * p + 1:
        raise InsufficientSample(f"T={T} too short for a VAR({p}) in {N} variables")


def _ols_var(e, p, start):
    U = e[start:]
    if p == 0:
        return np.zeros((0, e.shape[1], e.shape[1])), U
    V = _lag_matrix(e, p, start)
    try:
        L = linalg.cholesky(V.T @ V, check_symmetric=False)
    except NotPositiveDefinite:
        raise SingularGram(f"lagged residual Gram is singular (p={p})") from None
    B = linalg.cho_solve(L, V.T @ U)  # (Np, N) = Phi'
    H = U - V @ B
    N = e.shape[1]
    Phi = B.T.reshape(N, p, N).transpose(1, 0, 2)
    return Phi, H


def fit_var(residuals, p):
    """OLS fit of a VAR(p) without intercept on the rows ``t = p+1..T``."""
    e = np.asarray(residuals, dtype=np.float64)
    if e.ndim == 1:
        e = e[:, None]
    T, N = e.shape
    _check_sample(T, N, p)
    Phi, H = _ols_var(e, p, p)
    Omega = H.T @ H / (T - p)
    Omega = 0.5 * (Omega + Omega.T)
    return VarFit(p=p, Phi=Phi, Omega=Omega, sample_used=T - p)


def bic_values(residuals, p_max, p_min=0):
    """BIC(p) for ``p = p_min..p_max`` on the common sample ``t = p_max+1..T``."""
    e = np.asarray(residuals, dtype=np.float64)
    if e.ndim == 1:
        e = e[:, None]
    T, N = e.shape
    _check_sample(T, N, p_max)
    t_star = T - p_max
    out = {}
    for p in range(p_min, p_max + 1):
        _, H = _ols_var(e, p, p_max)
        sign, logdet = np.linalg.slogdet(H.T @ H / t_star)
        if sign <= 0:
            logdet = -np.inf
        out[p] = logdet + math.log(t_star) * p * N * N / t_star
    return out


def select_lag_bic(residuals, p_max=DEFAULT_P_MAX, p_min=0):
    """Lag order minimising BIC; ties go to the smaller order."""
    if p_max <= p_min:
        return p_min
    values = bic_values(residuals, p_max, p_min)
    best = p_min
    for p in range(p_min + 1, p_max + 1):
        if values[p] < values[best]:
            best = p
    return best


def check_stationarity(fit):
    if fit.p == 0:
        return True
    try:
        rho = linalg.spectral_radius(linalg.companion(fit.Phi))
    except NoConvergence:
        return False
    return rho < 1.0 - 1e-8


def gamma_e_infinity(fit):
    """Solve ``vec(G) = (I - sum_j Phi_j (x) Phi_j)^{-1} vec(Omega)``.

    For ``p = 1`` this is the stationary error variance. For ``p >= 2`` the
    same expression is evaluated as written, which ignores the cross-lag
    autocovariances of a VAR(p).
    """
    if not check_stationarity(fit):
        raise NonStationaryVar("fitted VAR is not stationary")
    N = fit.N
    A = np.eye(N * N)
    for Phi_j in fit.Phi:
        A -= linalg.kron(Phi_j, Phi_j)
    g = linalg.lu_solve(A, linalg.vec(fit.Omega))
    G = linalg.unvec(g, N)
    return 0.5 * (G + G.T)
