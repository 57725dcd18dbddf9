"""Quasi-differenced FGLS for a system with VAR(p) errors.

Observations ``t > p`` are quasi-differenced with the fitted VAR,
``Y_t - sum_j Phi_j Y_{t-j}`` (QD2 rows). The first ``p`` observations are
either rescaled by ``Omega^{1/2} Gamma^{-1/2}`` so their error variance is
``Omega`` (QD1 rows, Prais-Winsten) or dropped (Cochrane-Orcutt).

The weighted Gram ``sum_t Zqd_t' Omega^{-1} Zqd_t`` is built from lagged cross
moments of the augmented regressors instead of materialising ``Zqd``: with
``B_0 = I`` and ``B_j = -Phi_j``,

    sum_t Zqd_t' A Zqd_t = sum_{j,l} (B_j' A B_l) o sum_t z_{t-j} z_{t-l}'

where ``o`` scales block ``(m, n)`` of the moment matrix by entry ``(m, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import NotPositiveDefinite, SingularDesign
from .model import StackedModel
from .var_errors import VarFit, gamma_e_infinity

__all__ = ["QdModel", "GlsFit", "quasi_difference", "pw_fgls", "co_fgls"]


@dataclass
class QdModel:
    """Quasi-differenced observations. Rows ``t < split`` are QD1 rows."""

    Yqd: np.ndarray
    split: int
    C_qd1: np.ndarray
    C_qd2: np.ndarray
    gamma_e_inf: np.ndarray
    model: StackedModel = field(repr=False)
    var_fit: VarFit = field(repr=False)

    def zqd_block(self, t):
        """Transformed ``N x (N + K)`` design block for (0-based) period ``t``."""
        if t < self.split:
            return self.C_qd1 @ self.model.z_block(t)
        Z = self.model.z_block(t).copy()
        for j, Phi_j in enumerate(self.var_fit.Phi, start=1):
            Z -= Phi_j @ self.model.z_block(t - j)
        return Z


@dataclass
class GlsFit:
    kind: str
    kappa_hat: np.ndarray
    M_hat: np.ndarray
    effective_T: int
    var_fit: VarFit
    residuals: np.ndarray
    N: int
    k: int

    @property
    def alpha_hat(self):
        return self.kappa_hat[: self.N]

    @property
    def beta_hat(self):
        return self.kappa_hat[self.N :].reshape(self.N, self.k)


def _qd1_transform(fit):
    """``(C_qd1, Gamma_e_inf)``; identity when there is no dynamics."""
    if fit.p == 0:
        return np.eye(fit.N), fit.Omega.copy()
    gamma = gamma_e_infinity(fit)
    C = linalg.psd_sqrt(fit.Omega) @ linalg.psd_sqrt(gamma, inverse=True)
    return C, gamma


def quasi_difference(model, fit):
    p = fit.p
    Y = model.Y
    C1, gamma = _qd1_transform(fit)
    Yqd = Y.copy()
    if p:
        Yqd[:p] = Y[:p] @ C1.T
        for j, Phi_j in enumerate(fit.Phi, start=1):
            Yqd[p:] -= Y[p - j : model.T - j] @ Phi_j.T
    return QdModel(
        Yqd=Yqd,
        split=p,
        C_qd1=C1,
        C_qd2=np.eye(fit.N) - fit.phi_sum,
        gamma_e_inf=gamma,
        model=model,
        var_fit=fit,
    )


def _omega_inverse(Omega):
    try:
        return linalg.spd_inverse(Omega)
    except NotPositiveDefinite:
        raise SingularDesign("Omega is not positive definite") from None


def _accumulate(model, fit, with_qd1):
    """Weighted Gram and cross-product in the augmented layout."""
    z, Y, T = model.aug, model.Y, model.T
    N, k1 = model.N, model.k + 1
    p = fit.p
    A = _omega_inverse(fit.Omega)
    B = [np.eye(N)] + [-Phi_j for Phi_j in fit.Phi]

    zl = [z[p - j : T - j] for j in range(p + 1)]
    zf = [zj.reshape(T - p, N * k1) for zj in zl]
    Yqd2 = sum(Y[p - j : T - j] @ B[j].T for j in range(p + 1))
    V = Yqd2 @ A

    G = np.zeros((N, k1, N, k1))
    rhs = np.zeros((N, k1))
    for j in range(p + 1):
        rhs += np.einsum("tma,tm->ma", zl[j], V @ B[j])
        for l in range(j, p + 1):
            W = B[j].T @ A @ B[l]
            S = (zf[j].T @ zf[l]).reshape(N, k1, N, k1) * W[:, None, :, None]
            G += S
            if l != j:
                G += S.transpose(2, 3, 0, 1)

    if with_qd1 and p:
        C1, _ = _qd1_transform(fit)
        W1 = C1.T @ A @ C1
        z1 = z[:p].reshape(p, N * k1)
        G += (z1.T @ z1).reshape(N, k1, N, k1) * W1[:, None, :, None]
        rhs += np.einsum("tma,tm->ma", z[:p], (Y[:p] @ C1.T) @ A @ C1)

    G = G.reshape(N * k1, N * k1)
    return 0.5 * (G + G.T), rhs.reshape(-1)


def _fit(kind, model, fit):
    with_qd1 = kind == "PW"
    G, rhs = _accumulate(model, fit, with_qd1)
    try:
        L = linalg.cholesky(G, check_symmetric=False)
    except NotPositiveDefinite:
        raise SingularDesign("weighted Gram matrix is not positive definite") from None
    coef = linalg.cho_solve(L, rhs)
    n = model.T if with_qd1 else model.T - fit.p
    resid = model.Y - np.einsum("tma,ma->tm", model.aug, coef.reshape(model.N, -1))
    return GlsFit(
        kind=kind,
        kappa_hat=model.to_kappa(coef),
        M_hat=model.matrix_to_kappa(G / n),
        effective_T=n,
        var_fit=fit,
        residuals=resid,
        N=model.N,
        k=model.k,
    )


def pw_fgls(model, fit):
    """Prais-Winsten FGLS: keeps the first ``p`` rows through the QD1 rescaling.

    Raises
    ------
    NonStationaryVar
        When ``fit`` has ``p >= 1`` and is not stationary.
    SingularDesign
        When the weighted Gram matrix is not positive definite.
    """
    return _fit("PW", model, fit)


def co_fgls(model, fit):
    """Cochrane-Orcutt FGLS on the quasi-differenced rows ``t = p+1..T``."""
    return _fit("CO", model, fit)
