"""Stacked multivariate regression ``Y_t = alpha + X_t beta + e_t``.

Parameters are laid out as ``kappa = [alpha_1..alpha_N, beta_1'..beta_N']'``.
Internally most computations use an *augmented* equation-major layout in
which equation ``m`` owns the ``k + 1`` consecutive slots ``[1, x_{m,t}']``;
``StackedModel.perm`` maps that layout onto ``kappa``.

The design matrix ``Z`` (``TN x (N + K)``) is never formed. Gram matrices are
accumulated per equation with ``einsum`` over ``t``; numpy reduces the time
axis sequentially in index order, so results are bit-stable for a given
input and thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InsufficientSample, SingularDesign

__all__ = ["PanelData", "StackedModel", "OlsFit", "build_stacked", "ols_fit"]


@dataclass
class PanelData:
    """Observations for ``N`` equations over ``T`` periods.

    Attributes
    ----------
    Y : ndarray, shape (T, N)
    X : ndarray, shape (T, N, k)
        ``X[t, i]`` is the regressor vector ``x_{i,t}``.
    common_factors : bool
        True when ``x_{i,t}`` is the same for every equation (factor models).
    """

    Y: np.ndarray
    X: np.ndarray
    common_factors: bool = False
    names: list[str] | None = None
    factor_names: list[str] | None = None

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.float64)
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.Y.ndim != 2:
            raise DimensionMismatch(f"Y must be T x N, got shape {self.Y.shape}")
        if self.X.ndim == 2:
            self.X = self.X[:, :, None]
        if self.X.ndim != 3 or self.X.shape[:2] != self.Y.shape:
            raise DimensionMismatch(
                f"X must be T x N x k matching Y {self.Y.shape}, got {self.X.shape}"
            )
        if not (np.all(np.isfinite(self.Y)) and np.all(np.isfinite(self.X))):
            raise DimensionMismatch("panel contains non-finite values")
        if self.k < 1:
            raise DimensionMismatch("at least one regressor per equation is required")
        if self.T < self.k + 1:
            raise InsufficientSample(f"T={self.T} too small for k={self.k} regressors")
        if self.common_factors and not np.all(self.X == self.X[:, :1, :]):
            raise DimensionMismatch("common_factors=True but regressors differ across equations")

    @classmethod
    def from_factors(cls, Y, F, names=None, factor_names=None):
        """Panel in which every equation shares the factor matrix ``F`` (T x k)."""
        Y = np.asarray(Y, dtype=np.float64)
        F = np.asarray(F, dtype=np.float64)
        if F.ndim == 1:
            F = F[:, None]
        if F.shape[0] != Y.shape[0]:
            raise DimensionMismatch("Y and F must have the same number of rows")
        X = np.broadcast_to(F[:, None, :], (F.shape[0], Y.shape[1], F.shape[1])).copy()
        return cls(Y, X, common_factors=True, names=names, factor_names=factor_names)

    @property
    def T(self):
        return self.Y.shape[0]

    @property
    def N(self):
        return self.Y.shape[1]

    @property
    def k(self):
        return self.X.shape[2]

    @property
    def factors(self):
        """The shared ``T x k`` factor matrix of a common-factor panel."""
        if not self.common_factors:
            raise DimensionMismatch("panel does not have common factors")
        return self.X[:, 0, :]


@dataclass
class StackedModel:
    panel: PanelData
    aug: np.ndarray = field(init=False, repr=False)
    perm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        T, N, k = self.panel.T, self.panel.N, self.panel.k
        self.aug = np.empty((T, N, k + 1))
        self.aug[:, :, 0] = 1.0
        self.aug[:, :, 1:] = self.panel.X
        m = np.repeat(np.arange(N), k + 1)
        a = np.tile(np.arange(k + 1), N)
        self.perm = np.where(a == 0, m, N + m * k + a - 1)

    @property
    def T(self):
        return self.panel.T

    @property
    def N(self):
        return self.panel.N

    @property
    def k(self):
        return self.panel.k

    @property
    def K(self):
        return self.panel.N * self.panel.k

    @property
    def Y(self):
        return self.panel.Y

    @property
    def n_params(self):
        return self.N + self.K

    def z_block(self, t):
        """The ``N x (N + K)`` block ``Z_t = [I_N, X_t]`` (0-based ``t``)."""
        N, k = self.N, self.k
        Z = np.zeros((N, N + self.K))
        Z[:, :N] = np.eye(N)
        for i in range(N):
            Z[i, N + i * k : N + (i + 1) * k] = self.panel.X[t, i]
        return Z

    def to_kappa(self, v_aug):
        """Reorder an augmented-layout vector (or last axis) into kappa order."""
        v_aug = np.asarray(v_aug)
        out = np.empty_like(v_aug)
        out[..., self.perm] = v_aug
        return out

    def matrix_to_kappa(self, M_aug):
        out = np.empty_like(M_aug)
        out[np.ix_(self.perm, self.perm)] = M_aug
        return out

    def from_kappa(self, kappa):
        return np.asarray(kappa)[..., self.perm]


@dataclass
class OlsFit:
    """Equation-by-equation OLS on the stacked system.

    ``M_hat`` is ``Z'Z / T`` and ``w_hats[t]`` is the score ``Z_t' e_t``, both in
    kappa order.
    """

    kappa_hat: np.ndarray
    residuals: np.ndarray
    M_hat: np.ndarray
    w_hats: np.ndarray
    N: int
    k: int

    @property
    def alpha_hat(self):
        return self.kappa_hat[: self.N]

    @property
    def beta_hat(self):
        return self.kappa_hat[self.N :].reshape(self.N, self.k)


def build_stacked(panel):
    return StackedModel(panel)


def _solve_blocks(G, b):
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise SingularDesign("per-equation Gram matrix is not positive definite") from None
    y = np.linalg.solve(L, b[..., None])
    return np.linalg.solve(np.swapaxes(L, -1, -2), y)[..., 0]


def ols_fit(model):
    """OLS with an intercept for every equation of ``model``."""
    if isinstance(model, PanelData):
        model = StackedModel(model)
    aug, Y, T = model.aug, model.Y, model.T
    G = np.einsum("tma,tmb->mab", aug, aug)
    rhs = np.einsum("tma,tm->ma", aug, Y)
    coef = _solve_blocks(G, rhs)
    resid = Y - np.einsum("tma,ma->tm", aug, coef)
    N, k1 = coef.shape
    M_aug = np.zeros((N * k1, N * k1))
    for m in range(N):
        M_aug[m * k1 : (m + 1) * k1, m * k1 : (m + 1) * k1] = G[m] / T
    w_aug = (aug * resid[:, :, None]).reshape(T, N * k1)
    return OlsFit(
        kappa_hat=model.to_kappa(coef.reshape(-1)),
        residuals=resid,
        M_hat=model.matrix_to_kappa(M_aug),
        w_hats=model.to_kappa(w_aug),
        N=model.N,
        k=model.k,
    )
