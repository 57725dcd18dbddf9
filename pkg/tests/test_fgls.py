import numpy as np
import pytest

from conftest import random_panel
from mvgls.errors import NonStationaryVar
from mvgls.fgls import co_fgls, pw_fgls, quasi_difference
from mvgls.model import PanelData, StackedModel, ols_fit
from mvgls.var_errors import VarFit, fit_var


def textbook_prais_winsten(y, x, phi):
    """Scalar AR(1) Prais-Winsten: rescale the first row by sqrt(1 - phi^2)."""
    w = np.sqrt(1.0 - phi**2)
    ys = np.concatenate([[w * y[0]], y[1:] - phi * y[:-1]])
    D = np.column_stack(
        [
            np.concatenate([[w], np.full(len(y) - 1, 1.0 - phi)]),
            np.concatenate([[w * x[0]], x[1:] - phi * x[:-1]]),
        ]
    )
    return np.linalg.lstsq(D, ys, rcond=None)[0]


def textbook_cochrane_orcutt(y, x, phi):
    ys = y[1:] - phi * y[:-1]
    D = np.column_stack([np.full(len(y) - 1, 1.0 - phi), x[1:] - phi * x[:-1]])
    return np.linalg.lstsq(D, ys, rcond=None)[0]


def dense_gls(qd, Omega, rows):
    """Materialise the transformed design and solve the weighted normal equations."""
    A = np.linalg.inv(Omega)
    Z = [qd.zqd_block(t) for t in rows]
    G = sum(z.T @ A @ z for z in Z)
    b = sum(z.T @ A @ qd.Yqd[t] for z, t in zip(Z, rows))
    return np.linalg.solve(G, b), G


@pytest.fixture
def scalar_panel(rng):
    T = 80
    x = rng.standard_normal(T)
    e = np.zeros(T)
    for t in range(T):
        e[t] = rng.standard_normal() + (0.6 * e[t - 1] if t else 0.0)
    y = 0.4 + 1.5 * x + e
    return PanelData(y[:, None], x[:, None, None])


class TestQuasiDifference:
    def test_p0_identity(self, rng):
        panel = random_panel(rng, T=30)
        m = StackedModel(panel)
        qd = quasi_difference(m, fit_var(ols_fit(m).residuals, 0))
        np.testing.assert_array_equal(qd.Yqd, panel.Y)
        np.testing.assert_array_equal(qd.zqd_block(3), m.z_block(3))

    def test_scalar_prais_winsten_rows(self, scalar_panel):
        m = StackedModel(scalar_panel)
        qd = quasi_difference(m, VarFit.from_params([[[0.5]]], [[1.7]]))
        y = scalar_panel.Y[:, 0]
        assert qd.C_qd1[0, 0] == pytest.approx(0.866025, abs=1e-6)
        assert qd.Yqd[0, 0] == pytest.approx(np.sqrt(0.75) * y[0], rel=1e-13)
        np.testing.assert_allclose(qd.Yqd[1:, 0], y[1:] - 0.5 * y[:-1], rtol=1e-13)
        np.testing.assert_allclose(qd.zqd_block(4)[0, 0], 0.5)

    def test_zero_phi(self, rng):
        panel = random_panel(rng, T=30, N=3)
        m = StackedModel(panel)
        Omega = np.array([[1.0, 0.2, 0.1], [0.2, 0.7, 0.0], [0.1, 0.0, 0.5]])
        qd = quasi_difference(m, VarFit.from_params([np.zeros((3, 3))], Omega))
        np.testing.assert_allclose(qd.C_qd1, np.eye(3), atol=1e-12)
        np.testing.assert_array_equal(qd.Yqd[1:], panel.Y[1:])

    def test_nonstationary(self, rng):
        m = StackedModel(random_panel(rng, T=30, N=2))
        with pytest.raises(NonStationaryVar):
            quasi_difference(m, VarFit.from_params([1.2 * np.eye(2)], np.eye(2)))


class TestScalarOracles:
    def test_pw(self, scalar_panel):
        m = StackedModel(scalar_panel)
        fit = fit_var(ols_fit(m).residuals, 1)
        phi = fit.Phi[0, 0, 0]
        got = pw_fgls(m, fit).kappa_hat
        np.testing.assert_allclose(got, textbook_prais_winsten(*_yx(scalar_panel), phi), rtol=1e-10)

    def test_co(self, scalar_panel):
        m = StackedModel(scalar_panel)
        fit = fit_var(ols_fit(m).residuals, 1)
        phi = fit.Phi[0, 0, 0]
        got = co_fgls(m, fit)
        np.testing.assert_allclose(got.kappa_hat, textbook_cochrane_orcutt(*_yx(scalar_panel), phi), rtol=1e-10)
        assert got.effective_T == scalar_panel.T - 1


def _yx(panel):
    return panel.Y[:, 0], panel.X[:, 0, 0]


class TestAgainstDenseDesign:
    @pytest.mark.parametrize("p", [1, 2])
    def test_structured_matches_dense(self, rng, p):
        Phi = np.array([[0.4, 0.1, 0.0], [0.05, 0.3, 0.1], [0.0, -0.1, 0.2]])
        panel = random_panel(rng, T=90, N=3, k=2, phi=Phi)
        m = StackedModel(panel)
        fit = fit_var(ols_fit(m).residuals, p)
        qd = quasi_difference(m, fit)
        kappa_pw, G_pw = dense_gls(qd, fit.Omega, range(m.T))
        kappa_co, G_co = dense_gls(qd, fit.Omega, range(p, m.T))
        pw, co = pw_fgls(m, fit), co_fgls(m, fit)
        np.testing.assert_allclose(pw.kappa_hat, kappa_pw, rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(co.kappa_hat, kappa_co, rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(pw.M_hat, G_pw / m.T, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(co.M_hat, G_co / (m.T - p), rtol=1e-10, atol=1e-12)


class TestProperties:
    def test_p0_pw_equals_co_bitwise(self, rng):
        panel = random_panel(rng, T=100, N=4, k=2)
        m = StackedModel(panel)
        fit = fit_var(ols_fit(m).residuals, 0)
        pw, co = pw_fgls(m, fit), co_fgls(m, fit)
        assert np.array_equal(pw.kappa_hat, co.kappa_hat)
        assert np.array_equal(pw.M_hat, co.M_hat)
        assert pw.effective_T == co.effective_T

    def test_p0_spherical_equals_ols(self, rng):
        panel = random_panel(rng, T=100, N=3, k=2)
        m = StackedModel(panel)
        fit = VarFit.from_params(np.zeros((0, 3, 3)), 2.5 * np.eye(3))
        np.testing.assert_allclose(pw_fgls(m, fit).kappa_hat, ols_fit(m).kappa_hat, rtol=1e-12)

    def test_sur_collapse_common_regressors(self, rng):
        panel = random_panel(rng, T=100, N=4, k=3, common=True)
        m = StackedModel(panel)
        B = rng.standard_normal((4, 4))
        fit = VarFit.from_params(np.zeros((0, 4, 4)), B @ B.T + 0.5 * np.eye(4))
        np.testing.assert_allclose(pw_fgls(m, fit).kappa_hat, ols_fit(m).kappa_hat, rtol=1e-8)

    @pytest.mark.parametrize("estimator", [pw_fgls, co_fgls])
    def test_equivariance(self, rng, estimator):
        panel = random_panel(rng, T=120, N=3, k=2, phi=0.3 * np.eye(3))
        m = StackedModel(panel)
        fit = fit_var(ols_fit(m).residuals, 1)
        delta = rng.standard_normal(m.n_params)
        shift = np.stack([m.z_block(t) @ delta for t in range(m.T)])
        m2 = StackedModel(PanelData(panel.Y + shift, panel.X))
        np.testing.assert_allclose(
            estimator(m2, fit).kappa_hat, estimator(m, fit).kappa_hat + delta, atol=1e-9
        )

    def test_m_hat_spd_and_scaling(self, rng):
        panel = random_panel(rng, T=120, N=3, k=2, phi=0.3 * np.eye(3))
        m = StackedModel(panel)
        fit = fit_var(ols_fit(m).residuals, 1)
        scaled = VarFit(fit.p, fit.Phi, 4.0 * fit.Omega, fit.sample_used)
        a, b = pw_fgls(m, fit), pw_fgls(m, scaled)
        assert np.linalg.eigvalsh(a.M_hat).min() > 0
        np.testing.assert_allclose(b.M_hat, a.M_hat / 4.0, rtol=1e-10)
        np.testing.assert_allclose(b.kappa_hat, a.kappa_hat, rtol=1e-10)

    def test_alpha_slots(self, rng):
        panel = random_panel(rng, T=60, N=3, k=2)
        m = StackedModel(panel)
        fit = pw_fgls(m, fit_var(ols_fit(m).residuals, 1))
        np.testing.assert_array_equal(fit.alpha_hat, fit.kappa_hat[:3])

    def test_whitening_of_gls_residuals(self):
        from mvgls.simulate import SimConfig, simulate_panel

        cfg = SimConfig(N=6, k=3, T=1600, phi_diag=0.3, reps=1, seed=5)
        norms = []
        for rep in range(10):
            m = StackedModel(simulate_panel(cfg, rep))
            var = fit_var(ols_fit(m).residuals, 1)
            gls = co_fgls(m, var)
            e = gls.residuals
            eps = e[1:] - e[:-1] @ var.Phi[0].T
            norms.append(np.abs(fit_var(eps, 1).Phi[0]).max())
        assert np.median(norms) < 5 / np.sqrt(1600)

    def test_co_close_to_pw_at_large_T(self):
        from mvgls.simulate import SimConfig, simulate_panel

        cfg = SimConfig(N=6, k=3, T=3200, phi_diag=0.3, reps=1, seed=3)
        gaps = []
        for rep in range(20):
            m = StackedModel(simulate_panel(cfg, rep))
            var = fit_var(ols_fit(m).residuals, 1)
            gaps.append(np.abs(co_fgls(m, var).kappa_hat - pw_fgls(m, var).kappa_hat).max())
        assert np.median(gaps) < 0.01
