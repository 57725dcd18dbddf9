import numpy as np
import pytest

from mvgls.model import PanelData


def random_panel(rng, T=120, N=3, k=2, common=False, phi=None, scale=1.0):
    """Random panel with optional VAR(1) errors ``e_t = phi e_{t-1} + u_t``."""
    if common:
        F = rng.standard_normal((T, k))
        X = np.repeat(F[:, None, :], N, axis=1)
    else:
        X = rng.standard_normal((T, N, k))
    alpha = rng.normal(size=N)
    beta = rng.normal(size=(N, k))
    u = rng.standard_normal((T, N)) * scale
    if phi is not None:
        e = np.zeros_like(u)
        for t in range(T):
            e[t] = u[t] + (phi @ e[t - 1] if t else 0.0)
    else:
        e = u
    Y = alpha + np.einsum("tik,ik->ti", X, beta) + e
    return PanelData(Y, X, common_factors=common)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance report

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    marks = dict(report.user_properties)
    if "criterion" not in marks:
        return
    if report.when == "call" or report.outcome != "passed":
        _criteria[marks["criterion"]] = (report.outcome, marks.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcome, detail = _criteria[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {detail}")
