import math

import numpy as np
import pytest
from scipy import stats

from mvgls.dist import RefDist, betainc, chi2, chi2_sf, f_sf, fdist, gammainc_upper, quantile
from mvgls.errors import DomainError


def test_chi2_sf_at_zero():
    for df in (1, 2, 7, 30):
        assert chi2_sf(0.0, df) == 1.0


def test_chi2_df2_is_exponential():
    assert chi2_sf(2 * math.log(2.0), 2) == pytest.approx(0.5, abs=1e-12)
    for x in np.linspace(0.01, 60.0, 97):
        assert abs(chi2_sf(x, 2) - math.exp(-x / 2)) <= 1e-12


def test_f22_closed_form():
    assert f_sf(1.0, 2, 2) == pytest.approx(0.5, abs=1e-12)
    for x in np.linspace(0.0, 50.0, 101):
        assert abs(f_sf(x, 2, 2) - 1.0 / (1.0 + x)) <= 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        chi2_sf(-1.0, 3)
    with pytest.raises(DomainError):
        f_sf(-0.1, 2, 3)
    with pytest.raises(DomainError):
        quantile(chi2(3), 1.0)


@pytest.mark.parametrize("df", [1, 2, 3, 6, 25, 75])
def test_chi2_against_scipy(df):
    for x in (0.05, 0.7, df * 0.5, df, df + 3.0, 3.0 * df + 10):
        assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), abs=1e-12)


@pytest.mark.parametrize("d1,d2", [(1, 1), (6, 191), (25, 172), (6, 3191), (3, 10)])
def test_f_against_scipy(d1, d2):
    for x in (0.01, 0.5, 1.0, 2.146, 4.0, 15.0):
        assert f_sf(x, d1, d2) == pytest.approx(stats.f.sf(x, d1, d2), abs=1e-12)


def test_incomplete_functions():
    assert gammainc_upper(1.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-14)
    assert betainc(1.0, 1.0, 0.3) == pytest.approx(0.3, abs=1e-14)
    assert betainc(2.0, 3.0, 0.0) == 0.0


def test_chi2_critical_values():
    # 5% critical value of chi2(1) is 1.959964^2
    assert quantile(chi2(1), 0.95) == pytest.approx(3.841459, abs=1e-6)
    assert quantile(chi2(6), 0.95) == pytest.approx(12.5916, abs=1e-4)
    assert quantile(chi2(25), 0.95) == pytest.approx(37.6525, abs=1e-4)


def test_f_critical_value():
    q = quantile(fdist(6, 191), 0.95)
    assert abs(q - 2.146) <= 0.002
    assert f_sf(q, 6, 191) == pytest.approx(0.05, abs=1e-9)


@pytest.mark.parametrize("p", [0.9, 0.95, 0.99])
def test_quantile_inverts_sf(p):
    for df in range(1, 31):
        d = chi2(df)
        q = quantile(d, p)
        assert abs(d.sf(q) - (1 - p)) <= 1e-8
    assert quantile(chi2(4), 0.99) > quantile(chi2(4), 0.95)


def test_sf_monotone():
    xs = np.linspace(0, 40, 400)
    for d in (chi2(3), fdist(4, 50)):
        vals = [d.sf(x) for x in xs]
        assert np.all(np.diff(vals) <= 0)


def test_f_to_chi2_limit():
    for d1 in (1, 6, 25):
        qf = d1 * quantile(fdist(d1, 10**6), 0.95)
        qc = quantile(chi2(d1), 0.95)
        assert abs(qf - qc) / qc < 0.01


def test_refdist_validation():
    with pytest.raises(DomainError):
        RefDist("t", 3)
    with pytest.raises(DomainError):
        RefDist("F", 3, None)
    assert str(fdist(6, 191)) == "F(6, 191)"
