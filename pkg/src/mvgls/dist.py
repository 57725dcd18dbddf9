"""Chi-squared and F reference distributions.

Survival functions are evaluated through the regularized incomplete gamma
and beta functions (power series plus modified Lentz continued fractions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NoConvergence

__all__ = ["RefDist", "chi2", "fdist", "chi2_sf", "f_sf", "quantile", "gammainc_upper", "betainc"]

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 20000


def _gamma_series(a, x):
    # lower regularized P(a, x); use for x < a + 1
    ap = a
    total = delta = 1.0 / a
    for _ in range(_MAXIT):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            break
    else:
        raise NoConvergence("incomplete gamma series")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a, x):
    # upper regularized Q(a, x); use for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NoConvergence("incomplete gamma continued fraction")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma ``Q(a, x)``."""
    if x < 0 or a <= 0:
        raise DomainError(f"gammainc_upper requires a > 0, x >= 0 (a={a}, x={x})")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def _beta_cf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NoConvergence("incomplete beta continued fraction")


def betainc(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0 or not 0.0 <= x <= 1.0:
        raise DomainError(f"betainc requires a, b > 0 and 0 <= x <= 1 (x={x})")
    if x == 0.0 or x == 1.0:
        return x
    log_bt = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    bt = math.exp(log_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _beta_cf(a, b, x) / a
    return 1.0 - bt * _beta_cf(b, a, 1.0 - x) / b


def chi2_sf(x, df):
    if x < 0:
        raise DomainError(f"chi2_sf requires x >= 0, got {x}")
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    return gammainc_upper(0.5 * df, 0.5 * x)


def f_sf(x, d1, d2):
    if x < 0:
        raise DomainError(f"f_sf requires x >= 0, got {x}")
    if d1 < 1 or d2 < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if x == 0:
        return 1.0
    return betainc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))


@dataclass(frozen=True)
class RefDist:
    """A chi-squared or F reference law with integer degrees of freedom."""

    kind: str
    df1: int
    df2: int | None = None

    def __post_init__(self):
        if self.kind not in ("chi2", "F"):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if self.df1 < 1 or (self.kind == "F" and (self.df2 is None or self.df2 < 1)):
            raise DomainError("degrees of freedom must be >= 1")

    def sf(self, x):
        if self.kind == "chi2":
            return chi2_sf(x, self.df1)
        return f_sf(x, self.df1, self.df2)

    def ppf(self, p):
        return quantile(self, p)

    def __str__(self):
        if self.kind == "chi2":
            return f"chi2({self.df1})"
        return f"F({self.df1}, {self.df2})"


def chi2(df):
    return RefDist("chi2", int(df))


def fdist(d1, d2):
    return RefDist("F", int(d1), int(d2))


def quantile(dist, p, maxiter=200):
    """Return ``x`` with ``dist.sf(x) == 1 - p`` by bracketing bisection."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    target = 1.0 - p
    lo, hi = 0.0, 1.0
    while dist.sf(hi) > target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise NoConvergence("could not bracket the quantile")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if dist.sf(mid) > target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    if abs(dist.sf(x) - target) > 1e-9:
        raise NoConvergence(f"bisection did not reach 1e-9 (p={p}, {dist})")
    return x
