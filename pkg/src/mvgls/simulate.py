"""Monte Carlo size/power experiments for the five intercept tests.

Each replication draws its own random streams from ``(seed, rep_id, purpose)``
via numpy's ``SeedSequence`` spawn keys, so results do not depend on how
replications are distributed across worker processes.
"""

from __future__ import annotations

import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import AllReplicationsFailed, DomainError, MvglsError
from .fgls import co_fgls, pw_fgls
from .inference import TEST_NAMES, grs, har_wald, wald_alpha
from .model import PanelData, StackedModel, ols_fit
from .var_errors import fit_var, select_lag_bic

__all__ = [
    "SimConfig",
    "ReplicationResult",
    "RejectionTable",
    "rng_stream",
    "gen_omega",
    "gen_panel",
    "run_replication",
    "run_experiment",
]

logger = logging.getLogger(__name__)

LEVELS = (0.10, 0.05, 0.01)

_OMEGA, _FACTORS, _ERRORS = 0, 1, 2
_FIXED_KEY = 2**32  # rep slot used for a design-wide Omega


@dataclass(frozen=True)
class SimConfig:
    """Design of one Monte Carlo cell.

    ``phi_diag`` is the common diagonal of ``Phi_1`` (0 gives serially
    independent errors, the ``hetero`` case). ``p_min``/``p_max`` bound the BIC lag search; ``fixed_p``
    bypasses the search altogether. ``fixed_omega`` draws the variances once
    for the whole cell instead of once per replication.
    """

    N: int = 6
    k: int = 3
    T: int = 200
    reps: int = 1000
    rho: float = 0.3
    phi_diag: float = 0.0
    x_ar: float = 0.5
    alpha_mode: str = "null"
    sigma_low: float = 0.5
    sigma_high: float = 1.0
    seed: int = 0
    p_max: int = 5
    p_min: int = 1
    fixed_p: int | None = None
    fixed_omega: bool = False
    levels: tuple = LEVELS
    tests: tuple = TEST_NAMES

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not 0.0 <= self.phi_diag < 1.0:
            raise DomainError("phi_diag must lie in [0, 1)")
        if abs(self.x_ar) >= 1.0:
            raise DomainError("|x_ar| must be < 1")
        if self.N < 1 or self.k < 1:
            raise DomainError("N and k must be positive")
        if self.T <= self.N * self.k + self.N + 5:
            raise DomainError(f"T={self.T} too small for N={self.N}, k={self.k}")
        if self.alpha_mode not in ("null", "alternative"):
            raise DomainError(f"unknown alpha_mode {self.alpha_mode!r}")
        if not 0 <= self.p_min <= self.p_max:
            raise DomainError("need 0 <= p_min <= p_max")
        if not 0.0 < self.sigma_low <= self.sigma_high:
            raise DomainError("need 0 < sigma_low <= sigma_high")
        if not -1.0 / max(self.N - 1, 1) < self.rho < 1.0:
            raise DomainError("rho outside the positive-definite range")
        unknown = set(self.tests) - set(TEST_NAMES)
        if unknown:
            raise DomainError(f"unknown tests {sorted(unknown)}")

    @property
    def case(self):
        return "hetero" if self.phi_diag == 0.0 else "hetero_auto"


def rng_stream(seed, rep_id, purpose):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(rep_id), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def gen_omega(N, rho, rng, low=0.5, high=1.0):
    """``Omega_ii = s_i^2``, ``Omega_ij = rho s_i s_j`` with ``s_i^2 ~ U(low, high)``."""
    sig2 = rng.uniform(low, high, size=N)
    s = np.sqrt(sig2)
    omega = rho * np.outer(s, s)
    np.fill_diagonal(omega, sig2)
    return omega


def _ar1(shocks, coef):
    # y_t = coef * y_{t-1} + shock_t from y_0 = 0
    if coef == 0.0:
        return shocks
    return lfilter([1.0], [1.0, -coef], shocks, axis=0)


def gen_panel(cfg, omega, rng, rng_errors=None):
    """Simulate a common-factor panel.

    Factors follow ``x_t = x_ar x_{t-1} + eta_t`` and errors
    ``e_t = phi_diag e_{t-1} + u_t`` with ``u_t ~ N(0, omega)``, both started
    at zero with no burn-in. Slopes are all one; intercepts are zero, or
    ``alpha_1 = 0.1`` under the alternative.
    """
    rng_errors = rng if rng_errors is None else rng_errors
    T, N, k = cfg.T, cfg.N, cfg.k
    x = _ar1(rng.standard_normal((T, k)), cfg.x_ar)
    u = rng_errors.standard_normal((T, N)) @ np.linalg.cholesky(omega).T
    e = _ar1(u, cfg.phi_diag)
    alpha = np.zeros(N)
    if cfg.alpha_mode == "alternative":
        alpha[0] = 0.1
    Y = alpha + x.sum(axis=1, keepdims=True) + e
    return PanelData.from_factors(Y, x)


@dataclass
class ReplicationResult:
    rep_id: int
    lag: int | None
    statistics: dict = field(default_factory=dict)
    p_values: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


def _replication_omega(cfg, rep_id):
    key = _FIXED_KEY if cfg.fixed_omega else rep_id
    return gen_omega(cfg.N, cfg.rho, rng_stream(cfg.seed, key, _OMEGA), cfg.sigma_low, cfg.sigma_high)


def simulate_panel(cfg, rep_id):
    """The panel used by replication ``rep_id``."""
    omega = _replication_omega(cfg, rep_id)
    return gen_panel(
        cfg,
        omega,
        rng_stream(cfg.seed, rep_id, _FACTORS),
        rng_stream(cfg.seed, rep_id, _ERRORS),
    )


def analyse_panel(panel, p_max=5, p_min=0, fixed_p=None, tests=TEST_NAMES):
    """Run the requested tests of ``H0: alpha = 0`` on one panel.

    Returns ``(lag, results, failures)`` where ``results`` maps test names to
    :class:`TestResult` and ``failures`` lists ``"<test>:<ErrorName>"`` tags.
    """
    model = StackedModel(panel)
    ols = ols_fit(model)
    results, failures = {}, []
    lag = None
    fgls_tests = [t for t in ("WaldPW", "WaldCO") if t in tests]
    if fgls_tests:
        lag = fixed_p if fixed_p is not None else select_lag_bic(ols.residuals, p_max, p_min)
        var = fit_var(ols.residuals, lag)
        for name, estimator in (("WaldPW", pw_fgls), ("WaldCO", co_fgls)):
            if name not in tests:
                continue
            try:
                results[name] = wald_alpha(estimator(model, var), name=name)
            except MvglsError as exc:
                failures.append(f"{name}:{type(exc).__name__}")
    if "WaldHAR" in tests:
        try:
            results["WaldHAR"] = har_wald(ols, panel.T)
        except MvglsError as exc:
            failures.append(f"WaldHAR:{type(exc).__name__}")
    for name, corrected in (("GRS", False), ("GRS_KS", True)):
        if name not in tests:
            continue
        try:
            results[name] = grs(panel, corrected=corrected)
        except MvglsError as exc:
            failures.append(f"{name}:{type(exc).__name__}")
    return lag, results, failures


def run_replication(cfg, rep_id):
    panel = simulate_panel(cfg, rep_id)
    try:
        lag, results, failures = analyse_panel(
            panel, cfg.p_max, cfg.p_min, cfg.fixed_p, cfg.tests
        )
    except MvglsError as exc:
        return ReplicationResult(rep_id, None, failures=[f"all:{type(exc).__name__}"])
    return ReplicationResult(
        rep_id,
        lag,
        statistics={k: v.statistic for k, v in results.items()},
        p_values={k: v.p_value for k, v in results.items()},
        failures=failures,
    )


@dataclass
class RejectionTable:
    """Rejection rates per test and level, with bookkeeping.

    ``rates[test][level]`` is rejections / successful replications for that
    test (rejection means ``p_value < level``).
    """

    config: SimConfig
    rates: dict
    successes: dict
    failures: dict
    lag_hist: dict

    @property
    def failure_total(self):
        return sum(self.failures.values())

    def rate(self, test, level):
        return self.rates[test][level]

    def format(self):
        levels = self.config.levels
        head = "".join(f"{t:>24}" for t in self.config.tests)
        sub = "".join("".join(f"{lv * 100:>7.0f}%" for lv in levels) for _ in self.config.tests)
        row = "".join(
            "".join(f"{self.rates[t][lv]:>8.3f}" for lv in levels) for t in self.config.tests
        )
        c = self.config
        label = f"N={c.N}/K={c.k} T={c.T}"
        return f"{'':<20}{head}\n{'':<20}{sub}\n{label:<20}{row}"


def _worker(args):
    cfg, ids = args
    return [run_replication(cfg, i) for i in ids]


def _worker_count(workers):
    if workers is None:
        workers = int(os.environ.get("MVGLS_WORKERS", "1") or 1)
    return max(1, int(workers))


def collect(cfg, results):
    """Aggregate replication results (in ``rep_id`` order) into a table."""
    results = sorted(results, key=lambda r: r.rep_id)
    rejections = {t: Counter() for t in cfg.tests}
    successes = Counter()
    failures = Counter()
    lags = Counter()
    for res in results:
        if res.lag is not None:
            lags[res.lag] += 1
        for tag in res.failures:
            failures[tag.split(":", 1)[1]] += 1
        for t, pv in res.p_values.items():
            successes[t] += 1
            for lv in cfg.levels:
                if pv < lv:
                    rejections[t][lv] += 1
    if not any(successes.values()):
        raise AllReplicationsFailed(f"all {len(results)} replications failed: {dict(failures)}")
    rates = {
        t: {lv: (rejections[t][lv] / successes[t] if successes[t] else float("nan")) for lv in cfg.levels}
        for t in cfg.tests
    }
    return RejectionTable(
        config=cfg,
        rates=rates,
        successes={t: successes[t] for t in cfg.tests},
        failures=dict(failures),
        lag_hist=dict(sorted(lags.items())),
    )


def run_experiment(cfg, workers=None, progress=None):
    """Run ``cfg.reps`` replications and tabulate rejection rates.

    The output is identical for any ``workers`` value.
    """
    workers = _worker_count(workers)
    ids = list(range(cfg.reps))
    if workers == 1:
        results = []
        for i in ids:
            results.append(run_replication(cfg, i))
            if progress is not None:
                progress(i + 1, cfg.reps)
    else:
        chunks = [ids[i::workers * 4] for i in range(workers * 4)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for batch in pool.map(_worker, [(cfg, c) for c in chunks if c]) for r in batch]
    logger.debug("cell %s done", asdict(cfg))
    return collect(cfg, results)
