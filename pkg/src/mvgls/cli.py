"""Command-line interface: ``mvgls simulate | test | fit``."""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import os
import secrets
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .errors import AllReplicationsFailed, MvglsError
from .fgls import co_fgls, pw_fgls
from .inference import bartlett_lag, grs, har_wald, newey_west_lrv, wald_alpha
from .model import PanelData, StackedModel, ols_fit
from .simulate import SimConfig, run_experiment
from .var_errors import DEFAULT_P_MAX, fit_var, select_lag_bic

logger = logging.getLogger("mvgls")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED, EXIT_GRS_INFEASIBLE = 0, 2, 3, 4

CSV_FIELDS = ["case", "N", "k", "T", "test", "level", "rate", "reps", "failures", "seed"]
CASES = {"hetero": 0.0, "hetero_auto": 0.3}
PRESETS = {"table1": ["hetero"], "table2": ["hetero_auto"]}
GRID_T = (200, 400, 800, 1600, 3200)
GRID_CELLS = ("N6K3", "N6K5", "N25K3", "N25K5")


class ConfigError(Exception):
    pass


def _fmt(x):
    return f"{x:.17g}"


# ---------------------------------------------------------------- simulate


def parse_cell(label):
    label = label.strip().upper()
    try:
        n_part, k_part = label[1:].split("K")
        return int(n_part), int(k_part)
    except ValueError:
        raise ConfigError(f"bad cell label {label!r}; expected e.g. N6K3") from None


def _int_list(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def load_config_file(path):
    """Flat ``key = value`` file; ``#`` comments. Keys mirror the long flags."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[mvgls]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    # configparser lowercases keys; the sample-size key is spelled ``T`` on the command line
    return {
        ("T" if k == "t" else k.replace("-", "_")): v.strip().strip('"').strip("'")
        for k, v in parser["mvgls"].items()
    }


def _simulate_settings(args):
    settings = {}
    if args.config:
        settings.update(load_config_file(args.config))
    for key in ("preset", "cells", "T", "reps", "seed", "p_max", "p_min", "alternative", "case", "out", "workers", "fixed_omega"):
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    return settings


def build_grid(settings):
    """List of :class:`SimConfig` for the requested grid."""
    try:
        reps = int(settings.get("reps", 1000))
        seed = int(settings["seed"])
        p_max = int(settings.get("p_max", DEFAULT_P_MAX))
        p_min = int(settings.get("p_min", 1))
        T_values = _int_list(settings["T"]) if "T" in settings else list(GRID_T)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if reps < 1:
        raise ConfigError("--reps must be at least 1")
    if "case" in settings:
        cases = [c.strip() for c in str(settings["case"]).split(",")]
    elif "preset" in settings:
        if settings["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {settings['preset']!r}")
        cases = PRESETS[settings["preset"]]
    else:
        cases = list(CASES)
    for c in cases:
        if c not in CASES:
            raise ConfigError(f"unknown case {c!r}; choose from {sorted(CASES)}")
    cells = settings.get("cells", ",".join(GRID_CELLS))
    cells = [parse_cell(c) for c in str(cells).split(",") if c.strip()]
    alternative = str(settings.get("alternative", "false")).lower() in ("1", "true", "yes")
    fixed_omega = str(settings.get("fixed_omega", "false")).lower() in ("1", "true", "yes")
    grid = []
    try:
        for case in cases:
            for N, k in cells:
                for T in T_values:
                    grid.append(
                        SimConfig(
                            N=N, k=k, T=T, reps=reps, seed=seed, phi_diag=CASES[case],
                            p_max=p_max, p_min=p_min, fixed_omega=fixed_omega,
                            alpha_mode="alternative" if alternative else "null",
                        )
                    )
    except MvglsError as exc:
        raise ConfigError(str(exc)) from None
    return grid


def table_rows(table):
    c = table.config
    rows = []
    for test in c.tests:
        for level in c.levels:
            ok = table.successes[test]
            rows.append(
                {
                    "case": c.case, "N": c.N, "k": c.k, "T": c.T, "test": test,
                    "level": _fmt(level), "rate": _fmt(table.rates[test][level]),
                    "reps": ok, "failures": c.reps - ok, "seed": c.seed,
                }
            )
    return rows


def write_results_csv(tables, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for table in tables:
            writer.writerows(table_rows(table))


def read_results_csv(path):
    """``{(case, N, k, T): {test: {level: rate}}}`` from a results CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["case"], int(row["N"]), int(row["k"]), int(row["T"]))
            out.setdefault(key, {}).setdefault(row["test"], {})[float(row["level"])] = float(row["rate"])
    return out


def render_tables(tables):
    """Text layout with tests as column groups and levels as sub-columns, one block per case."""
    lines = []
    for case in CASES:
        block = [t for t in tables if t.config.case == case]
        if not block:
            continue
        tests = block[0].config.tests
        levels = block[0].config.levels
        lines.append(f"Rejection rates, H0: alpha = 0 ({case})")
        lines.append(" " * 16 + "".join(f"{t:^24}" for t in tests))
        lines.append(" " * 16 + "".join("".join(f"{lv * 100:>7.0f}% " for lv in levels) for _ in tests))
        current = None
        for table in block:
            c = table.config
            if (c.N, c.k) != current:
                current = (c.N, c.k)
                lines.append(f"N={c.N}/K={c.k}")
            cells = "".join(
                "".join(f"{table.rates[t][lv]:>8.3f} " for lv in levels) for t in tests
            )
            lines.append(f"  T={c.T:<12}{cells}")
        lines.append("")
    return "\n".join(lines)


def _manifest(command, settings, seed, started, extra=None, inputs=()):
    h = hashlib.sha256()
    h.update(json.dumps(settings, sort_keys=True, default=str).encode())
    for path in inputs:
        h.update(Path(path).read_bytes())
    doc = {
        "command": command,
        "config": settings,
        "input_hash": "sha256:" + h.hexdigest(),
        "seed": seed,
        "wall_time_s": round(time.time() - started, 3),
        "version": __version__,
    }
    if extra:
        doc.update(extra)
    return doc


def cmd_simulate(args):
    started = time.time()
    try:
        settings = _simulate_settings(args)
        if "seed" not in settings:
            settings["seed"] = secrets.randbits(63)
            logger.info("no seed given; using %d", settings["seed"])
        grid = build_grid(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    workers = settings.get("workers")
    out = Path(settings.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    tables = []
    try:
        for cfg in grid:
            logger.info("running %s N=%d k=%d T=%d reps=%d", cfg.case, cfg.N, cfg.k, cfg.T, cfg.reps)
            tables.append(run_experiment(cfg, workers=workers))
    except AllReplicationsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    write_results_csv(tables, out / "results.csv")
    text = render_tables(tables)
    (out / "table.txt").write_text(text + "\n", encoding="utf-8")
    manifest = _manifest(
        "simulate", settings, int(settings["seed"]), started,
        extra={
            "cells": [asdict(t.config) for t in tables],
            "lag_hist": [{str(p): n for p, n in t.lag_hist.items()} for t in tables],
            "failure_kinds": [t.failures for t in tables],
        },
    )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- data commands


def load_panel(returns_path, factors_path):
    """Inner-join two CSV files on their ``date`` column into a factor panel."""
    try:
        R = pd.read_csv(returns_path, float_precision="round_trip")
        F = pd.read_csv(factors_path, float_precision="round_trip")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot parse input: {exc}") from None
    for name, df in (("returns", R), ("factors", F)):
        if df.columns.size < 2 or df.columns[0].strip().lower() != "date":
            raise ConfigError(f"{name} CSV must start with a 'date' column and have data columns")
    R = R.rename(columns={R.columns[0]: "date"})
    F = F.rename(columns={F.columns[0]: "date"})
    R["date"] = R["date"].astype(str).str.strip()
    F["date"] = F["date"].astype(str).str.strip()
    df = R.merge(F, on="date", how="inner", suffixes=("", "_factor"))
    if df.empty:
        raise ConfigError("returns and factors share no dates")
    if _is_integer_index(df["date"]):
        order = np.argsort(df["date"].astype(np.int64).to_numpy(), kind="stable")
    else:
        order = np.argsort(df["date"].to_numpy(), kind="stable")
    df = df.iloc[order]
    r_cols = [c for c in R.columns if c != "date"]
    f_cols = [c if c not in r_cols else c + "_factor" for c in F.columns if c != "date"]
    try:
        Y = df[r_cols].to_numpy(dtype=np.float64)
        X = df[f_cols].to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise ConfigError(f"non-numeric data: {exc}") from None
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
        raise ConfigError("missing or non-finite values after the join")
    try:
        return PanelData.from_factors(Y, X, names=r_cols, factor_names=[c.removesuffix("_factor") for c in f_cols])
    except MvglsError as exc:
        raise ConfigError(str(exc)) from None


def _is_integer_index(col):
    return bool(col.str.fullmatch(r"[+-]?\d+").all())


def _resolve_lag(args, residuals):
    if args.p == "auto":
        return select_lag_bic(residuals, args.p_max, args.p_min), "bic"
    try:
        return int(args.p), "fixed"
    except ValueError:
        raise ConfigError(f"--p must be 'auto' or an integer, got {args.p!r}") from None


def run_tests(panel, p="auto", p_max=DEFAULT_P_MAX, p_min=0):
    """All five intercept tests on ``panel``; returns ``(lag, results, warnings)``."""
    model = StackedModel(panel)
    ols = ols_fit(model)
    lag = select_lag_bic(ols.residuals, p_max, p_min) if p == "auto" else int(p)
    results, warnings = [], []
    for name, est in (("WaldPW", pw_fgls), ("WaldCO", co_fgls)):
        try:
            results.append(wald_alpha(est(model, fit_var(ols.residuals, lag)), name=name))
        except MvglsError as exc:
            warnings.append(f"{name} skipped: {type(exc).__name__}: {exc}")
    try:
        results.append(har_wald(ols, panel.T))
    except MvglsError as exc:
        warnings.append(f"WaldHAR skipped: {type(exc).__name__}: {exc}")
    if panel.T <= panel.N + panel.k + 1:
        warnings.append(f"GRS skipped: T={panel.T} <= N + k + 1 = {panel.N + panel.k + 1}")
    else:
        for corrected in (False, True):
            try:
                results.append(grs(panel, corrected=corrected))
            except MvglsError as exc:
                warnings.append(f"{'GRS_KS' if corrected else 'GRS'} skipped: {type(exc).__name__}: {exc}")
    return lag, results, warnings


def cmd_test(args):
    started = time.time()
    try:
        panel = load_panel(args.returns, args.factors)
        ols = ols_fit(panel)
        lag, how = _resolve_lag(args, ols.residuals)
        lag, results, warnings = run_tests(panel, lag, args.p_max, args.p_min)
    except (ConfigError, MvglsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in warnings:
        logger.warning(w)
        print(f"warning: {w}", file=sys.stderr)
    print(f"T={panel.T} N={panel.N} k={panel.k} lag={lag} ({how})")
    print(f"{'test':<10}{'statistic':>14}{'df':>12}{'p-value':>12}")
    for r in results:
        df = ",".join(str(d) for d in r.df)
        print(f"{r.name:<10}{r.statistic:>14.6f}{df:>12}{r.p_value:>12.6f}")
    report = {
        "tests": [{"name": r.name, "statistic": r.statistic, "df": list(r.df), "p_value": r.p_value} for r in results],
        "fit": {"T": panel.T, "N": panel.N, "k": panel.k, "lag": lag, "lag_selection": how},
        "warnings": warnings,
    }
    _write_reports(args, report, started, "test")
    grs_skipped = not any(r.name == "GRS" for r in results)
    return EXIT_GRS_INFEASIBLE if grs_skipped else EXIT_OK


def fit_report(panel, estimator, p="auto", p_max=DEFAULT_P_MAX, p_min=0):
    model = StackedModel(panel)
    ols = ols_fit(model)
    if estimator == "ols":
        T = panel.T
        Minv = np.linalg.inv(ols.M_hat)
        cov = Minv @ newey_west_lrv(ols.w_hats, bartlett_lag(T)) @ Minv / T
        return {
            "estimator": "ols",
            "alpha": ols.alpha_hat.tolist(),
            "beta": ols.beta_hat.tolist(),
            "se": np.sqrt(np.diag(cov)).tolist(),
        }
    lag = select_lag_bic(ols.residuals, p_max, p_min) if p == "auto" else int(p)
    var = fit_var(ols.residuals, lag)
    fit = (pw_fgls if estimator == "pw" else co_fgls)(model, var)
    se = np.sqrt(np.diag(np.linalg.inv(fit.M_hat)) / fit.effective_T)
    return {
        "estimator": estimator,
        "lag": lag,
        "alpha": fit.alpha_hat.tolist(),
        "beta": fit.beta_hat.tolist(),
        "se": se.tolist(),
        "Phi": var.Phi.tolist(),
        "Omega": var.Omega.tolist(),
        "effective_T": fit.effective_T,
    }


def cmd_fit(args):
    started = time.time()
    try:
        panel = load_panel(args.returns, args.factors)
        lag = "auto"
        if args.estimator != "ols":
            lag, _ = _resolve_lag(args, ols_fit(panel).residuals)
        rep = fit_report(panel, args.estimator, lag, args.p_max, args.p_min)
    except (ConfigError, MvglsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    names = panel.names or [f"y{i}" for i in range(panel.N)]
    fnames = panel.factor_names or [f"x{j}" for j in range(panel.k)]
    se = np.asarray(rep["se"])
    print(f"estimator={rep['estimator']}" + (f" lag={rep['lag']}" if "lag" in rep else ""))
    header = f"{'equation':<12}{'alpha':>12}{'(se)':>12}" + "".join(f"{f:>12}{'(se)':>12}" for f in fnames)
    print(header)
    N, k = panel.N, panel.k
    for i, name in enumerate(names):
        line = f"{name:<12}{rep['alpha'][i]:>12.6f}{se[i]:>12.6f}"
        for j in range(k):
            line += f"{rep['beta'][i][j]:>12.6f}{se[N + i * k + j]:>12.6f}"
        print(line)
    if "Phi" in rep:
        for j, Phi_j in enumerate(rep["Phi"], start=1):
            print(f"Phi_{j} =\n{np.array2string(np.asarray(Phi_j), precision=4)}")
        print(f"Omega =\n{np.array2string(np.asarray(rep['Omega']), precision=4)}")
    _write_reports(args, {"tests": [], "fit": rep}, started, "fit")
    return EXIT_OK


def _write_reports(args, report, started, command):
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if args.manifest:
        settings = {k: v for k, v in vars(args).items() if k != "func"}
        doc = _manifest(command, settings, seed, started, inputs=(args.returns, args.factors))
        Path(args.manifest).write_text(json.dumps(doc, indent=2, default=str) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="mvgls", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo rejection-rate tables")
    sim.add_argument("--config", help="flat key=value file; flags override it")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--case", help="comma list of " + ",".join(CASES))
    sim.add_argument("--cells", help="comma list such as N6K3,N25K3")
    sim.add_argument("--T", help="comma list of sample sizes")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--p-max", dest="p_max", type=int)
    sim.add_argument("--p-min", dest="p_min", type=int)
    sim.add_argument("--alternative", action="store_true", help="alpha_1 = 0.1 instead of the null")
    sim.add_argument("--fixed-omega", dest="fixed_omega", action="store_true")
    sim.add_argument("--workers", type=int, help="worker processes (default $MVGLS_WORKERS or 1)")
    sim.add_argument("--out", help="output directory (default .)")
    sim.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("test", cmd_test, "intercept tests on CSV data"), ("fit", cmd_fit, "fit OLS/PW/CO")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--returns", required=True, help="CSV: date column then one column per equation")
        p.add_argument("--factors", required=True, help="CSV: date column then one column per factor")
        p.add_argument("--p", default="auto", help="VAR lag order or 'auto' (BIC)")
        p.add_argument("--p-max", dest="p_max", type=int, default=DEFAULT_P_MAX)
        p.add_argument("--p-min", dest="p_min", type=int, default=0)
        p.add_argument("--json", help="write a JSON report here")
        p.add_argument("--manifest", help="write a run manifest here")
        p.add_argument("--seed", type=int, help="recorded in the manifest")
        if name == "fit":
            p.add_argument("--estimator", choices=("ols", "pw", "co"), default="pw")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "workers", None) is None and os.environ.get("MVGLS_WORKERS"):
        args.workers = int(os.environ["MVGLS_WORKERS"])
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
