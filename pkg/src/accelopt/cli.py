"""Experiment command line: run, matrix, check-certificate, integrate.

Configuration is flat key = value text ('#' comments); every key can be
overridden by a command-line flag of the same name. Exit codes: 0 on
success, 1 on solver errors, 2 on configuration errors.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Dict, Optional

import click
import numpy as np

from . import continuum, problems, reporting
from .baselines import SvrgConfig, run_gd, run_svrg
from .engine import (AcceleratedSolver, CoefficientStrategy, EngineConfig,
                     IndicatorPolicy, TraceRecord, estimate_h_star)
from .errors import AcceloptError, InvalidConfigError, ParseError
from .oracle import ObjectiveOracle
from .restart import (RestartConfig, run_restarted, solver_handle_from_engine,
                      uaf_rate_constants)

CONFIG_DEFAULTS = {
    "problem": "quadratic",
    "solver": "uaf",
    "dataset": "",
    "dim": "20",
    "n": "500",
    "seed": "0",
    "p": "2",
    "nu": "1.0",
    "L": "1.0",
    "q": "3.0",
    "alpha": "1.0",
    "theta1": "1.0",
    "theta2": "1.0",
    "strategy": "exact",
    "h_star": "pilot",
    "max_iter": "100",
    "indicator_policy": "warn",
    "learning_rate": "0.5",
    "epochs": "20",
    "step": "0.1",
    "restart_s": "2.0",
    "restart_sigma": "1.0",
    "restart_R": "10.0",
    "restart_K": "8",
    "sched_p": "2",
    "horizon": "10.0",
    "dt": "1e-4",
    "out": "trace.csv",
    "summary": "summary.json",
    "fit_lo": "0",
    "fit_hi": "0",
    "ref_budget": "400",
    "plots": "true",
    "l1_reg": "0.0",
}


def parse_config_text(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", line_no)
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in CONFIG_DEFAULTS:
            raise ParseError(f"unknown config key {key!r}", line_no)
        out[key] = value.strip()
    return out


def load_config(config_path: Optional[str],
                overrides: Dict[str, Optional[str]]) -> Dict[str, str]:
    conf = dict(CONFIG_DEFAULTS)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise InvalidConfigError(f"config file {config_path} not found")
        conf.update(parse_config_text(path.read_text()))
    for key, value in overrides.items():
        if value is not None:
            conf[key] = str(value)
    return conf


def _f(conf, key) -> float:
    try:
        return float(conf[key])
    except ValueError:
        raise InvalidConfigError(f"{key} must be a number, got {conf[key]!r}")


def _i(conf, key) -> int:
    try:
        return int(conf[key])
    except ValueError:
        raise InvalidConfigError(f"{key} must be an integer, got {conf[key]!r}")


def _b(conf, key) -> bool:
    val = conf[key].strip().lower()
    if val in ("true", "1", "yes"):
        return True
    if val in ("false", "0", "no"):
        return False
    raise InvalidConfigError(f"{key} must be a boolean, got {conf[key]!r}")


def build_oracle(conf: Dict[str, str]):
    """(oracle, description-dict for cache keys, x0) from the problem keys."""
    kind = conf["problem"]
    seed = _i(conf, "seed")
    dim = _i(conf, "dim")
    n = _i(conf, "n")
    if kind == "quadratic":
        rng = np.random.default_rng(seed)
        Q = np.linspace(1.0, 10.0, dim)
        b = rng.standard_normal(dim)
        oracle = problems.make_quadratic(Q, b)
        desc = {"problem": "quadratic", "dim": dim, "seed": seed}
    elif kind == "logistic":
        dataset = problems.synthetic_logistic_dataset(n, dim, seed)
        oracle = problems.make_logistic(dataset)
        desc = {"problem": "logistic", "n": n, "dim": dim, "seed": seed}
    elif kind == "libsvm":
        path = Path(conf["dataset"])
        if not conf["dataset"] or not path.exists():
            raise InvalidConfigError(
                f"dataset path {conf['dataset']!r} does not exist")
        with open(path) as fh:
            dataset = problems.parse_libsvm(fh)
        oracle = problems.make_logistic(dataset)
        desc = {"problem": "libsvm", "path": str(path.resolve()),
                "n": dataset.n, "dim": dataset.d}
    elif kind == "l1ls":
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, dim)) / np.sqrt(n)
        x_true = np.where(rng.random(dim) < 0.2, rng.standard_normal(dim), 0.0)
        b = A @ x_true + 0.01 * rng.standard_normal(n)
        oracle = problems.make_l1_least_squares(A, b, _f(conf, "l1_reg"))
        desc = {"problem": "l1ls", "n": n, "dim": dim, "seed": seed,
                "reg": _f(conf, "l1_reg")}
    else:
        raise InvalidConfigError(f"unknown problem {kind!r}")
    x0 = np.zeros(oracle.dim)
    return oracle, desc, x0


def engine_config(conf: Dict[str, str], oracle: ObjectiveOracle,
                  x0: np.ndarray) -> EngineConfig:
    try:
        strategy = CoefficientStrategy(conf["strategy"])
    except ValueError:
        raise InvalidConfigError(f"unknown strategy {conf['strategy']!r}")
    try:
        policy = IndicatorPolicy(conf["indicator_policy"])
    except ValueError:
        raise InvalidConfigError(
            f"unknown indicator_policy {conf['indicator_policy']!r}")
    h_star = None
    if strategy is CoefficientStrategy.HEURISTIC:
        if conf["h_star"] == "pilot":
            pilot_cfg = EngineConfig(
                p=_i(conf, "p"), nu=_f(conf, "nu"), L=_f(conf, "L"),
                q=float(_i(conf, "p")) + _f(conf, "nu"),
                strategy=CoefficientStrategy.EXACT, max_iter=50)
            # the pilot returns r^{p+nu}/(p+nu); convert the radius r to
            # the target proxy order q
            target_q = _f(conf, "q")
            pilot_h = estimate_h_star(oracle, pilot_cfg, x0)
            r = (pilot_h * pilot_cfg.q) ** (1.0 / pilot_cfg.q)
            h_star = max(r ** target_q / target_q, 1e-12)
        else:
            h_star = _f(conf, "h_star")
    return EngineConfig(
        p=_i(conf, "p"), nu=_f(conf, "nu"), L=_f(conf, "L"),
        q=_f(conf, "q"), alpha=_f(conf, "alpha"),
        theta1=_f(conf, "theta1"), theta2=_f(conf, "theta2"),
        strategy=strategy, h_star_estimate=h_star,
        max_iter=_i(conf, "max_iter"), indicator_policy=policy)


def _trace_from_values(values, f_ref: Optional[float]):
    records = []
    for k, f_val in enumerate(values[1:], start=1):
        gap = None if f_ref is None else f_val - f_ref
        records.append(TraceRecord(iteration=k, f_value=f_val, omega=0.0,
                                   lam=0.0, A=float(k), displacement=0.0,
                                   wall_seconds=0.0, gap_vs_ref=gap))
    return records


def execute_run(conf: Dict[str, str]):
    """Core of the run subcommand; returns the written summary dict."""
    oracle, desc, x0 = build_oracle(conf)
    solver = conf["solver"]
    ref_budget = _i(conf, "ref_budget")
    f_ref = None
    ref = None
    if ref_budget > 0:
        ref = reporting.reference_solution(oracle, desc, ref_budget, x0)
        f_ref = ref.f_ref

    if solver == "uaf":
        cfg = dataclasses.replace(engine_config(conf, oracle, x0), f_ref=f_ref)
        result = AcceleratedSolver(oracle, cfg).run(x0)
        records = result.trace
        theta2 = cfg.theta2
    elif solver == "uaf+restart":
        cfg = engine_config(conf, oracle, x0)
        c_A, r, v = uaf_rate_constants(cfg)
        rcfg = RestartConfig(s=_f(conf, "restart_s"),
                             sigma=_f(conf, "restart_sigma"),
                             v=v, r=r, c_A=c_A,
                             R=_f(conf, "restart_R"), K=_i(conf, "restart_K"))
        handle = solver_handle_from_engine(oracle, cfg)
        _, epochs = run_restarted(handle, rcfg, x0, f=oracle.value)
        values = [oracle.value(x0)] + [row[2] for row in epochs]
        records = _trace_from_values(values, f_ref)
        theta2 = cfg.theta2
    elif solver == "svrg":
        if conf["problem"] not in ("logistic", "libsvm"):
            raise InvalidConfigError("svrg needs a finite-sum problem")
        if conf["problem"] == "libsvm":
            with open(conf["dataset"]) as fh:
                dataset = problems.parse_libsvm(fh)
        else:
            dataset = problems.synthetic_logistic_dataset(
                _i(conf, "n"), _i(conf, "dim"), _i(conf, "seed"))
        scfg = SvrgConfig(learning_rate=_f(conf, "learning_rate"),
                          epochs=_i(conf, "epochs"), rng_seed=_i(conf, "seed"))
        _, values = run_svrg(dataset, scfg, x0)
        records = _trace_from_values(values, f_ref)
        theta2 = 1.0
    elif solver == "gd":
        _, values = run_gd(oracle, _f(conf, "step"), _i(conf, "max_iter"), x0)
        records = _trace_from_values(values, f_ref)
        theta2 = 1.0
    elif solver == "continuum":
        return execute_integrate(conf)
    else:
        raise InvalidConfigError(f"unknown solver {solver!r}")

    out = Path(conf["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    reporting.write_trace_csv(out, records)
    fit_lo, fit_hi = _i(conf, "fit_lo"), _i(conf, "fit_hi")
    window = (fit_lo, fit_hi) if fit_hi > fit_lo > 0 else None
    summary = reporting.build_summary(records, theta2, window)
    summary["problem"] = desc
    summary["solver"] = solver
    if ref is not None:
        summary["reference_high_quality"] = ref.high_quality
    reporting.write_summary_json(conf["summary"], summary)
    if _b(conf, "plots"):
        reporting.render_figures(records, out.parent, stem=out.stem)
    return summary


def execute_integrate(conf: Dict[str, str]):
    oracle, desc, x0 = build_oracle(conf)
    if conf["problem"] == "quadratic":
        # start away from the minimizer so the trajectory is informative
        x0 = np.ones(oracle.dim)
    weight, total = continuum.power_weight_schedule(_i(conf, "sched_p"))
    spec = continuum.DynamicsSpec(weight=weight, total_weight=total,
                                  oracle=oracle, x0=x0,
                                  horizon=_f(conf, "horizon"),
                                  dt=_f(conf, "dt"))
    traj = continuum.integrate(spec)
    out = Path(conf["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    stride = max(1, len(traj.times) // 2000)
    records = []
    for j in range(0, len(traj.times), stride):
        t = float(traj.times[j])
        f_val = oracle.value(traj.states[j])
        records.append(TraceRecord(iteration=j, f_value=f_val, omega=0.0,
                                   lam=0.0, A=float(total(t)),
                                   displacement=0.0, wall_seconds=0.0,
                                   gap_vs_ref=None))
    reporting.write_trace_csv(out, records)
    f_T = oracle.value(traj.final_state())
    summary = {
        "problem": desc,
        "solver": "continuum",
        "horizon": _f(conf, "horizon"),
        "dt": _f(conf, "dt"),
        "final_value": f_T,
        "total_weight_at_horizon": float(total(_f(conf, "horizon"))),
    }
    reporting.write_summary_json(conf["summary"], summary)
    if _b(conf, "plots"):
        reporting.render_figures(records, out.parent, stem=out.stem)
    return summary


_SHARED_OPTS = [
    click.option("--config", "config_path", type=str, default=None,
                 help="flat key = value config file"),
]


def _conf_options(keys):
    def wrap(fn):
        for key in reversed(keys):
            fn = click.option(f"--{key}", key, default=None)(fn)
        for opt in _SHARED_OPTS:
            fn = opt(fn)
        return fn
    return wrap


_RUN_KEYS = ["problem", "solver", "dataset", "dim", "n", "seed", "p", "nu",
             "L", "q", "alpha", "theta1", "theta2", "strategy", "h_star",
             "max_iter", "indicator_policy", "learning_rate", "epochs",
             "step", "restart_s", "restart_sigma", "restart_R", "restart_K",
             "sched_p", "horizon", "dt", "out", "summary", "fit_lo",
             "fit_hi", "ref_budget", "plots", "l1_reg"]


@click.group()
def main():
    """Accelerated high-order optimization experiment runner."""


def _run_guarded(fn):
    try:
        fn()
    except (InvalidConfigError, ParseError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except AcceloptError as exc:
        click.echo(f"solver error: {exc}", err=True)
        sys.exit(1)


@main.command("run")
@_conf_options(_RUN_KEYS)
def run_cmd(config_path, **overrides):
    """Run one solver and emit trace CSV + JSON summary."""
    def body():
        conf = load_config(config_path, overrides)
        summary = execute_run(conf)
        click.echo(json.dumps(summary, sort_keys=True))
    _run_guarded(body)


@main.command("matrix")
@_conf_options(_RUN_KEYS)
@click.option("--qs", default="3.0", help="comma-separated q grid")
@click.option("--Ls", "Ls", default="1.0", help="comma-separated L grid")
@click.option("--out-dir", default="matrix_out", help="artifact directory")
def matrix_cmd(config_path, qs, Ls, out_dir, **overrides):
    """Grid over q and L; one run per cell plus a combined summary."""
    def body():
        base = load_config(config_path, overrides)
        out_root = Path(out_dir)
        out_root.mkdir(parents=True, exist_ok=True)
        cells = []
        for q_s in qs.split(","):
            for L_s in Ls.split(","):
                conf = dict(base)
                conf["q"] = q_s.strip()
                conf["L"] = L_s.strip()
                stem = f"q{q_s.strip()}_L{L_s.strip()}"
                conf["out"] = str(out_root / f"{stem}.csv")
                conf["summary"] = str(out_root / f"{stem}.json")
                summary = execute_run(conf)
                cells.append({"q": float(q_s), "L": float(L_s),
                              "final_gap": summary.get("final_gap"),
                              "iterations": summary.get("iterations"),
                              "csv": conf["out"]})
        reporting.write_summary_json(out_root / "matrix.json",
                                     {"cells": cells})
        click.echo(json.dumps({"cells": len(cells),
                               "out_dir": str(out_root)}))
    _run_guarded(body)


@main.command("check-certificate")
@click.argument("csv_path", type=str)
@_conf_options(_RUN_KEYS)
def check_certificate_cmd(csv_path, config_path, **overrides):
    """Verify f - f_ref <= h(x_ref; x0)/A + 1e-9 row-wise on a trace CSV."""
    def body():
        conf = load_config(config_path, overrides)
        path = Path(csv_path)
        if not path.exists():
            raise InvalidConfigError(f"trace file {csv_path} not found")
        rows = reporting.read_trace_csv(path)
        oracle, desc, x0 = build_oracle(conf)
        ref = reporting.reference_solution(oracle, desc,
                                           _i(conf, "ref_budget"), x0)
        q = _f(conf, "q")
        h_ref = float(np.linalg.norm(ref.x_ref - x0) ** q) / q
        bad = []
        for row in rows:
            if row["A"] <= 0:
                continue
            if row["f"] - ref.f_ref > h_ref / row["A"] + 1e-9:
                bad.append(row["iter"])
        if bad:
            click.echo(f"FAIL: certificate violated at iterations {bad[:10]}"
                       f"{'...' if len(bad) > 10 else ''}")
            sys.exit(1)
        click.echo(f"PASS: certificate holds on all {len(rows)} rows")
    _run_guarded(body)


@main.command("integrate")
@_conf_options(_RUN_KEYS)
def integrate_cmd(config_path, **overrides):
    """Integrate the continuous-time dynamics and emit a trace CSV."""
    def body():
        conf = load_config(config_path, overrides)
        summary = execute_integrate(conf)
        click.echo(json.dumps(summary, sort_keys=True))
    _run_guarded(body)


if __name__ == "__main__":
    main()
