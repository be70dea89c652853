"""Trace emission, rate fitting, reference solutions, and figures.

The CSV schema is the stable contract: exactly the 8 columns
iter,f,gap,omega,lambda,A,disp,wall_s in that order. Figures rendered
next to the CSV are a convenience view of the same rows. Reference
solutions are cached on disk keyed by a hash of the problem description;
cache writes are atomic (temp file + rename).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engine import (AcceleratedSolver, CoefficientStrategy, EngineConfig,
                     TraceRecord)
from .errors import AcceloptError
from .oracle import ObjectiveOracle

CSV_COLUMNS = ["iter", "f", "gap", "omega", "lambda", "A", "disp", "wall_s"]

CACHE_ENV_VAR = "ACCELOPT_CACHE_DIR"


class FitError(AcceloptError):
    """Too few usable points to fit a rate slope."""


def write_trace_csv(path, records: Sequence[TraceRecord]):
    """Emit the 8-column trace. All floats use repr so identical runs
    produce identical bytes (wall_s is excluded from that guarantee)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            gap = "" if rec.gap_vs_ref is None else repr(rec.gap_vs_ref)
            writer.writerow([rec.iteration, repr(rec.f_value), gap,
                             repr(rec.omega), repr(rec.lam), repr(rec.A),
                             repr(rec.displacement),
                             f"{rec.wall_seconds:.6f}"])


def read_trace_csv(path) -> List[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise AcceloptError(f"unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            rows.append({
                "iter": int(row["iter"]),
                "f": float(row["f"]),
                "gap": float(row["gap"]) if row["gap"] else None,
                "omega": float(row["omega"]),
                "lambda": float(row["lambda"]),
                "A": float(row["A"]),
                "disp": float(row["disp"]),
                "wall_s": float(row["wall_s"]),
            })
    return rows


def fit_rate(records: Sequence[TraceRecord],
             window: Tuple[int, int],
             floor: float = 1e-15,
             auto_shrink: bool = False) -> float:
    """Least-squares slope of log(gap) against log(iteration).

    Points at or below the floating-point floor are rejected, or silently
    dropped when auto_shrink is set.
    """
    lo, hi = window
    xs, ys = [], []
    floored = False
    for rec in records:
        if not lo <= rec.iteration <= hi:
            continue
        gap = rec.gap_vs_ref
        if gap is None:
            continue
        if gap <= floor:
            floored = True
            continue
        xs.append(math.log(rec.iteration))
        ys.append(math.log(gap))
    if floored and not auto_shrink:
        raise FitError("gap hit the floating-point floor inside the window")
    if len(xs) < 3:
        raise FitError(f"only {len(xs)} usable points in window {window}")
    slope = float(np.polyfit(xs, ys, 1)[0])
    return slope


def write_summary_json(path, summary: dict):
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_summary(records: Sequence[TraceRecord], theta2: float,
                  fit_window: Optional[Tuple[int, int]] = None) -> dict:
    final_gap = None
    for rec in reversed(records):
        if rec.gap_vs_ref is not None:
            final_gap = rec.gap_vs_ref
            break
    violations = sum(1 for rec in records if rec.omega > theta2)
    slope = None
    if fit_window is not None:
        try:
            slope = fit_rate(records, fit_window, auto_shrink=True)
        except FitError:
            slope = None
    return {
        "iterations": len(records),
        "final_gap": final_gap,
        "certificate_violation_count": violations,
        "fit_slope": slope,
        "fit_window": list(fit_window) if fit_window else None,
    }


def cache_dir() -> Path:
    root = os.environ.get(CACHE_ENV_VAR, ".accelopt_cache")
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def problem_cache_key(description: dict) -> str:
    blob = json.dumps(description, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


@dataclass
class ReferenceSolution:
    x_ref: np.ndarray
    f_ref: float
    high_quality: bool


def reference_solution(oracle: ObjectiveOracle, description: dict,
                       budget: int, x0: Optional[np.ndarray] = None
                       ) -> ReferenceSolution:
    """High-accuracy minimizer for gap reporting, disk-cached.

    Uses the analytic minimizer when the oracle carries one; otherwise an
    accelerated run followed by Newton polishing (smooth problems), or a
    long proximal-gradient run (composite problems). budget = 0 returns
    the start point flagged low-quality.
    """
    key = problem_cache_key(description)
    path = cache_dir() / f"ref_{key}.npz"
    if path.exists():
        data = np.load(path)
        return ReferenceSolution(x_ref=data["x_ref"],
                                 f_ref=float(data["f_ref"]),
                                 high_quality=bool(data["high_quality"]))
    x0 = np.zeros(oracle.dim) if x0 is None else np.asarray(x0, dtype=float)
    if budget <= 0:
        return ReferenceSolution(x_ref=x0, f_ref=oracle.value(x0),
                                 high_quality=False)
    sol = _compute_reference(oracle, budget, x0)
    tmp_fd, tmp_name = tempfile.mkstemp(dir=cache_dir(), suffix=".npz")
    os.close(tmp_fd)
    np.savez(tmp_name, x_ref=sol.x_ref, f_ref=sol.f_ref,
             high_quality=sol.high_quality)
    os.replace(tmp_name, path)
    return sol


def _compute_reference(oracle: ObjectiveOracle, budget: int,
                       x0: np.ndarray) -> ReferenceSolution:
    if getattr(oracle, "x_star", None) is not None:
        return ReferenceSolution(x_ref=np.asarray(oracle.x_star, dtype=float),
                                 f_ref=float(oracle.f_star),
                                 high_quality=True)
    if oracle.composite_part is not None or oracle.smooth_order < 2:
        from .baselines import run_gd
        L = getattr(oracle, "lipschitz_gradient", None)
        step = 1.0 / L if L else 1e-2
        x, trace = run_gd(oracle, step, budget, x0)
        return ReferenceSolution(x_ref=x, f_ref=trace[-1], high_quality=False)
    cfg = EngineConfig(p=2, nu=1.0, L=1e-3, q=3.0, theta1=1.0, theta2=1.0,
                       strategy=CoefficientStrategy.EXACT,
                       max_iter=min(budget, 200))
    x = AcceleratedSolver(oracle, cfg).run(x0).solution
    # Newton polish; the accelerated run lands in the quadratic basin
    for _ in range(60):
        g = oracle.gradient(x)
        if float(np.linalg.norm(g)) < 1e-13:
            break
        H = oracle.dense_hessian(x)
        try:
            step = np.linalg.solve(H + 1e-14 * np.eye(len(x)), -g)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        fx = oracle.value(x)
        while t > 1e-8 and oracle.value(x + t * step) > fx:
            t *= 0.5
        x = x + t * step
    g_norm = float(np.linalg.norm(oracle.gradient(x)))
    return ReferenceSolution(x_ref=x, f_ref=oracle.value(x),
                             high_quality=g_norm < 1e-10)


def render_figures(records: Sequence[TraceRecord], out_dir,
                   stem: str = "trace"):
    """Render gap and indicator figures next to the CSV output.

    Returns the list of files written; silently skips the gap panel when
    no reference gap is available.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    iters = [r.iteration for r in records]
    gaps = [(r.iteration, r.gap_vs_ref) for r in records
            if r.gap_vs_ref is not None and r.gap_vs_ref > 0]
    if gaps:
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog([g[0] for g in gaps], [g[1] for g in gaps], marker=".",
                  lw=1.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel("objective gap")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        p = out_dir / f"{stem}_gap.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(iters, [r.omega for r in records], marker=".", lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("convergence indicator")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    p = out_dir / f"{stem}_indicator.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)
    return written
