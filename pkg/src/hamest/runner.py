"""Seeded batch execution of estimation experiments.

Each trial owns an independent RNG stream keyed by (master seed, trial
index) through a splitmix64 hash feeding a counter-based Philox generator,
so results are bit-identical regardless of execution order or worker count.
Rows are emitted in trial order by a single writer.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ExperimentConfig
from .errors import HamestError, ValidationError
from .estimation import run_adaptive, run_many_channel, run_one_channel
from .model import make_model

__all__ = [
    "CSV_HEADER",
    "trial_seed",
    "trial_rng",
    "run_experiment",
    "run_sweep",
    "rows_to_csv",
    "summarize",
]

CSV_HEADER = "trial,seed,scheme,d,m,delta,E,theta_err,total_time,success,stages"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

_SCHEME_RUNNERS = {
    "one_channel": run_one_channel,
    "adaptive": run_adaptive,
    "many_channel": run_many_channel,
}


def _splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def trial_seed(master_seed: int, index: int) -> int:
    return _splitmix64((master_seed ^ ((index + 1) * _GOLDEN)) & _MASK)


def trial_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _sample_theta(m: int, e_radius: float, worst_case: bool,
                  rng: np.random.Generator) -> np.ndarray:
    u = rng.standard_normal(m)
    u /= np.linalg.norm(u)
    if worst_case:
        radius = e_radius * (1.0 - 0.02 * rng.random())
    else:
        radius = e_radius * rng.random() ** (1.0 / m)
    return u * radius


def _format_stages(stages) -> str:
    return "|".join(f"{s.n}:{s.tau!r}:{s.copies}:{s.accept_rate!r}"
                    + (":failed" if s.failed else "")
                    for s in stages)


def _run_trial(cfg: ExperimentConfig, index: int, delta: float | None = None,
               master: int | None = None) -> dict:
    delta = cfg.delta if delta is None else delta
    master = cfg.master_seed if master is None else master
    seed = trial_seed(master, index)
    rng = trial_rng(seed)
    model = make_model(cfg.model_kind, cfg.d)
    theta = _sample_theta(model.m, cfg.e_radius, cfg.worst_case_grid, rng)
    runner = _SCHEME_RUNNERS[cfg.scheme]
    row = {
        "trial": index, "seed": seed, "scheme": cfg.scheme, "d": cfg.d,
        "m": model.m, "delta": delta, "E": cfg.e_radius,
    }
    try:
        rec = runner(model, theta, delta, cfg.e_radius, cfg.constants,
                     rng=rng, seed=seed)
        row.update(theta_err=rec.error, total_time=rec.total_time,
                   success=rec.success, stages=_format_stages(rec.stages),
                   error=None)
    except HamestError as exc:
        row.update(theta_err=float("nan"), total_time=0.0, success=False,
                   stages="", error=f"{type(exc).__name__}: {exc}")
    return row


def _trial_worker(payload):
    cfg, index, delta, master = payload
    return _run_trial(cfg, index, delta, master)


def _map_trials(cfg, payloads, jobs):
    if jobs <= 1:
        return [_trial_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_trial_worker, payloads, chunksize=1))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[dict], dict]:
    payloads = [(cfg, i, None, None) for i in range(cfg.trials)]
    rows = _map_trials(cfg, payloads, jobs)
    return rows, summarize(rows)


def run_sweep(cfg: ExperimentConfig, deltas, jobs: int = 1) -> tuple[list[dict], dict]:
    """Run the experiment at each delta and fit log(median T) vs log(delta)."""
    deltas = [float(x) for x in deltas]
    if len(deltas) < 3:
        raise ValidationError("sweep needs at least 3 delta values")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("delta values must be strictly decreasing")
    for delta in deltas:
        if not (0 < delta <= cfg.e_radius / 5 * (1 + 1e-12)):
            raise ValidationError(f"delta {delta} violates delta/E <= 1/5")
    rows = []
    per_delta = []
    for di, delta in enumerate(deltas):
        master = trial_seed(cfg.master_seed, di)
        payloads = [(cfg, i, delta, master) for i in range(cfg.trials)]
        block = _map_trials(cfg, payloads, jobs)
        rows.extend(block)
        stats = summarize(block)
        stats["delta"] = delta
        per_delta.append(stats)

    x = np.log(np.asarray(deltas))
    y = np.log(np.asarray([s["median_T"] for s in per_delta]))
    slope, intercept = np.polyfit(x, y, 1)
    residuals = (y - (slope * x + intercept)).tolist()
    summary = summarize(rows)
    summary.update(slope=float(slope), intercept=float(intercept),
                   residuals=residuals, per_delta=per_delta)
    return rows, summary


def summarize(rows) -> dict:
    times = np.asarray([r["total_time"] for r in rows], dtype=float)
    q1, med, q3 = (np.percentile(times, q) for q in (25, 50, 75))
    return {
        "n_trials": len(rows),
        "success_rate": float(np.mean([bool(r["success"]) for r in rows])),
        "median_T": float(med),
        "q1_T": float(q1),
        "q3_T": float(q3),
    }


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    cols = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    lines += [",".join(_csv_cell(row[c]) for c in cols) for row in rows]
    return "\n".join(lines) + "\n"


def write_outputs(rows, summary, csv_path, json_path) -> None:
    with open(csv_path, "w") as fh:
        fh.write(rows_to_csv(rows))
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
