"""Sweep runner: mapping x schedule x sigma x seed, one CSV row per trial."""
from __future__ import annotations

import csv
import io
import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cells import apply_variation
from .config import ExperimentConfig, ScheduleSpec
from .mvm import Mapping, MvmReport, build_crossbar, error_stats, mvm_execute
from .schedule import Strategy, make_groups
from .weightfile import read_xbw

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "trial", "technology", "rows", "cols", "mapping", "schedule", "groups", "sigma", "seed",
    "status", "mean_abs_err", "rmse", "max_err", "total_current_a", "newton_iters_mean",
    "newton_iters_max", "message",
]

# independent RNG streams per seed
_WEIGHT_STREAM, _INPUT_STREAM, _VARIATION_STREAM = 0, 1, 2


@dataclass(frozen=True)
class Trial:
    index: int
    mapping: Mapping
    schedule: ScheduleSpec
    sigma: float
    seed: int


def trials(cfg: ExperimentConfig) -> list[Trial]:
    combos = itertools.product(cfg.mapping, cfg.schedule, cfg.sigma, cfg.seeds)
    return [Trial(i, m, sch, s, seed) for i, (m, sch, s, seed) in enumerate(combos)]


def trial_weights(cfg: ExperimentConfig, seed: int) -> tuple[np.ndarray, int, bool]:
    ws = cfg.weights
    if ws.source == "file":
        wf = read_xbw(ws.path)
        return wf.weights, wf.bits, wf.signed
    rng = np.random.default_rng([seed, _WEIGHT_STREAM])
    outs = max(1, cfg.array_cols // ws.bits)
    planes = rng.random((ws.bits, cfg.array_rows, outs)) < ws.density
    u = sum(planes[k].astype(np.int64) << k for k in range(ws.bits))
    if ws.signed:
        u = np.where(u >= 1 << (ws.bits - 1), u - (1 << ws.bits), u)
    return u, ws.bits, ws.signed


def trial_inputs(cfg: ExperimentConfig, seed: int, rows: int) -> np.ndarray:
    src = cfg.inputs
    if src.source == "all_ones":
        return np.ones(rows, dtype=np.int64)
    if src.source == "random":
        rng = np.random.default_rng([seed, _INPUT_STREAM])
        return rng.integers(0, 2**src.bits, size=rows)
    x = np.array([int(v) for v in Path(src.path).read_text().split()], dtype=np.int64)
    if x.shape[0] != rows:
        raise ValueError(f"input file has {x.shape[0]} values for {rows} rows")
    return x


def run_trial(cfg: ExperimentConfig, t: Trial, tech=None, wire=None) -> MvmReport:
    tech = tech if tech is not None else cfg.technology_model()
    wire = wire if wire is not None else cfg.wire.model()
    w, bits, signed = trial_weights(cfg, t.seed)
    rows = w.shape[0]
    phys_shape = (rows, w.shape[1] * bits)
    variation = apply_variation(phys_shape, t.sigma, [t.seed, _VARIATION_STREAM])
    xbar = build_crossbar(w, bits=bits, signed=signed, tech=tech, bias=cfg.bias.bias(), wire=wire,
                          mapping=t.mapping, variation=variation)
    n_groups = 1 if t.schedule.strategy is Strategy.FULL else t.schedule.groups
    sched = make_groups(rows, n_groups, t.schedule.strategy)
    x = trial_inputs(cfg, t.seed, rows)
    echo = {
        "technology": cfg.technology.value, "rows": rows, "cols": phys_shape[1],
        "mapping": t.mapping.value, "schedule": t.schedule.strategy.value, "groups": n_groups,
        "sigma": t.sigma, "seed": t.seed,
    }
    return mvm_execute(x, xbar, sched, cfg.adc.policy(), cfg.inputs.bits, echo)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(t: Trial, cfg: ExperimentConfig, rep: MvmReport | None, err: str = "") -> dict:
    n_groups = 1 if t.schedule.strategy is Strategy.FULL else t.schedule.groups
    row = {
        "trial": t.index, "technology": cfg.technology.value, "rows": cfg.array_rows,
        "cols": cfg.array_cols, "mapping": t.mapping.value, "schedule": t.schedule.strategy.value,
        "groups": n_groups, "sigma": float(t.sigma), "seed": t.seed,
    }
    if rep is None:
        row.update(status="error", mean_abs_err="", rmse="", max_err="", total_current_a="",
                   newton_iters_mean="", newton_iters_max="", message=err)
    else:
        row["rows"], row["cols"] = rep.config_echo["rows"], rep.config_echo["cols"]
        row.update(status="ok", mean_abs_err=rep.mean_abs_err, rmse=rep.rmse, max_err=rep.max_err,
                   total_current_a=rep.total_current, newton_iters_mean=rep.newton_iters_mean,
                   newton_iters_max=rep.newton_iters_max, message="")
    return row


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("XBAR_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer XBAR_THREADS=%r", cap)
    return max(1, min(n, n_tasks))


def run_experiments(cfg: ExperimentConfig, keep_reports: bool = False):
    """Run every trial; failures become error rows. Returns (rows, reports)."""
    tech = cfg.technology_model()
    wire = cfg.wire.model()
    ts = trials(cfg)

    def one(t: Trial):
        try:
            rep = run_trial(cfg, t, tech, wire)
            return _row(t, cfg, rep), rep
        except Exception as exc:  # per-trial failure must not stop the sweep
            log.warning("trial %d failed: %s", t.index, exc)
            return _row(t, cfg, None, f"{type(exc).__name__}: {exc}"), None

    with ThreadPoolExecutor(max_workers=worker_count(len(ts))) as pool:
        results = list(pool.map(one, ts))
    rows = [r for r, _ in results]
    reports = [rep for _, rep in results] if keep_reports else []
    return rows, reports


def rows_to_csv(rows: list[dict], deterministic: bool = False) -> str:
    buf = io.StringIO()
    if not deterministic:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    wr = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    wr.writeheader()
    for row in rows:
        wr.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})
    return buf.getvalue()


_INT_COLS = {"trial", "rows", "cols", "groups", "seed", "max_err", "newton_iters_max"}
_FLOAT_COLS = {"sigma", "mean_abs_err", "rmse", "total_current_a", "newton_iters_mean"}


def read_csv_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for raw in csv.DictReader(lines):
        row = dict(raw)
        for k in _INT_COLS:
            row[k] = int(row[k]) if row[k] != "" else None
        for k in _FLOAT_COLS:
            row[k] = float(row[k]) if row[k] != "" else None
        out.append(row)
    return out


def summarize(reports: list[MvmReport]) -> dict:
    """Aggregate per (mapping, schedule, groups, sigma); win rates vs Baseline/Full."""
    groups: dict[tuple, list[MvmReport]] = {}
    for rep in reports:
        if rep is None:
            continue
        e = rep.config_echo
        groups.setdefault((e["mapping"], e["schedule"], e["groups"], e["sigma"]), []).append(rep)
    out = []
    for key, reps in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        base = groups.get(("Baseline", "Full", 1, key[3]))
        paired = base if base is not None and key[:3] != ("Baseline", "Full", 1) else None
        try:
            st = error_stats(reps, paired)
        except ValueError:
            st = error_stats(reps)
        out.append({
            "mapping": key[0], "schedule": key[1], "groups": key[2], "sigma": key[3],
            "trials": len(reps), "mean_abs_err": st.mean_abs_err, "rmse": st.rmse,
            "p95_err": st.p95_err, "win_rate_vs_baseline": st.win_rate,
            "mean_diff_vs_baseline": st.mean_diff,
        })
    return {"groups": out}
