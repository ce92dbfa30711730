"""Experiment orchestration: single runs, the ablation grid, baselines, summaries."""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Iterable

from .backtest import BacktestConfig, DailyRecord, run_backtest, run_baseline, run_per_asset
from .config import build_config, load_data
from .metrics import TABLE_COLUMNS, TABLE_HEADERS, MetricsReport, fmt

# row order of the ablation table (full system first, memory removal last)
CELLS = ("full", "reduced", "stochastic", "no_memory")
REFERENCE_MD = {"full": 16.22, "no_memory": 46.18}
BASELINES = ("buy_and_hold", "equal_weight")


def cell_label(cell: str, values: dict[str, Any]) -> str:
    return {
        "full": "MultiHedge (heuristic controller)",
        "reduced": f"Reduced controller (k={values['ablation.reduced_k']}, no priors; scale proxy)",
        "stochastic": f"Stochastic (T={values['ablation.temperature']:g})",
        "no_memory": "No Memory",
    }[cell]


def cell_config(base: BacktestConfig, cell: str, temperature: float, reduced_k: int) -> BacktestConfig:
    if cell == "full":
        return replace(base, controller="heuristic", memory_enabled=True, run_id=f"{base.run_id}:full")
    if cell == "no_memory":
        return replace(base, controller="heuristic", memory_enabled=False, run_id=f"{base.run_id}:no_memory")
    if cell == "stochastic":
        return replace(base, controller="stochastic", temperature=temperature, memory_enabled=True,
                       run_id=f"{base.run_id}:stochastic")
    if cell == "reduced":
        return replace(base, controller="heuristic", memory_enabled=True,
                       memory=replace(base.memory, k=reduced_k),
                       controller_params=replace(base.controller_params, use_priors=False),
                       run_id=f"{base.run_id}:reduced")
    raise ValueError(f"unknown ablation cell {cell!r}")


def run_single(values: dict[str, Any], seed: int, data=None, client=None):
    """(config, records keyed by symbol or None for the joint basket, report)."""
    cfg = build_config(values, seed)
    data = load_data(values, seed) if data is None else data
    if cfg.portfolio_mode == "per_asset":
        by_symbol, report = run_per_asset(cfg, data, client=client)
        return cfg, by_symbol, report
    records, report = run_backtest(cfg, data, client=client)
    return cfg, {None: records}, report


def _ablation_seed(job: tuple[dict[str, Any], int]) -> list[dict]:
    values, seed = job
    base = build_config(values, seed)
    data = load_data(values, seed)
    rows = []
    for cell in CELLS:
        cfg = cell_config(base, cell, values["ablation.temperature"], values["ablation.reduced_k"])
        records, report = run_backtest(cfg, data)
        rows.append({
            "cell": cell,
            "seed": seed,
            "metrics": report.to_dict(),
            "retrieval_calls": sum(r.retrieval_calls for r in records),
            "safety_days": sum(1 for r in records if r.safety is not None and r.safety.active),
            "days": len(records),
        })
    return rows


def ablation_seeds(values: dict[str, Any], seed: int | None = None) -> list[int]:
    first = values["ablation.first_seed"] if seed is None else seed
    return list(range(first, first + values["ablation.seeds"]))


def run_ablation(values: dict[str, Any], seeds: Iterable[int], jobs: int = 1) -> list[dict]:
    work = [(values, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_ablation_seed, work))
    else:
        chunks = [_ablation_seed(w) for w in work]
    return [row for chunk in chunks for row in chunk]


def _median(xs: list) -> float | None:
    # undefined metrics (None) are left out rather than counted as zero
    xs = [x for x in xs if x is not None]
    return statistics.median(xs) if xs else None


def summarize_ablation(rows: list[dict], values: dict[str, Any]) -> dict:
    cells = {}
    for cell in CELLS:
        mine = [r for r in rows if r["cell"] == cell]
        cells[cell] = {
            "label": cell_label(cell, values),
            "runs": len(mine),
            "median": {k: _median([r["metrics"][k] for r in mine]) for k in TABLE_COLUMNS},
            "retrieval_calls": sum(r["retrieval_calls"] for r in mine),
        }
    full, nomem = cells["full"]["median"]["md_pct"], cells["no_memory"]["median"]["md_pct"]
    matches = full is not None and nomem is not None and full < nomem
    return {
        "statistic": "median across seeds (undefined values excluded)",
        "seeds": sorted({r["seed"] for r in rows}),
        "cells": cells,
        "md_direction": {
            "full_md_pct": full,
            "no_memory_md_pct": nomem,
            "reference_full_md_pct": REFERENCE_MD["full"],
            "reference_no_memory_md_pct": REFERENCE_MD["no_memory"],
            "matches_reference_direction": matches,
        },
    }


def format_table(rows: list[tuple[str, dict]]) -> str:
    """Fixed-width table in the reference column order; ``rows`` are (label, column -> value)."""
    width = max([len("Configuration")] + [len(label) for label, _ in rows])
    head = "Configuration".ljust(width) + "".join(f"{h:>11}" for h in TABLE_HEADERS)
    lines = [head, "-" * len(head)]
    for label, cols in rows:
        lines.append(label.ljust(width) + "".join(f"{fmt(cols.get(k)):>11}" for k in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def ablation_table(summary: dict) -> str:
    rows = [(c["label"], c["median"]) for c in summary["cells"].values()]
    d = summary["md_direction"]
    verdict = "matches" if d["matches_reference_direction"] else "does NOT match"
    note = (f"median MD full {fmt(d['full_md_pct'])} vs no-memory {fmt(d['no_memory_md_pct'])}: {verdict} the "
            f"reference direction ({d['reference_full_md_pct']} vs {d['reference_no_memory_md_pct']})\n")
    return format_table(rows) + note


def report_row(report: MetricsReport) -> dict:
    return {k: getattr(report, k) for k in TABLE_COLUMNS}


def run_baselines(values: dict[str, Any], seed: int) -> dict[str, tuple[list[DailyRecord], MetricsReport]]:
    cfg = build_config(values, seed)
    data = load_data(values, seed)
    return {kind: run_baseline(kind, cfg, data) for kind in BASELINES}
