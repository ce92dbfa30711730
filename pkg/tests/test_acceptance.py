"""The ten acceptance criteria, one test each.

Every test records a single ``criterion N: PASS|FAIL ...`` line that is printed
in the terminal summary, then asserts the criterion at its stated tolerance.
"""

import datetime as dt
import json
import math
import statistics
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE, random_curve, small_config, small_data
from multihedge import config as C
from multihedge.allocation import (
    ControllerParams,
    DecisionConstraints,
    DecisionContext,
    heuristic_producer,
    stochastic_wrap,
    validate_decision,
)
from multihedge.backtest import ZERO_COSTS, run_backtest, run_baseline
from multihedge.cli import main
from multihedge.decision import AllocationDecision, RegimeLabel, cash_decision, weights_from_vector
from multihedge.episodic_memory import Episode, MemoryBuffer, Outcome, retrieve_top_k
from multihedge.experiments import cell_config
from multihedge.hedge_agents import AgentParams, apply_orders, collar_step
from multihedge.market_data import MarketFeatures, PriceSeries, business_days, compute_features
from multihedge.metrics import REPORT_KEYS, compute_all
from multihedge.option_pricing import PricingInputs, delta, mark, payoff_at_expiry, price, year_fraction
from multihedge.scenarios import CRASH, THREE_REGIME

REPO = Path(__file__).resolve().parents[1]


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


# --------------------------------------------------------------------------- 1


def test_criterion_1_metric_oracles():
    rng = np.random.default_rng(20240101)
    t0 = time.perf_counter()
    worst = 0.0
    mismatches = 0
    for _ in range(1000):
        values, dates = random_curve(rng, int(rng.integers(30, 2001)))
        got = compute_all(values, dates).to_dict()
        want = oracles.all_metrics(values, dates)
        for k in REPORT_KEYS:
            a, b = got[k], want[k]
            if a is None or b is None:
                mismatches += (a is None) != (b is None)
                continue
            err = abs(a - b) / max(1.0, abs(b))
            worst = max(worst, err)
            mismatches += err > 1e-9
    elapsed = time.perf_counter() - t0
    verdict(1, mismatches == 0 and elapsed < 30,
            f"1000 series x 11 metrics, {mismatches} mismatches, worst scaled error {worst:.1e}, {elapsed:.1f}s")


# --------------------------------------------------------------------------- 2


def test_criterion_2_pricing_kernel():
    rng = np.random.default_rng(2)
    parity = fd = 0.0
    for _ in range(1000):
        s, k = rng.uniform(20, 300, size=2)
        t, v, r = rng.uniform(0.01, 3.0), rng.uniform(0.05, 1.0), rng.uniform(-0.02, 0.08)
        p = PricingInputs(float(s), float(k), float(t), float(v), float(r))
        parity = max(parity, abs(price(p, "call") - price(p, "put") - (s - k * math.exp(-r * t))))
        h = 1e-4 * s
        up, dn = replace(p, spot=s + h), replace(p, spot=s - h)
        for kind in ("call", "put"):
            fd = max(fd, abs(delta(p, kind) - (price(up, kind) - price(dn, kind)) / (2 * h)))
    atm = price(PricingInputs(100, 100, 1.0, 0.2, 0.0), "call")
    oracle = oracles.bs_price(100, 100, 1.0, 0.2, 0.0, "call")
    ok = parity <= 1e-9 and fd <= 1e-6 and abs(atm - 7.9656) <= 1e-3 and abs(atm - oracle) <= 1e-12
    verdict(2, ok, f"parity {parity:.1e}, delta vs differences {fd:.1e}, ATM call {atm:.6f}")


# --------------------------------------------------------------------------- 3


def test_criterion_3_retrieval_exact():
    rng = np.random.default_rng(3)
    action = cash_decision()
    outcome = Outcome(0.0, 0.0)
    day = dt.date(2020, 1, 1)
    elapsed = 0.0
    wrong = 0
    for b in range(100):
        n = 10_000 if b == 0 else int(rng.integers(1, 10_001))
        embs = rng.normal(size=(n, 10))
        if n > 10:
            embs[rng.integers(0, n, size=n // 20)] = embs[n // 2]
        buf = MemoryBuffer(retrieval_k=5, episodes=[Episode(i, day, e, action, 21, outcome) for i, e in enumerate(embs)])
        q = embs[n // 2] if b % 4 == 0 else rng.normal(size=10)
        k = int(rng.integers(1, 21))
        t0 = time.perf_counter()
        got = [e.id for e, _ in retrieve_top_k(buf, q, k)]
        elapsed += time.perf_counter() - t0
        want = [i for i, _ in oracles.top_k(list(enumerate(embs.tolist())), q.tolist(), k)]
        wrong += got != want
    verdict(3, wrong == 0 and elapsed < 10,
            f"100 buffers up to 10000 episodes, {wrong} differing, retrieval time {elapsed:.2f}s")


# --------------------------------------------------------------------------- 4


def test_criterion_4_determinism(tmp_path):
    cfg = REPO / "configs" / "three_regime.cfg"
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["run", "--config", str(cfg), "--out", str(a)])
    main(["run", "--config", str(a / "manifest.json"), "--out", str(b)])
    same = all((a / f).read_bytes() == (b / f).read_bytes() for f in ("records.jsonl", "metrics.json"))

    stoch = tmp_path / "stoch.cfg"
    stoch.write_text(cfg.read_text() + "backtest.controller = stochastic\nbacktest.temperature = 0.7\n")
    main(["run", "--config", str(stoch), "--out", str(c / "1"), "--seed", "11"])
    main(["run", "--config", str(stoch), "--out", str(c / "2"), "--seed", "11"])
    same_stoch = all((c / "1" / f).read_bytes() == (c / "2" / f).read_bytes()
                     for f in ("records.jsonl", "metrics.json"))

    cons = DecisionConstraints()
    base = heuristic_producer(ControllerParams(), cons)
    ep = Episode(0, dt.date(2021, 1, 4), np.ones(10),
                 AllocationDecision(weights_from_vector((0.3, 0.2, 0.1, 0.4)), 0.8), 21, Outcome(0.02, 0.01))
    ctx = DecisionContext(dt.date(2021, 2, 1), MarketFeatures(0, 0, 0, 0.1, 0.1, 0, 0), RegimeLabel.CALM,
                          [(ep, 0.9)], cash_decision(), "det")
    w = np.array([validate_decision(stochastic_wrap(base, 0.7, s)(ctx), cons).weight_vector() for s in range(100)])
    var = w.var(axis=0)
    ok = same and same_stoch and bool(np.all(var[:3] > 0))
    verdict(4, ok, f"manifest replay identical={same}, stochastic seed identical={same_stoch}, "
                   f"sleeve weight variances over 100 seeds {np.round(var, 5).tolist()}")


# --------------------------------------------------------------------------- 5


def test_criterion_5_safety_containment():
    values = C.load(REPO / "configs" / "crash.cfg")
    threshold = values["safety.drawdown_threshold"] * 100
    t0 = time.perf_counter()
    on, off = [], []
    for seed in range(20):
        data, _ = CRASH.generate(seed)
        cfg = C.build_config(values, seed)
        on.append(run_backtest(cfg, data)[1].md_pct)
        off.append(run_backtest(replace(cfg, safety_enabled=False), data)[1].md_pct)
    elapsed = time.perf_counter() - t0
    bound = [m <= threshold + 5 for m in on]
    better = [a < b for a, b in zip(on, off)]
    ok = all(bound) and all(better) and elapsed < 60
    verdict(5, ok, f"20 crash seeds: MD <= {threshold + 5:.0f}% on {sum(bound)}/20, safety-on < safety-off on "
                   f"{sum(better)}/20, median MD on {statistics.median(on):.2f}% vs off "
                   f"{statistics.median(off):.2f}%, {elapsed:.1f}s")


# --------------------------------------------------------------------------- 6


def test_criterion_6_collar_bound():
    rng = np.random.default_rng(6)
    params = AgentParams()
    today = dt.date(2021, 3, 1)
    feat = MarketFeatures(0, 0, 0, 0.2, 0.2, 0, 0)
    violations = 0
    for _ in range(1000):
        s0, vol = float(rng.uniform(20, 400)), float(rng.uniform(0.05, 0.9))
        notional = float(rng.integers(1, 50)) * s0 * params.multiplier * 1.001
        legs = apply_orders([], collar_step(feat, s0, notional, [], today, params, symbol="X").orders)
        put = next(c for c in legs if c.kind == "put")
        call = next(c for c in legs if c.kind == "call")
        shares = put.contracts * params.multiplier
        premium = sum(mark(c, s0, today, vol) * c.contracts * c.multiplier for c in legs) / shares
        path = s0 * np.exp(np.cumsum(rng.normal(-0.5 * vol**2 / 252, vol / math.sqrt(252), size=63)))
        s_t = float(path[-1])
        value = s_t + sum(payoff_at_expiry(c, s_t) for c in legs) / shares - premium
        if not put.strike - premium - 1e-9 <= value <= call.strike - premium + 1e-9:
            violations += 1
    verdict(6, violations == 0, f"1000 paths, {violations} terminal values outside [floor, cap] net of premium")


# --------------------------------------------------------------------------- 7


@pytest.mark.slow
def test_criterion_7_ablation_direction():
    values = C.load(REPO / "configs" / "ablation.cfg")
    seeds = list(range(values["ablation.first_seed"], values["ablation.first_seed"] + values["ablation.seeds"]))
    t0 = time.perf_counter()
    md = {"full": [], "no_memory": []}
    sr = {"full": [], "no_memory": []}
    for seed in seeds:
        data, _ = THREE_REGIME.generate(seed)
        base = C.build_config(values, seed)
        for cell in md:
            rep = run_backtest(cell_config(base, cell, values["ablation.temperature"], values["ablation.reduced_k"]),
                               data)[1]
            md[cell].append(rep.md_pct)
            sr[cell].append(rep.sr)
    elapsed = time.perf_counter() - t0
    med = {k: {"md": statistics.median(md[k]), "sr": statistics.median(sr[k])} for k in md}
    md_ok = med["full"]["md"] < med["no_memory"]["md"]
    sr_ok = med["full"]["sr"] > med["no_memory"]["sr"]
    # informational only: with an even seed count the lower median can flip the SR ordering
    low_sr = (statistics.median_low(sr["full"]), statistics.median_low(sr["no_memory"]))
    verdict(7, md_ok and sr_ok and elapsed < 300,
            f"{len(seeds)} seeds, median MD {med['full']['md']:.2f}% (memory) vs {med['no_memory']['md']:.2f}% "
            f"(none) [{'ok' if md_ok else 'wrong direction'}], median SR {med['full']['sr']:.3f} vs "
            f"{med['no_memory']['sr']:.3f} [{'ok' if sr_ok else 'wrong direction'}] "
            f"(lower-median SR {low_sr[0]:.3f} vs {low_sr[1]:.3f}), {elapsed:.0f}s")


# --------------------------------------------------------------------------- 8


def _dump(records):
    return [json.dumps(r.to_dict(), sort_keys=True) for r in records]


def test_criterion_8_no_lookahead():
    data = small_data(8)
    series = data["SYN"]
    full, _ = run_backtest(small_config(seed=8), data)
    rng = np.random.default_rng(88)
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, len(full) - 1), size=10, replace=False))
    bad = []
    for cut in cuts:
        end = series.index_of[full[cut].date]
        part, _ = run_backtest(small_config(seed=8), {"SYN": PriceSeries("SYN", series.bars[: end + 1])})
        if len(part) != cut + 1 or _dump(part) != _dump(full[: cut + 1]):
            bad.append(cut)
    verdict(8, not bad, f"10 truncation points {cuts}, {len(bad)} with differing prefixes")


# --------------------------------------------------------------------------- 9


def test_criterion_9_accounting_identity():
    runs = []
    for seed in range(3):
        runs.append((small_config(seed=seed), small_data(seed)))
    runs.append((small_config(controller="stochastic", temperature=0.7, seed=4), small_data(4)))
    crash_values = C.load(REPO / "configs" / "crash.cfg")
    runs.append((C.build_config(crash_values, 0), CRASH.generate(0)[0]))
    worst = 0.0
    days = 0
    for cfg, data in runs:
        series = data[cfg.symbols[0]]
        prev = cfg.initial_capital
        for r in run_backtest(cfg, data)[0]:
            t = series.index_of[r.date]
            spot = series.closes[t]
            vol = compute_features(series, t).realized_vol_21d
            opt = 0.0
            for pos in r.positions:
                _, kind, strike, expiry, mult = pos["instrument"].split(":")
                tau = year_fraction(r.date, dt.date.fromisoformat(expiry))
                opt += pos["contracts"] * int(mult) * oracles.bs_price(spot, float(strike), tau, vol, 0.0, kind)
            worst = max(worst,
                        abs(r.value - prev - (r.equity_pnl + r.option_pnl - r.costs)),
                        abs(r.cash + sum(r.shares.values()) * spot + opt - r.value))
            prev = r.value
            days += 1
    verdict(9, worst <= 1e-6, f"{len(runs)} runs, {days} days, worst discrepancy {worst:.2e} currency units")


# --------------------------------------------------------------------------- 10


def test_criterion_10_baselines():
    cfg = small_config(costs=ZERO_COSTS)
    dates = business_days(dt.date(2019, 1, 1), 460)
    ev = [i for i, d in enumerate(dates) if cfg.eval_start <= d <= cfg.eval_end]
    rng = np.random.default_rng(10)
    closes = 40.0 * np.exp(np.cumsum(rng.normal(0, 0.01, size=460)))
    closes[ev[-1]] = closes[ev[0]] * 1.37
    path = PriceSeries.from_closes("SYN", dates, closes.tolist(), volume=1e9)
    _, bh = run_baseline("buy_and_hold", cfg, {"SYN": path})
    tr_ok = abs(bh.tr_pct - 37.0) <= 1e-9

    two = {**small_data(1, "A"), **small_data(2, "B")}
    records, _ = run_baseline("equal_weight", small_config(symbols=("A", "B")), two)
    trade_days = [r.date for r in records if r.orders]
    month_starts = [r.date for prev, r in zip([None] + records[:-1], records)
                    if prev is None or (prev.date.year, prev.date.month) != (r.date.year, r.date.month)]
    ew_ok = trade_days == month_starts
    verdict(10, tr_ok and ew_ok, f"buy-and-hold TR {bh.tr_pct:.12f}% (expected 37%), equal-weight traded on "
                                 f"{len(trade_days)} days, all month starts={ew_ok}")
