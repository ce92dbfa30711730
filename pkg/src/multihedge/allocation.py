"""Allocation controller: regime label, retrieval-conditioned argmax, validation.

A decision producer is any callable ``producer(ctx) -> AllocationDecision``.
Three are provided: the deterministic heuristic, an HTTP model adapter with a
mandatory fallback, and a seeded-noise wrapper used for the temperature ablation.
Whatever a producer returns, ``validate_decision`` is applied before execution.
"""

from __future__ import annotations

import datetime as dt
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import httpx
import jsonschema
import numpy as np

from .decision import WEIGHT_KEYS, AllocationDecision, RegimeLabel, cash_decision, weights_from_vector
from .episodic_memory import Episode
from .errors import ConfigError
from .market_data import SCALED_FEATURES, MarketFeatures

log = logging.getLogger(__name__)

GRID_STEPS = 10


@dataclass(frozen=True)
class DecisionConstraints:
    hedge_budget_fraction: float = 0.10
    max_single_sleeve: float = 0.60
    liquidity_cap: float = 0.10
    max_equity_exposure: float = 1.0

    def validate(self) -> None:
        for name, value in asdict(self).items():
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"constraints.{name} must be in (0, 1], got {value}")
        if self.max_single_sleeve < 1.0 / 3.0:
            raise ConfigError("max_single_sleeve must be >= 1/3")


DEFAULT_PRIORS = {
    "calm": (0.1, 0.0, 0.1, 0.8),
    "trending": (0.5, 0.1, 0.1, 0.3),
    "high_vol": (0.1, 0.5, 0.2, 0.2),
}


@dataclass(frozen=True)
class ControllerParams:
    vol_threshold: float = 0.25
    trend_threshold: float = 0.001
    priors: dict = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    prior_exposure: float = 1.0
    use_priors: bool = True
    retrieval_strength: float = 0.25
    exposure_grid: bool = True


@dataclass(frozen=True)
class DecisionContext:
    date: dt.date
    features: MarketFeatures
    regime: RegimeLabel
    retrieved: list
    previous: AllocationDecision
    run_id: str = ""


Producer = Callable[[DecisionContext], AllocationDecision]


def classify_regime(features: MarketFeatures, vol_threshold: float = 0.25,
                    trend_threshold: float = 0.001) -> RegimeLabel:
    if features.realized_vol_21d > vol_threshold:
        return RegimeLabel.HIGH_VOL
    if abs(features.trend_21d) > trend_threshold:
        return RegimeLabel.TRENDING
    return RegimeLabel.CALM


# --------------------------------------------------------------------------- candidate grid


@lru_cache(maxsize=32)
def candidate_grid(max_single_sleeve: float = 0.6, max_equity_exposure: float = 1.0,
                   with_exposure: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Simplex lattice (step 0.1) within the sleeve cap, times an exposure lattice.

    Rows are in ascending lexicographic order of (collar, straddle, delta_neutral,
    cash, exposure), so the first maximum is the lexicographically smallest.
    """
    cap = int(math.floor(max_single_sleeve * GRID_STEPS + 1e-9))
    e_max = int(math.floor(max_equity_exposure * GRID_STEPS + 1e-9))
    exposures = range(e_max + 1) if with_exposure else [e_max]
    rows = []
    for c, s, d in itertools.product(range(GRID_STEPS + 1), repeat=3):
        cash = GRID_STEPS - c - s - d
        if cash < 0 or max(c, s, d) > cap:
            continue
        for e in exposures:
            rows.append((c, s, d, cash, e))
    rows.sort()
    arr = np.asarray(rows, dtype=float) / GRID_STEPS
    weights, exposure = arr[:, :4], arr[:, 4]
    weights.setflags(write=False)
    exposure.setflags(write=False)
    return weights, exposure


def grid_scores(retrieved, weights: np.ndarray, exposure: np.ndarray, previous: AllocationDecision,
                lam: float, use_exposure: bool = True) -> np.ndarray:
    """Vectorized ``score_episodes`` over every grid row."""
    prev_w = np.asarray(previous.weight_vector())
    turnover = np.abs(weights - prev_w).sum(axis=1)
    if use_exposure:
        turnover = turnover + np.abs(exposure - previous.equity_exposure)
    if not retrieved:
        return -lam * turnover
    ep_w = np.array([ep.action.weight_vector() for ep, _ in retrieved])
    ep_e = np.array([ep.action.equity_exposure for ep, _ in retrieved])
    gain = np.array([sim * ep.outcome.realized_return for ep, sim in retrieved])
    align = 1.0 - 0.5 * np.abs(weights[:, None, :] - ep_w[None, :, :]).sum(axis=2)
    if use_exposure:
        align = align * (1.0 - np.abs(exposure[:, None] - ep_e[None, :]))
    return align @ gain - lam * turnover


def first_argmax(scores: np.ndarray, tol: float = 1e-12) -> int:
    best = scores.max()
    return int(np.flatnonzero(scores >= best - tol * max(1.0, abs(best)))[0])


def prior_decision(regime: RegimeLabel, params: ControllerParams,
                   constraints: DecisionConstraints) -> AllocationDecision:
    exposure = min(params.prior_exposure, constraints.max_equity_exposure)
    if not params.use_priors:
        return cash_decision(exposure, "heuristic", "no retrieval; neutral default")
    w = params.priors[regime.value]
    return AllocationDecision(weights_from_vector(w), exposure, "heuristic",
                              f"no retrieval; {regime.value} prior")


def heuristic_allocate(features: MarketFeatures, regime: RegimeLabel, retrieved: Sequence[tuple[Episode, float]],
                       previous: AllocationDecision, params: ControllerParams = ControllerParams(),
                       constraints: DecisionConstraints = DecisionConstraints()) -> AllocationDecision:
    if not retrieved:
        return prior_decision(regime, params, constraints)
    weights, exposure = candidate_grid(constraints.max_single_sleeve, constraints.max_equity_exposure,
                                       params.exposure_grid)
    scores = grid_scores(retrieved, weights, exposure, previous, params.retrieval_strength, params.exposure_grid)
    i = first_argmax(scores)
    best_w = weights_from_vector(weights[i])
    e = float(exposure[i]) if params.exposure_grid else min(params.prior_exposure, constraints.max_equity_exposure)
    return AllocationDecision(
        best_w, e, "heuristic",
        f"argmax over {len(scores)} candidates from {len(retrieved)} episodes (score {scores[i]:.6g})",
        meta={"score": float(scores[i])},
    )


def heuristic_producer(params: ControllerParams, constraints: DecisionConstraints) -> Producer:
    def produce(ctx: DecisionContext) -> AllocationDecision:
        return heuristic_allocate(ctx.features, ctx.regime, ctx.retrieved, ctx.previous, params, constraints)

    return produce


# --------------------------------------------------------------------------- validation


def validate_decision(raw: AllocationDecision, constraints: DecisionConstraints) -> AllocationDecision:
    """Project ``raw`` onto the feasible set, logging each adjustment in the rationale."""
    notes = []
    w = np.array([raw.weights.get(k, 0.0) for k in WEIGHT_KEYS], dtype=float)
    bad = ~np.isfinite(w)
    if bad.any():
        w[bad] = 0.0
        notes.append("non-finite weights set to 0")
    if (w < 0).any():
        w = np.maximum(w, 0.0)
        notes.append("negative weights clipped")
    total = w.sum()
    if total <= 0.0:
        exposure = _clamp_exposure(raw.equity_exposure, constraints)
        return AllocationDecision(weights_from_vector((0, 0, 0, 1)), exposure, raw.source,
                                  _join(raw.rationale, "degenerate: all-zero weights, pure cash"),
                                  meta={**raw.meta, "degenerate": True})
    if abs(total - 1.0) > 1e-12:
        w = w / total
        notes.append(f"renormalized from sum {total:.6g}")
    cap = constraints.max_single_sleeve
    clipped = np.zeros(4, dtype=bool)
    # cash (index 3) is uncapped and always a recipient
    for _ in range(8):
        over = np.zeros(4, dtype=bool)
        over[:3] = w[:3] > cap + 1e-12
        if not over.any():
            break
        excess = float((w[over] - cap).sum())
        w[over] = cap
        clipped |= over
        recipients = ~clipped
        mass = w[recipients].sum()
        if mass > 0:
            w[recipients] += excess * w[recipients] / mass
        else:
            w[3] += excess
        notes.append(f"capped {[WEIGHT_KEYS[i] for i in np.flatnonzero(over)]} at {cap}")
    w[:3] = np.minimum(w[:3], cap)
    w[3] = 1.0 - w[:3].sum()
    exposure = _clamp_exposure(raw.equity_exposure, constraints)
    if exposure != raw.equity_exposure:
        notes.append(f"equity_exposure clamped to {exposure}")
    if not notes:
        return raw
    return AllocationDecision(weights_from_vector(w), exposure, raw.source, _join(raw.rationale, "; ".join(notes)),
                              meta=raw.meta)


def _clamp_exposure(e: float, constraints: DecisionConstraints) -> float:
    if not math.isfinite(e):
        return 0.0
    return float(min(max(e, 0.0), constraints.max_equity_exposure))


def _join(a: str, b: str) -> str:
    return f"{a} | {b}" if a else b


# --------------------------------------------------------------------------- stochastic ablation


def stochastic_wrap(producer: Producer, temperature: float, seed: int) -> Producer:
    """Seeded Gaussian noise (stdev 0.1 * temperature) on every weight; identity at 0."""
    if temperature < 0:
        raise ConfigError("temperature must be >= 0")
    if temperature == 0:
        return producer
    rng = np.random.default_rng(seed)
    scale = 0.1 * temperature

    def produce(ctx: DecisionContext) -> AllocationDecision:
        d = producer(ctx)
        noisy = np.asarray(d.weight_vector()) + rng.normal(0.0, scale, size=len(WEIGHT_KEYS))
        return AllocationDecision(weights_from_vector(noisy), d.equity_exposure, d.source,
                                  _join(d.rationale, f"noise T={temperature}"), meta=d.meta)

    return produce


# --------------------------------------------------------------------------- model adapter

RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["regime_label", "weights", "equity_exposure", "rationale"],
    "properties": {
        "regime_label": {"enum": [r.value for r in RegimeLabel]},
        "weights": {
            "type": "object",
            "required": list(WEIGHT_KEYS),
            "properties": {k: {"type": "number"} for k in WEIGHT_KEYS},
        },
        "equity_exposure": {"type": "number"},
        "rationale": {"type": "string"},
    },
}


def build_request(ctx: DecisionContext, constraints: DecisionConstraints, temperature: float = 0.0) -> dict:
    return {
        "run_id": ctx.run_id,
        "date": ctx.date.isoformat(),
        "features": {name: float(getattr(ctx.features, name)) for name in SCALED_FEATURES}
        | {f"regime_{r.value}": int(v) for r, v in zip(RegimeLabel, ctx.features.regime_onehot)},
        "regime": ctx.regime.value,
        "constraints": asdict(constraints),
        "episodes": [
            {
                "date": ep.date.isoformat(),
                "weights": {k: float(ep.action.weights.get(k, 0.0)) for k in WEIGHT_KEYS},
                "realized_return": ep.outcome.realized_return,
                "realized_max_drawdown": ep.outcome.realized_max_drawdown,
                "similarity": float(sim),
            }
            for ep, sim in ctx.retrieved
        ],
        "previous_weights": {k: float(ctx.previous.weights.get(k, 0.0)) for k in WEIGHT_KEYS},
        "temperature": float(temperature),
    }


def parse_response(doc: dict) -> AllocationDecision:
    jsonschema.validate(doc, RESPONSE_SCHEMA)
    return AllocationDecision(
        weights={k: float(doc["weights"][k]) for k in WEIGHT_KEYS},
        equity_exposure=float(doc["equity_exposure"]),
        source="llm",
        rationale=doc["rationale"],
        meta={"regime_label": doc["regime_label"]},
    )


def llm_allocate(endpoint: str, request: dict, timeout: float, fallback: AllocationDecision,
                 client: httpx.Client | None = None, api_key: str | None = None) -> AllocationDecision:
    """POST ``request`` to ``endpoint``; any failure yields ``fallback`` marked as such."""
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    try:
        if client is None:
            with httpx.Client(timeout=timeout) as c:
                resp = c.post(endpoint, json=request, headers=headers)
        else:
            resp = client.post(endpoint, json=request, headers=headers, timeout=timeout)
        resp.raise_for_status()
        return parse_response(resp.json())
    except (httpx.HTTPError, json.JSONDecodeError, jsonschema.ValidationError, ValueError, TypeError, KeyError) as exc:
        log.warning("model exchange failed (%s: %s); using fallback", type(exc).__name__, exc)
        return AllocationDecision(fallback.weights, fallback.equity_exposure, "fallback",
                                  _join(fallback.rationale, f"fallback after {type(exc).__name__}"),
                                  meta=fallback.meta)


def llm_producer(endpoint: str, timeout: float, fallback_producer: Producer, constraints: DecisionConstraints,
                 temperature: float = 0.0, client: httpx.Client | None = None,
                 api_key: str | None = None) -> Producer:
    def produce(ctx: DecisionContext) -> AllocationDecision:
        request = build_request(ctx, constraints, temperature)
        return llm_allocate(endpoint, request, timeout, fallback_producer(ctx), client, api_key)

    return produce

