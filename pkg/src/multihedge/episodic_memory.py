"""Append-only episodic memory with exact cosine top-k retrieval.

Episodes are (state embedding, allocation taken, realized outcome). Outcomes are
filled in once the horizon has elapsed on the run's equity curve, and only
completed episodes are retrievable.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .decision import WEIGHT_KEYS, AllocationDecision
from .errors import ConfigError, InternalError
from .market_data import FEATURE_DIM, CalibrationStats, MarketFeatures


@dataclass(frozen=True)
class Outcome:
    realized_return: float
    realized_max_drawdown: float


@dataclass
class Episode:
    id: int
    date: dt.date
    embedding: np.ndarray
    action: AllocationDecision
    horizon_days: int = 21
    outcome: Outcome | None = None

    def __post_init__(self):
        if self.horizon_days <= 0:
            raise ConfigError("horizon_days must be positive")
        self.embedding = np.asarray(self.embedding, dtype=float)

    @property
    def complete(self) -> bool:
        return self.outcome is not None


def embed(features: MarketFeatures, stats: CalibrationStats) -> np.ndarray:
    """z-score the continuous features; the regime one-hot passes through unscaled."""
    scaled = features.scaled_vector()
    if scaled.shape != stats.mean.shape:
        raise InternalError(f"feature dimension {scaled.shape} does not match calibration {stats.mean.shape}")
    out = np.concatenate([stats.zscore(scaled), np.asarray(features.regime_onehot, dtype=float)])
    if out.shape[0] != FEATURE_DIM or not np.all(np.isfinite(out)):
        raise InternalError("embedding must be finite with fixed dimension")
    return out


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def alignment(w1: Sequence[float], w2: Sequence[float]) -> float:
    """1 - half the L1 distance between two weight vectors on the simplex; in [0, 1]."""
    return 1.0 - 0.5 * float(np.abs(np.asarray(w1, float) - np.asarray(w2, float)).sum())


@dataclass
class MemoryBuffer:
    retrieval_k: int = 5
    retrieval_strength: float = 0.25
    horizon_days: int = 21
    episodes: list[Episode] = field(default_factory=list)
    retrieval_calls: int = 0
    _rows: np.ndarray = field(default_factory=lambda: np.empty((0, FEATURE_DIM)), repr=False)
    _row_norms: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    _row_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64), repr=False)
    _complete_ids: list[int] = field(default_factory=list, repr=False)
    _pending: list[int] = field(default_factory=list, repr=False)
    _by_date: dict = field(default_factory=dict, repr=False)
    _curve: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.retrieval_k < 1 or self.retrieval_strength < 0:
            raise ConfigError("retrieval_k must be >= 1 and retrieval_strength >= 0")
        existing, self.episodes = self.episodes, []
        for ep in existing:
            self._append(ep)

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def next_id(self) -> int:
        return self.episodes[-1].id + 1 if self.episodes else 0

    def completed(self) -> list[Episode]:
        return [self.episodes[i] for i in self._complete_ids]

    def _append(self, ep: Episode) -> None:
        if self.episodes and ep.id <= self.episodes[-1].id:
            raise InternalError(f"episode id {ep.id} is not increasing")
        pos = len(self.episodes)
        self.episodes.append(ep)
        if ep.complete:
            self._index(pos)
        else:
            self._pending.append(pos)

    def _index(self, pos: int) -> None:
        n = len(self._complete_ids)
        emb = self.episodes[pos].embedding
        if n and emb.shape != self._rows.shape[1:]:
            raise InternalError(f"episode {self.episodes[pos].id} embedding has shape {emb.shape}, "
                                f"buffer holds {self._rows.shape[1:]}")
        if n == len(self._rows):
            cap = max(64, 2 * n)
            rows = np.empty((cap, emb.shape[0]))
            if n:
                rows[:n] = self._rows[:n]
            norms = np.empty(cap)
            norms[:n] = self._row_norms[:n]
            ids = np.empty(cap, dtype=np.int64)
            ids[:n] = self._row_ids[:n]
            self._rows, self._row_norms, self._row_ids = rows, norms, ids
        self._rows[n] = emb
        self._row_norms[n] = np.linalg.norm(emb)
        self._row_ids[n] = self.episodes[pos].id
        self._complete_ids.append(pos)

    def retrieve(self, query: Sequence[float], k: int | None = None) -> list[tuple[Episode, float]]:
        return retrieve_top_k(self, query, k)


def retrieve_top_k(buffer: MemoryBuffer, query: Sequence[float], k: int | None = None) -> list[tuple[Episode, float]]:
    """Exact top-k completed episodes by cosine similarity, ties to the older episode."""
    buffer.retrieval_calls += 1
    k = buffer.retrieval_k if k is None else k
    n = len(buffer._complete_ids)
    if n == 0 or k <= 0:
        return []
    q = np.asarray(query, dtype=float)
    denom = buffer._row_norms[:n] * np.linalg.norm(q)
    safe = np.where(denom > 0, denom, 1.0)
    sims = np.where(denom > 0, (buffer._rows[:n] @ q) / safe, 0.0)
    sims = np.clip(sims, -1.0, 1.0)
    k = min(k, n)
    order = np.lexsort((buffer._row_ids[:n], -sims))[:k]
    return [(buffer.episodes[buffer._complete_ids[i]], float(sims[i])) for i in order]


def score_episodes(
    retrieved: Iterable[tuple[Episode, float]],
    candidate_weights: Sequence[float],
    previous_weights: Sequence[float],
    lam: float,
    candidate_exposure: float | None = None,
    previous_exposure: float | None = None,
) -> float:
    """Similarity- and alignment-weighted past return minus an L1 turnover penalty.

    When exposures are given, alignment is additionally multiplied by
    ``1 - |exposure difference|`` and the exposure change joins the turnover.
    """
    cand = np.asarray(candidate_weights, dtype=float)
    total = 0.0
    use_exposure = candidate_exposure is not None
    for ep, sim in retrieved:
        if ep.outcome is None:
            raise InternalError(f"episode {ep.id} has no outcome and cannot be scored")
        align = alignment(cand, ep.action.weight_vector())
        if use_exposure:
            align *= 1.0 - abs(candidate_exposure - ep.action.equity_exposure)
        total += sim * ep.outcome.realized_return * align
    turnover = float(np.abs(cand - np.asarray(previous_weights, dtype=float)).sum())
    if use_exposure and previous_exposure is not None:
        turnover += abs(candidate_exposure - previous_exposure)
    return total - lam * turnover


def window_outcome(values: Sequence[float]) -> Outcome:
    v = np.asarray(values, dtype=float)
    peak = np.maximum.accumulate(v)
    return Outcome(float(v[-1] / v[0] - 1.0), float(((peak - v) / peak).max()))


def store_and_backfill(buffer: MemoryBuffer, new_episode: Episode | None, today: dt.date,
                       equity_curve: Sequence[tuple[dt.date, float]]) -> MemoryBuffer:
    """Append ``new_episode`` and complete every episode whose horizon ended by ``today``.

    ``equity_curve`` is the run's (date, value) history up to and including today.
    Episodes dated outside the curve are left untouched.
    """
    if new_episode is not None:
        if new_episode.outcome is not None:
            raise InternalError("new episodes must not carry an outcome")
        buffer._append(new_episode)
    if not equity_curve:
        return buffer
    if buffer._curve is not equity_curve:
        buffer._curve, buffer._by_date = equity_curve, {}
    pos_of = buffer._by_date
    if len(pos_of) != len(equity_curve):
        for i in range(len(pos_of), len(equity_curve)):
            pos_of[equity_curve[i][0]] = i
    today_pos = pos_of.get(today, len(equity_curve) - 1)
    still = []
    for p in buffer._pending:
        ep = buffer.episodes[p]
        start = pos_of.get(ep.date)
        if start is None or start + ep.horizon_days > today_pos:
            still.append(p)
            continue
        backfill(ep, [v for _, v in equity_curve[start : start + ep.horizon_days + 1]])
        buffer._index(p)
    buffer._pending = still
    return buffer


def backfill(ep: Episode, window_values: Sequence[float]) -> None:
    if ep.outcome is not None:
        raise InternalError(f"episode {ep.id} already has an outcome")
    ep.outcome = window_outcome(window_values)


# --------------------------------------------------------------------------- record file

# one JSON object per line, keys in this order
RECORD_FIELDS = ("id", "date", "horizon_days", "embedding", "weights", "equity_exposure", "source",
                 "realized_return", "realized_max_drawdown")


def episode_to_record(ep: Episode) -> dict:
    return {
        "id": ep.id,
        "date": ep.date.isoformat(),
        "horizon_days": ep.horizon_days,
        "embedding": [float(x) for x in ep.embedding],
        "weights": {k: float(ep.action.weights.get(k, 0.0)) for k in WEIGHT_KEYS},
        "equity_exposure": float(ep.action.equity_exposure),
        "source": ep.action.source,
        "realized_return": None if ep.outcome is None else ep.outcome.realized_return,
        "realized_max_drawdown": None if ep.outcome is None else ep.outcome.realized_max_drawdown,
    }


def episode_from_record(rec: dict) -> Episode:
    outcome = None
    if rec.get("realized_return") is not None:
        outcome = Outcome(float(rec["realized_return"]), float(rec["realized_max_drawdown"]))
    action = AllocationDecision(dict(rec["weights"]), float(rec["equity_exposure"]), rec.get("source", "heuristic"))
    return Episode(int(rec["id"]), dt.date.fromisoformat(rec["date"]), np.asarray(rec["embedding"], float),
                   action, int(rec["horizon_days"]), outcome)


def export_buffer(buffer: MemoryBuffer, path: str | Path, completed_only: bool = True) -> int:
    eps = buffer.completed() if completed_only else buffer.episodes
    eps = sorted(eps, key=lambda e: e.id)
    with Path(path).open("w") as fh:
        for ep in eps:
            fh.write(json.dumps(episode_to_record(ep)) + "\n")
    return len(eps)


def import_buffer(path: str | Path, retrieval_k: int = 5, retrieval_strength: float = 0.25,
                  horizon_days: int = 21) -> MemoryBuffer:
    eps = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                eps.append(episode_from_record(json.loads(line)))
    return MemoryBuffer(retrieval_k, retrieval_strength, horizon_days, eps)


def clone_completed(buffer: MemoryBuffer, **overrides) -> MemoryBuffer:
    """Fresh buffer holding copies of the completed episodes (the warm-start hand-off)."""
    params = dict(retrieval_k=buffer.retrieval_k, retrieval_strength=buffer.retrieval_strength,
                  horizon_days=buffer.horizon_days)
    params.update(overrides)
    eps = [episode_from_record(episode_to_record(e)) for e in buffer.completed()]
    return MemoryBuffer(episodes=eps, **params)

