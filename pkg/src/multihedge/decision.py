"""Allocation decision and regime label types used across the control loop."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

WEIGHT_KEYS = ("collar", "straddle", "delta_neutral", "cash")
SLEEVES = WEIGHT_KEYS[:3]
SOURCES = ("heuristic", "llm", "override", "fallback")


class RegimeLabel(str, enum.Enum):
    CALM = "calm"
    TRENDING = "trending"
    HIGH_VOL = "high_vol"

    @property
    def index(self) -> int:
        return list(RegimeLabel).index(self)

    @classmethod
    def from_index(cls, i: int) -> "RegimeLabel":
        return list(cls)[i]


@dataclass(frozen=True)
class AllocationDecision:
    weights: dict[str, float]
    equity_exposure: float = 1.0
    source: str = "heuristic"
    rationale: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def weight_vector(self) -> tuple[float, ...]:
        return tuple(float(self.weights.get(k, 0.0)) for k in WEIGHT_KEYS)

    def is_valid(self, tol: float = 1e-9) -> bool:
        w = self.weight_vector()
        return (
            set(self.weights) <= set(WEIGHT_KEYS)
            and all(math.isfinite(x) and -tol <= x <= 1 + tol for x in w)
            and abs(sum(w) - 1.0) <= tol
            and 0.0 <= self.equity_exposure <= 1.0
            and self.source in SOURCES
        )

    def to_dict(self) -> dict:
        return {
            "weights": {k: float(self.weights.get(k, 0.0)) for k in WEIGHT_KEYS},
            "equity_exposure": float(self.equity_exposure),
            "source": self.source,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationDecision":
        return cls(
            weights={k: float(d["weights"].get(k, 0.0)) for k in WEIGHT_KEYS},
            equity_exposure=float(d.get("equity_exposure", 1.0)),
            source=d.get("source", "heuristic"),
            rationale=d.get("rationale", ""),
        )


def weights_from_vector(vec) -> dict[str, float]:
    return {k: float(v) for k, v in zip(WEIGHT_KEYS, vec)}


def cash_decision(equity_exposure: float = 1.0, source: str = "heuristic", rationale: str = "") -> AllocationDecision:
    return AllocationDecision(weights_from_vector((0.0, 0.0, 0.0, 1.0)), equity_exposure, source, rationale)
