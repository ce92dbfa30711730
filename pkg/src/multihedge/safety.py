"""Drawdown-triggered override with hysteresis."""

from __future__ import annotations

from dataclasses import dataclass, field

from .decision import WEIGHT_KEYS, AllocationDecision
from .errors import ConfigError


@dataclass(frozen=True)
class SafetyConfig:
    drawdown_threshold: float = 0.10
    release_threshold: float = 0.06
    protective_weights: dict = field(
        default_factory=lambda: {"collar": 0.8, "straddle": 0.0, "delta_neutral": 0.0, "cash": 0.2}
    )
    protective_equity_exposure: float = 0.5

    def validate(self) -> None:
        if not 0 < self.release_threshold < self.drawdown_threshold < 1:
            raise ConfigError("need 0 < release_threshold < drawdown_threshold < 1")
        w = [self.protective_weights.get(k, 0.0) for k in WEIGHT_KEYS]
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError("protective weights must be non-negative and sum to 1")
        if not 0 <= self.protective_equity_exposure <= 1:
            raise ConfigError("protective_equity_exposure must be in [0, 1]")

    def protective_decision(self, drawdown: float) -> AllocationDecision:
        return AllocationDecision(
            {k: float(self.protective_weights.get(k, 0.0)) for k in WEIGHT_KEYS},
            self.protective_equity_exposure,
            "override",
            f"safety override at drawdown {drawdown:.4f}",
        )


@dataclass(frozen=True)
class SafetyVerdict:
    active: bool
    decision: AllocationDecision
    trigger_drawdown: float


def check_and_override(candidate: AllocationDecision, current_drawdown: float, previously_active: bool,
                       config: SafetyConfig = SafetyConfig()) -> SafetyVerdict:
    """Activate above ``drawdown_threshold``; once active, release only below ``release_threshold``."""
    if previously_active:
        active = current_drawdown >= config.release_threshold
    else:
        active = current_drawdown > config.drawdown_threshold
    if active:
        return SafetyVerdict(True, config.protective_decision(current_drawdown), current_drawdown)
    return SafetyVerdict(False, candidate, current_drawdown)
