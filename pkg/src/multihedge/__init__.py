"""Retrieval-conditioned multi-strategy option hedging on a deterministic daily simulator."""

__version__ = "0.1.0"

from .backtest import BacktestConfig, run_backtest, run_baseline, run_per_asset  # noqa: E402
from .decision import AllocationDecision, RegimeLabel  # noqa: E402
from .metrics import MetricsReport, compute_all  # noqa: E402
from .scenarios import SCENARIOS, get_scenario  # noqa: E402

__all__ = [
    "AllocationDecision",
    "BacktestConfig",
    "MetricsReport",
    "RegimeLabel",
    "SCENARIOS",
    "compute_all",
    "get_scenario",
    "run_backtest",
    "run_baseline",
    "run_per_asset",
]
