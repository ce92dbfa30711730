"""Performance and tail-risk metrics on a daily equity curve.

Conventions: simple daily returns, population standard deviations, sqrt(252)
annualization, zero risk-free rate, historical VaR/CVaR over the worst
ceil((1 - c) * N) returns with losses reported as positive percentages.
Metrics that have no finite value raise ``UndefinedMetricError``;
``compute_all`` carries them as ``None``.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, UndefinedMetricError

ANNUALIZATION = 252
CONFIDENCE = 0.95
SEVERE_DRAWDOWN = 0.10


def _curve(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise DomainError("equity curve needs at least two points")
    if not np.all(v > 0):
        raise DomainError("equity curve values must be positive")
    return v


def simple_returns(values) -> np.ndarray:
    v = _curve(values)
    return v[1:] / v[:-1] - 1.0


def drawdown_series(values) -> np.ndarray:
    v = _curve(values)
    peak = np.maximum.accumulate(v)
    return (peak - v) / peak


def total_return(values) -> float:
    v = _curve(values)
    return float((v[-1] / v[0] - 1.0) * 100.0)


def max_drawdown(values) -> float:
    return float(drawdown_series(values).max()) * 100.0


def _pstd_or_undefined(x: np.ndarray, what: str) -> float:
    if len(x) == 0 or np.ptp(x) == 0.0:
        raise UndefinedMetricError(f"{what}: zero variance")
    return float(x.std())


def sharpe(returns, risk_free_daily: float = 0.0, annualization: int = ANNUALIZATION) -> float:
    r = np.asarray(returns, dtype=float)
    if len(r) < 2:
        raise DomainError("sharpe needs at least two returns")
    excess = r - risk_free_daily
    return float(excess.mean() / _pstd_or_undefined(excess, "sharpe") * math.sqrt(annualization))


def tail_size(n: int, confidence: float) -> int:
    # the epsilon absorbs representation error, e.g. (1 - 0.95) * 20 = 1.0000000000000009
    return int(math.ceil((1.0 - confidence) * n - 1e-9))


def var_cvar(returns, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """(VaR, CVaR) in percent, losses positive."""
    r = np.sort(np.asarray(returns, dtype=float))
    m = tail_size(len(r), confidence)
    if m < 1:
        raise DomainError(f"empty tail for {len(r)} returns at confidence {confidence}")
    tail = r[:m]
    return float(-tail[-1] * 100.0), float(-tail.mean() * 100.0)


def cvar(returns, confidence: float = CONFIDENCE) -> float:
    return var_cvar(returns, confidence)[1]


def value_at_risk(returns, confidence: float = CONFIDENCE) -> float:
    return var_cvar(returns, confidence)[0]


def downside_deviation_daily(returns) -> float:
    r = np.asarray(returns, dtype=float)
    return _pstd_or_undefined(r[r < 0], "downside deviation")


def downside_deviation(returns, annualization: int = ANNUALIZATION) -> float:
    return downside_deviation_daily(returns) * math.sqrt(annualization) * 100.0


def sortino(returns, annualization: int = ANNUALIZATION) -> float:
    r = np.asarray(returns, dtype=float)
    return float(r.mean() / downside_deviation_daily(r) * math.sqrt(annualization))


def annualized_return(values, annualization: int = ANNUALIZATION) -> float:
    v = _curve(values)
    return float((v[-1] / v[0]) ** (annualization / (len(v) - 1)) - 1.0)


def calmar(values, annualization: int = ANNUALIZATION) -> float:
    md = max_drawdown(values)
    if md == 0.0:
        raise UndefinedMetricError("calmar: zero drawdown")
    return annualized_return(values, annualization) / (md / 100.0)


def monthly_returns(values, dates: Sequence[dt.date]) -> dict[tuple[int, int], float]:
    """Compounded return per calendar month; each daily return belongs to its end date's month."""
    r = simple_returns(values)
    if len(dates) != len(r) + 1:
        raise DomainError("dates must align with curve values")
    out: dict[tuple[int, int], float] = {}
    for d, x in zip(dates[1:], r):
        key = (d.year, d.month)
        out[key] = (1.0 + out.get(key, 0.0)) * (1.0 + x) - 1.0
    return out


def worst_month(values, dates: Sequence[dt.date]) -> float:
    months = monthly_returns(values, dates)
    return float(min(months.values()) * 100.0)


def time_in_drawdown(values, threshold: float = SEVERE_DRAWDOWN) -> float:
    dd = drawdown_series(values)
    return float((dd > threshold).mean()) * 100.0


def max_consecutive_losses(returns) -> int:
    best = run = 0
    for x in np.asarray(returns, dtype=float):
        run = run + 1 if x < 0 else 0
        best = max(best, run)
    return best


def auxiliary_metrics(values, dates: Sequence[dt.date] | None, annualization: int = ANNUALIZATION,
                      tdd_threshold: float = SEVERE_DRAWDOWN) -> dict:
    """SoR, CaR, WM, DDv, TDD, MCL; undefined entries are ``None``."""
    r = simple_returns(values)
    return {
        "sortino": _maybe(sortino, r, annualization),
        "calmar": _maybe(calmar, values, annualization),
        "wm_pct": None if dates is None else _maybe(worst_month, values, dates),
        "ddv_pct": _maybe(downside_deviation, r, annualization),
        "tdd_pct": time_in_drawdown(values, tdd_threshold),
        "mcl_days": max_consecutive_losses(r),
    }


def _maybe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


TABLE_COLUMNS = ("sr", "tr_pct", "md_pct", "cvar95_pct", "wm_pct", "ddv_pct")
TABLE_HEADERS = ("SR", "TR (%)", "MD (%)", "CVaR (%)", "WM (%)", "DDv (%)")
REPORT_KEYS = ("sr", "tr_pct", "md_pct", "cvar95_pct", "var95_pct", "sortino", "calmar", "wm_pct",
               "ddv_pct", "tdd_pct", "mcl_days")


@dataclass(frozen=True)
class MetricsReport:
    sr: float | None
    tr_pct: float
    md_pct: float
    cvar95_pct: float | None
    var95_pct: float | None
    sortino: float | None
    calmar: float | None
    wm_pct: float | None
    ddv_pct: float | None
    tdd_pct: float
    mcl_days: int
    confidence: float = CONFIDENCE
    annualization: int = ANNUALIZATION
    risk_free_daily: float = 0.0
    tdd_threshold: float = SEVERE_DRAWDOWN

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in REPORT_KEYS}
        out["conventions"] = {
            "confidence": self.confidence,
            "annualization": self.annualization,
            "risk_free_daily": self.risk_free_daily,
            "tdd_threshold": self.tdd_threshold,
            "cvar_horizon": "daily",
            "stdev": "population",
        }
        return out

    def table_row(self) -> tuple:
        return tuple(getattr(self, k) for k in TABLE_COLUMNS)


def fmt(x) -> str:
    return "n/a" if x is None else f"{x:.2f}"


def compute_all(values, dates: Sequence[dt.date] | None = None, confidence: float = CONFIDENCE,
                annualization: int = ANNUALIZATION, risk_free_daily: float = 0.0,
                tdd_threshold: float = SEVERE_DRAWDOWN) -> MetricsReport:
    v = _curve(values)
    r = simple_returns(v)
    try:
        var95, cvar95 = var_cvar(r, confidence)
    except DomainError:
        var95 = cvar95 = None
    aux = auxiliary_metrics(v, dates, annualization, tdd_threshold)
    return MetricsReport(
        sr=_maybe(sharpe, r, risk_free_daily, annualization) if len(r) >= 2 else None,
        tr_pct=total_return(v),
        md_pct=max_drawdown(v),
        cvar95_pct=cvar95,
        var95_pct=var95,
        confidence=confidence,
        annualization=annualization,
        risk_free_daily=risk_free_daily,
        tdd_threshold=tdd_threshold,
        **aux,
    )
