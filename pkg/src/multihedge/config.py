"""Flat ``key = value`` configuration with dotted section prefixes.

Every recognised key lives in ``KEYS`` with its default and a one-line
description; ``render_defaults`` prints that registry as a config file.
Unknown keys, malformed lines and unparsable values raise ``ConfigError``
naming the line. Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .allocation import DEFAULT_PRIORS, ControllerParams, DecisionConstraints
from .backtest import BacktestConfig, CostModel, LlmConfig, MemoryConfig
from .decision import WEIGHT_KEYS
from .errors import ConfigError, DataError
from .hedge_agents import AgentParams
from .market_data import PriceSeries, load_csv
from .safety import SafetyConfig
from .scenarios import get_scenario


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def _str(text: str) -> str:
    return text.strip()


def _list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _vector(text: str) -> tuple[float, ...]:
    vals = tuple(float(p) for p in text.split(","))
    if len(vals) != len(WEIGHT_KEYS):
        raise ValueError(f"expected {len(WEIGHT_KEYS)} comma-separated weights")
    return vals


def _weight_map(text: str) -> dict[str, float]:
    out = {k: 0.0 for k in WEIGHT_KEYS}
    for part in _list(text):
        name, _, val = part.partition(":")
        name = name.strip()
        if name not in out or not val:
            raise ValueError(f"bad weight entry {part!r}; use name:value with names {WEIGHT_KEYS}")
        out[name] = float(val)
    return out


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, dict):
        return ", ".join(f"{k}:{_num(v)}" for k, v in value.items())
    if isinstance(value, tuple):
        return ", ".join(_num(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return _num(value)
    return str(value)


def _num(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Key:
    name: str
    default: Any
    parse: Callable[[str], Any]
    doc: str


_B = BacktestConfig()
_C = CostModel()
_K = DecisionConstraints()
_M = MemoryConfig()
_S = SafetyConfig()
_A = AgentParams()
_P = ControllerParams()
_L = LlmConfig()

KEYS: tuple[Key, ...] = (
    Key("run.id", "run", _str, "run identifier echoed into records and model requests"),
    Key("run.seed", 0, int, "seed for synthetic data and the stochastic controller (--seed overrides)"),
    Key("data.source", "scenario", _str, "'scenario' (bundled synthetic data) or 'csv'"),
    Key("data.scenario", "three_regime", _str, "bundled scenario name: three_regime or crash"),
    Key("data.dir", "data", _str, "directory holding <SYMBOL>.csv files when data.source = csv"),
    Key("backtest.symbols", ("SYN",), _list, "comma-separated tickers (scenarios provide SYN)"),
    Key("backtest.calib_start", None, _date, "calibration window start; empty uses the scenario's window"),
    Key("backtest.calib_end", None, _date, "calibration window end"),
    Key("backtest.eval_start", None, _date, "evaluation window start"),
    Key("backtest.eval_end", None, _date, "evaluation window end"),
    Key("backtest.initial_capital", _B.initial_capital, float, "starting cash"),
    Key("backtest.controller", _B.controller, _str, "heuristic, stochastic or llm"),
    Key("backtest.memory_enabled", _B.memory_enabled, _bool, "episodic retrieval on/off"),
    Key("backtest.safety_enabled", _B.safety_enabled, _bool, "drawdown override on/off"),
    Key("backtest.warm_start", _B.warm_start, _bool, "replay the calibration window to fill memory"),
    Key("backtest.temperature", _B.temperature, float, "noise temperature of the stochastic controller"),
    Key("backtest.rate", _B.rate, float, "continuously compounded risk-free rate for option marks"),
    Key("backtest.margin_floor", _B.margin_floor, float, "cash may fall to -margin_floor x value"),
    Key("backtest.rebalance_band", _B.rebalance_band, float, "skip basket trades smaller than this fraction of value"),
    Key("backtest.portfolio_mode", _B.portfolio_mode, _str, "joint (one basket) or per_asset (independent runs)"),
    Key("costs.equity_bps", _C.equity_bps, float, "equity commission in basis points of notional"),
    Key("costs.per_contract_fee", _C.per_contract_fee, float, "option fee per contract"),
    Key("costs.option_bps", _C.option_bps, float, "option cost in basis points of premium notional"),
    Key("constraints.hedge_budget_fraction", _K.hedge_budget_fraction, float, "max estimated premium / value"),
    Key("constraints.max_single_sleeve", _K.max_single_sleeve, float, "cap on any single sleeve weight"),
    Key("constraints.liquidity_cap", _K.liquidity_cap, float, "max traded notional / 21-day dollar volume"),
    Key("constraints.max_equity_exposure", _K.max_equity_exposure, float, "cap on equity exposure"),
    Key("memory.k", _M.k, int, "episodes retrieved per day"),
    Key("memory.retrieval_strength", _M.retrieval_strength, float, "turnover penalty weight in episode scoring"),
    Key("memory.horizon_days", _M.horizon_days, int, "outcome horizon in trading days"),
    Key("safety.drawdown_threshold", _S.drawdown_threshold, float, "activate the override above this drawdown"),
    Key("safety.release_threshold", _S.release_threshold, float, "release once drawdown falls below this"),
    Key("safety.protective_weights", dict(_S.protective_weights), _weight_map, "override weights, name:value"),
    Key("safety.protective_equity_exposure", _S.protective_equity_exposure, float, "override equity exposure"),
    Key("agents.put_strike_offset", _A.put_strike_offset, float, "collar put strike / spot"),
    Key("agents.call_strike_offset", _A.call_strike_offset, float, "collar call strike / spot"),
    Key("agents.straddle_strike_offset", _A.straddle_strike_offset, float, "straddle strike / spot"),
    Key("agents.tenor_days", _A.tenor_days, int, "option tenor in trading days"),
    Key("agents.roll_window_days", _A.roll_window_days, int, "roll legs with this many days or fewer left"),
    Key("agents.delta_tolerance", _A.delta_tolerance, float, "delta dead-band as a fraction of sleeve notional"),
    Key("agents.multiplier", _A.multiplier, int, "shares per option contract"),
    Key("controller.vol_threshold", _P.vol_threshold, float, "annualized 21-day vol above which the regime is high_vol"),
    Key("controller.trend_threshold", _P.trend_threshold, float, "|mean daily return| above which the regime is trending"),
    Key("controller.prior_exposure", _P.prior_exposure, float, "equity exposure used without retrieval"),
    Key("controller.use_priors", _P.use_priors, _bool, "regime priors when retrieval is empty (else all cash)"),
    Key("controller.exposure_grid", _P.exposure_grid, _bool, "let retrieval scoring choose equity exposure too"),
    Key("controller.prior.calm", DEFAULT_PRIORS["calm"], _vector, "collar, straddle, delta_neutral, cash"),
    Key("controller.prior.trending", DEFAULT_PRIORS["trending"], _vector, "collar, straddle, delta_neutral, cash"),
    Key("controller.prior.high_vol", DEFAULT_PRIORS["high_vol"], _vector, "collar, straddle, delta_neutral, cash"),
    Key("llm.endpoint", _L.endpoint, _str, "HTTP endpoint of the optional model service"),
    Key("llm.timeout", _L.timeout, float, "request timeout in seconds"),
    Key("llm.api_key_env", _L.api_key_env, _str, "name of the environment variable holding the credential"),
    Key("ablation.seeds", 20, int, "number of seeds per ablation cell"),
    Key("ablation.first_seed", 0, int, "first seed of the sweep"),
    Key("ablation.temperature", 0.7, float, "temperature of the stochastic cell"),
    Key("ablation.reduced_k", 1, int, "retrieval depth of the reduced-capacity cell"),
)

KEY_INDEX = {k.name: k for k in KEYS}


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parsed overrides only (keys present in ``text``)."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if name not in KEY_INDEX:
            raise ConfigError(f"{source}:{lineno}: unknown key {name!r}")
        if name in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {name!r}")
        value = value.strip()
        spec = KEY_INDEX[name]
        if value == "" and spec.default is None:
            out[name] = None
            continue
        try:
            out[name] = spec.parse(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {name}: {exc}") from None
    return out


def resolve(overrides: dict[str, Any]) -> dict[str, Any]:
    """Every key with its effective value; scenario windows fill unset dates."""
    values = {k.name: k.default for k in KEYS}
    values.update(overrides)
    if values["data.source"] not in ("scenario", "csv"):
        raise ConfigError(f"data.source must be 'scenario' or 'csv', got {values['data.source']!r}")
    if values["data.source"] == "scenario":
        sc = get_scenario(values["data.scenario"])
        for part in ("calib_start", "calib_end", "eval_start", "eval_end"):
            if values[f"backtest.{part}"] is None:
                values[f"backtest.{part}"] = getattr(sc, part)
        if "backtest.symbols" not in overrides:
            values["backtest.symbols"] = (sc.symbol,)
    for part in ("calib_start", "calib_end", "eval_start", "eval_end"):
        if values[f"backtest.{part}"] is None:
            values[f"backtest.{part}"] = getattr(_B, part)
    return values


def load(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return resolve(parse_text(text, str(p)))


def snapshot(values: dict[str, Any]) -> dict[str, str]:
    """Resolved values as strings, in registry order (stable for manifests)."""
    return {k.name: _fmt(values[k.name]) for k in KEYS}


def render(values: dict[str, Any]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in snapshot(values).items())


def render_defaults() -> str:
    lines = ["# every recognised key with its default; dates left empty follow the scenario\n"]
    section = None
    for k in KEYS:
        head = k.name.split(".", 1)[0]
        if head != section:
            lines.append(f"\n# [{head}]\n")
            section = head
        value = "" if k.default is None else _fmt(k.default)
        lines.append(f"# {k.doc}\n" + f"{k.name} = {value}".rstrip() + "\n")
    return "".join(lines)


def build_config(values: dict[str, Any], seed: int | None = None) -> BacktestConfig:
    v = values
    seed = v["run.seed"] if seed is None else seed
    priors = {name: tuple(v[f"controller.prior.{name}"]) for name in DEFAULT_PRIORS}
    cfg = BacktestConfig(
        symbols=tuple(v["backtest.symbols"]),
        calib_start=v["backtest.calib_start"],
        calib_end=v["backtest.calib_end"],
        eval_start=v["backtest.eval_start"],
        eval_end=v["backtest.eval_end"],
        initial_capital=v["backtest.initial_capital"],
        controller=v["backtest.controller"],
        memory_enabled=v["backtest.memory_enabled"],
        safety_enabled=v["backtest.safety_enabled"],
        warm_start=v["backtest.warm_start"],
        seed=seed,
        temperature=v["backtest.temperature"],
        rate=v["backtest.rate"],
        margin_floor=v["backtest.margin_floor"],
        rebalance_band=v["backtest.rebalance_band"],
        run_id=v["run.id"],
        portfolio_mode=v["backtest.portfolio_mode"],
        costs=CostModel(v["costs.equity_bps"], v["costs.per_contract_fee"], v["costs.option_bps"]),
        constraints=DecisionConstraints(v["constraints.hedge_budget_fraction"], v["constraints.max_single_sleeve"],
                                        v["constraints.liquidity_cap"], v["constraints.max_equity_exposure"]),
        memory=MemoryConfig(v["memory.k"], v["memory.retrieval_strength"], v["memory.horizon_days"]),
        safety=SafetyConfig(v["safety.drawdown_threshold"], v["safety.release_threshold"],
                            dict(v["safety.protective_weights"]), v["safety.protective_equity_exposure"]),
        agents=AgentParams(v["agents.put_strike_offset"], v["agents.call_strike_offset"],
                           v["agents.straddle_strike_offset"], v["agents.tenor_days"],
                           v["agents.roll_window_days"], v["agents.delta_tolerance"], v["agents.multiplier"]),
        controller_params=ControllerParams(v["controller.vol_threshold"], v["controller.trend_threshold"], priors,
                                           v["controller.prior_exposure"], v["controller.use_priors"],
                                           v["memory.retrieval_strength"], v["controller.exposure_grid"]),
        llm=LlmConfig(v["llm.endpoint"], v["llm.timeout"], v["llm.api_key_env"]),
    )
    for name, w in priors.items():
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError(f"controller.prior.{name} must be non-negative and sum to 1")
    for k in ("ablation.seeds", "ablation.reduced_k"):
        if v[k] < 1:
            raise ConfigError(f"{k} must be >= 1")
    cfg.validate()
    return cfg


def data_files(values: dict[str, Any]) -> dict[str, Path]:
    if values["data.source"] != "csv":
        return {}
    root = Path(values["data.dir"])
    return {s: root / f"{s}.csv" for s in values["backtest.symbols"]}


def load_data(values: dict[str, Any], seed: int) -> dict[str, PriceSeries]:
    """Price histories named by the config: bundled scenario draw or CSV files."""
    if values["data.source"] == "scenario":
        data, _ = get_scenario(values["data.scenario"]).generate(seed)
        missing = [s for s in values["backtest.symbols"] if s not in data]
        if missing:
            raise ConfigError(f"scenario {values['data.scenario']!r} has no symbols {missing}")
        return data
    out = {}
    for sym, path in data_files(values).items():
        if not path.is_file():
            raise DataError(f"data file for {sym} not found: {path}")
        out[sym] = load_csv(path, symbol=sym)
    return out
