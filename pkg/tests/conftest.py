import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def random_curve(rng: np.random.Generator, n: int, start=dt.date(2020, 1, 1)):
    """Positive equity curve of n points with business-day dates."""
    vol = rng.uniform(0.002, 0.04)
    r = rng.normal(rng.uniform(-0.001, 0.001), vol, size=n - 1)
    values = 100.0 * np.concatenate([[1.0], np.cumprod(1.0 + np.clip(r, -0.5, 0.5))])
    dates = np.busday_offset(np.datetime64(start), np.arange(n), roll="forward").astype(dt.date).tolist()
    return values.tolist(), dates


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# a short market, enough for a calibration window and three quarters of evaluation
SMALL_START = dt.date(2019, 1, 1)
SMALL_DAYS = 460


def small_config(**kw):
    from multihedge.backtest import BacktestConfig

    base = dict(calib_start=dt.date(2019, 4, 1), calib_end=dt.date(2019, 12, 31),
                eval_start=dt.date(2020, 1, 1), eval_end=dt.date(2020, 9, 30))
    base.update(kw)
    return BacktestConfig(**base)


def small_data(seed: int = 0, symbol: str = "SYN"):
    from multihedge.market_data import generate_regime_switching
    from multihedge.scenarios import THREE_REGIME

    s, _ = generate_regime_switching(THREE_REGIME.spec, SMALL_DAYS, 100.0, seed, symbol=symbol,
                                     start_date=SMALL_START)
    return {symbol: s}


# acceptance verdict lines, printed once at the end of the session
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
