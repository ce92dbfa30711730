"""Safety override on the scheduled crash scenario: max drawdown with and without it.

    python3 scripts/crash_containment.py --seeds 20
"""

import argparse
import statistics
from dataclasses import replace
from pathlib import Path

from multihedge import config as C
from multihedge.backtest import run_backtest
from multihedge.scenarios import CRASH

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "crash.cfg"))
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=0)
    args = ap.parse_args()

    values = C.load(args.config)
    bound = values["safety.drawdown_threshold"] * 100 + 5
    on, off = [], []
    print(f"{'seed':>4} {'MD on':>8} {'MD off':>8} {'override days':>14}")
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        data, _ = CRASH.generate(seed)
        cfg = C.build_config(values, seed)
        records, rep_on = run_backtest(cfg, data)
        _, rep_off = run_backtest(replace(cfg, safety_enabled=False), data)
        on.append(rep_on.md_pct)
        off.append(rep_off.md_pct)
        days = sum(1 for r in records if r.safety is not None and r.safety.active)
        print(f"{seed:>4} {rep_on.md_pct:8.2f} {rep_off.md_pct:8.2f} {days:>14}")
    print(f"median MD on {statistics.median(on):.2f}%  off {statistics.median(off):.2f}%")
    print(f"within {bound:.0f}%: {sum(m <= bound for m in on)}/{len(on)};  on < off: "
          f"{sum(a < b for a, b in zip(on, off))}/{len(on)}")


if __name__ == "__main__":
    main()
