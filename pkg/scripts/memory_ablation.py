"""Full system against the no-memory cell on the three-regime scenario, per seed.

    python3 scripts/memory_ablation.py --seeds 20 --first-seed 0
"""

import argparse
import statistics
from pathlib import Path

from multihedge import config as C
from multihedge.backtest import run_backtest
from multihedge.experiments import cell_config
from multihedge.scenarios import get_scenario

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "ablation.cfg"))
    ap.add_argument("--seeds", type=int, default=None)
    ap.add_argument("--first-seed", type=int, default=None)
    args = ap.parse_args()

    values = C.load(args.config)
    first = values["ablation.first_seed"] if args.first_seed is None else args.first_seed
    n = values["ablation.seeds"] if args.seeds is None else args.seeds
    scenario = get_scenario(values["data.scenario"])
    cells = ("full", "no_memory")
    md = {c: [] for c in cells}
    sr = {c: [] for c in cells}
    print(f"{'seed':>4} {'MD full':>8} {'SR full':>8} {'MD none':>8} {'SR none':>8}")
    for seed in range(first, first + n):
        data, _ = scenario.generate(seed)
        base = C.build_config(values, seed)
        for c in cells:
            rep = run_backtest(cell_config(base, c, values["ablation.temperature"], values["ablation.reduced_k"]),
                               data)[1]
            md[c].append(rep.md_pct)
            sr[c].append(rep.sr)
        print(f"{seed:>4} {md['full'][-1]:8.2f} {sr['full'][-1]:8.3f} {md['no_memory'][-1]:8.2f} "
              f"{sr['no_memory'][-1]:8.3f}")
    for c in cells:
        print(f"{c:>10}: median MD {statistics.median(md[c]):.2f}%  median SR {statistics.median(sr[c]):.3f}")
    wins = sum(a < b for a, b in zip(md["full"], md["no_memory"]))
    print(f"memory lowers MD on {wins}/{n} seeds")


if __name__ == "__main__":
    main()
