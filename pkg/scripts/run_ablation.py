"""Full four-cell ablation grid through the command-line runner.

    python3 scripts/run_ablation.py --out out/ablation --jobs 1
"""

import argparse
import sys
from pathlib import Path

from multihedge.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "ablation.cfg"))
    ap.add_argument("--out", default="out/ablation")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    sys.exit(cli_main(["ablate", "--config", args.config, "--out", args.out, "--jobs", str(args.jobs)]))
