"""Command-line entry point: ``run``, ``ablate`` and ``baselines``.

Outputs are staged in a hidden directory and renamed into ``--out`` only after
every file has been written, so a failing command leaves no partial results.
Configuration and data problems exit with status 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .config import build_config, data_files, load, load_data, parse_text, resolve, snapshot
from .errors import ConfigError, InternalError, MultiHedgeError
from .experiments import (
    BASELINES,
    ablation_seeds,
    ablation_table,
    format_table,
    report_row,
    run_ablation,
    run_baselines,
    run_single,
    summarize_ablation,
)
from .market_data import csv_text

log = logging.getLogger("multihedge")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def code_version() -> str:
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def load_values(path: str) -> tuple[dict[str, Any], int | None]:
    """Resolved config values from a config file or an earlier manifest (plus its seed)."""
    p = Path(path)
    if p.suffix == ".json":
        try:
            doc = json.loads(p.read_text())
            cfg = doc["config"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read manifest {p}: {exc}") from None
        text = "".join(f"{k} = {v}\n" for k, v in cfg.items())
        return resolve(parse_text(text, str(p))), doc.get("seed")
    return load(p), None


def input_digests(values: dict[str, Any], data) -> dict[str, dict]:
    files = data_files(values)
    out = {}
    for sym in values["backtest.symbols"]:
        if sym in files:
            out[sym] = {"kind": "csv", "path": str(files[sym]), "sha256": _sha256(files[sym].read_bytes())}
        else:
            out[sym] = {"kind": "scenario", "name": values["data.scenario"],
                        "sha256": _sha256(csv_text(data[sym]).encode())}
    return out


class Staging:
    """Collects output files and publishes them into ``out`` in one step."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, bytes] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text.encode()

    def digests(self) -> dict[str, str]:
        return {name: _sha256(data) for name, data in self.files.items()}

    def publish(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        tmp = self.out / f".staging-{_sha256(repr(sorted(self.files)).encode())[:8]}"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir()
        try:
            for name, data in self.files.items():
                dest = tmp / name
                dest.parent.mkdir(parents=True, exist_ok=True)
                dest.write_bytes(data)
            for name in self.files:
                final = self.out / name
                final.parent.mkdir(parents=True, exist_ok=True)
                (tmp / name).replace(final)
        finally:
            shutil.rmtree(tmp, ignore_errors=True)


def _manifest(verb: str, values, seed, data, staging: Staging, extra: dict | None = None) -> str:
    doc = {
        "verb": verb,
        "code_version": code_version(),
        "seed": seed,
        "config": snapshot(values),
        "inputs": input_digests(values, data),
        "outputs": staging.digests(),
    }
    doc.update(extra or {})
    return _dumps(doc)


def _records_jsonl(by_symbol: dict) -> str:
    lines = []
    for sym, records in by_symbol.items():
        for r in records:
            d = r.to_dict()
            if sym is not None:
                d = {"symbol": sym, **d}
            lines.append(json.dumps(d, allow_nan=False))
    return "\n".join(lines) + "\n"


def cmd_run(args, values, seed) -> int:
    seed = values["run.seed"] if seed is None else seed
    cfg = build_config(values, seed)
    data = load_data(values, seed)
    if args.dry_run:
        print(f"config ok: {len(cfg.symbols)} symbol(s), evaluation {cfg.eval_start}..{cfg.eval_end}")
        return EXIT_OK
    _, by_symbol, report = run_single(values, seed, data)
    st = Staging(Path(args.out))
    st.add("records.jsonl", _records_jsonl(by_symbol))
    st.add("metrics.json", _dumps(report.to_dict()))
    st.add("manifest.json", _manifest("run", values, seed, data, st))
    st.publish()
    sys.stdout.write(format_table([(values["run.id"], report_row(report))]))
    return EXIT_OK


def cmd_baselines(args, values, seed) -> int:
    seed = values["run.seed"] if seed is None else seed
    build_config(values, seed)
    data = load_data(values, seed)
    if args.dry_run:
        print("config ok: baselines " + ", ".join(BASELINES))
        return EXIT_OK
    results = run_baselines(values, seed)
    st = Staging(Path(args.out))
    for kind, (records, report) in results.items():
        st.add(f"{kind}/records.jsonl", _records_jsonl({None: records}))
        st.add(f"{kind}/metrics.json", _dumps(report.to_dict()))
    table = format_table([(kind, report_row(rep)) for kind, (_, rep) in results.items()])
    st.add("summary.txt", table)
    st.add("manifest.json", _manifest("baselines", values, seed, data, st))
    st.publish()
    sys.stdout.write(table)
    return EXIT_OK


def cmd_ablate(args, values, seed) -> int:
    seeds = ablation_seeds(values, seed)
    build_config(values, seeds[0])
    data = load_data(values, seeds[0])
    if args.dry_run:
        print(f"config ok: 4 cells x {len(seeds)} seeds")
        return EXIT_OK
    rows = run_ablation(values, seeds, jobs=args.jobs)
    summary = summarize_ablation(rows, values)
    table = ablation_table(summary)
    st = Staging(Path(args.out))
    for cell in summary["cells"]:
        lines = [json.dumps(r, allow_nan=False) for r in rows if r["cell"] == cell]
        st.add(f"{cell}/runs.jsonl", "\n".join(lines) + "\n")
    st.add("summary.json", _dumps(summary))
    st.add("summary.txt", table)
    st.add("manifest.json", _manifest("ablate", values, seeds[0], data, st, {"seeds": seeds}))
    st.publish()
    sys.stdout.write(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multihedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (("run", "single backtest"), ("ablate", "ablation grid over seeds"),
                            ("baselines", "buy-and-hold and equal-weight baselines")):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", required=True, help="config file (key = value) or a previous manifest.json")
        p.add_argument("--seed", type=int, default=None, help="override run.seed (ablate: first seed)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--dry-run", action="store_true", help="validate config and inputs, write nothing")
        if verb == "ablate":
            p.add_argument("--jobs", type=int, default=1, help="worker processes for the seed sweep")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {"run": cmd_run, "ablate": cmd_ablate, "baselines": cmd_baselines}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values, manifest_seed = load_values(args.config)
        seed = args.seed if args.seed is not None else manifest_seed
        return COMMANDS[args.verb](args, values, seed)
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except MultiHedgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
