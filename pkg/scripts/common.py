"""Shared helpers for the experiment scripts: preset loading, overrides, CSV reading."""

from __future__ import annotations

import argparse
import csv
import json
import logging
from pathlib import Path

from opendicke.config import RunConfig, merge, PRESETS
from opendicke.sweep import run


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", type=Path, default=None, help="output directory (default: the preset's)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--fock", default=None, help="'auto' (default) or a fixed cutoff M")
    p.add_argument("--quick", action="store_true", help="small, fast variant for a smoke run")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build(preset_name: str, args, quick_override: dict | None = None) -> RunConfig:
    data = merge(PRESETS[preset_name], {"workers": args.workers})
    if args.out is not None:
        data = merge(data, {"output": {"dir": str(args.out)}})
    if args.quick and quick_override:
        data = merge(data, quick_override)
    if args.fock is not None:
        data = merge(data, {"solver": {"fock": args.fock if args.fock == "auto" else int(args.fock)}})
    return RunConfig.from_dict(data)


def execute(cfg: RunConfig, verbose: bool = False) -> tuple[list[dict], dict]:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(asctime)s %(name)s: %(message)s")
    code = run(cfg)
    out = Path(cfg.output.dir)
    with open(out / f"{cfg.protocol}.csv") as fh:
        rows = list(csv.DictReader(fh))
    manifest = json.loads((out / "manifest.json").read_text())
    if code:
        print(f"warning: {manifest.get('n_failed', '?')} point(s) failed, see {out / 'manifest.json'}")
    return rows, manifest


def table(rows: list[dict], columns: list[str], group: str | None = None) -> None:
    """Print selected CSV columns, one block per value of ``group``."""
    last = None
    for r in rows:
        if group and r[group] != last:
            last = r[group]
            print(f"\n{group} = {last}")
            print("  ".join(f"{c:>12}" for c in columns))
        cells = []
        for c in columns:
            v = r.get(c, "")
            try:
                cells.append(f"{float(v):12.5g}")
            except ValueError:
                cells.append(f"{v:>12}")
        print("  ".join(cells))
