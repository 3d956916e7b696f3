"""Command line entry point.

Examples
--------
Run the figure-2 style sweep with a fixed cutoff::

    opendicke steady-sweep --preset fig2 --fock 16 --out runs/fig2

Run from a YAML file on four processes::

    opendicke steady-sweep --config my_run.yaml --workers 4

Write the generator of the configured model to a text file::

    opendicke dump-operator --config my_run.yaml --fock 6 --out op/
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .config import PRESETS, ConfigError, RunConfig, merge, write_text_atomic
from .liouvillian import assemble
from .solvers import FockCutoffError, auto_fock_cutoff
from .sweep import _criteria, run

SUBCOMMANDS = ("steady-sweep", "gap-sweep", "cascade", "oracle-check", "dump-operator")


def _fock(value: str):
    if value == "auto":
        return value
    try:
        M = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--fock takes 'auto' or a positive integer, got {value!r}")
    if M < 1:
        raise argparse.ArgumentTypeError("--fock must be >= 1")
    return M


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opendicke", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} protocol" if name != "dump-operator" else "write the generator as text")
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named default configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--fock", type=_fock, help="'auto' or a fixed photon cutoff M")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def load_config(args) -> RunConfig:
    data: dict = {}
    if args.preset:
        data = merge(data, PRESETS[args.preset])
    if args.config:
        with open(args.config) as fh:
            data = merge(data, yaml.safe_load(fh) or {})
    if args.command != "dump-operator":
        data["protocol"] = args.command
    if args.workers is not None:
        data["workers"] = args.workers
    if args.fock is not None:
        data.setdefault("solver", {})["fock"] = args.fock
    if args.out is not None:
        data.setdefault("output", {})["dir"] = str(args.out)
    return RunConfig.from_dict(data)


def dump_operator(cfg: RunConfig, out: Path) -> int:
    point = cfg.points()[0] if cfg.grids else {}
    params = cfg.params_at(point)
    if cfg.solver.fock == "auto":
        M, _ = auto_fock_cutoff(params, _criteria(cfg), tol=cfg.solver.tol)
    else:
        M = int(cfg.solver.fock)
    L = assemble(params, M)
    out.mkdir(parents=True, exist_ok=True)
    L.dump(out / "operator.txt")
    write_text_atomic(
        out / "operator.yaml",
        yaml.safe_dump({"point": point, "M": M, "dim": L.dim, "N": params.N}, sort_keys=True),
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "dump-operator":
            return dump_operator(cfg, Path(cfg.output.dir))
        return run(cfg)
    except (ConfigError, FockCutoffError, OSError) as exc:
        print(f"opendicke: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
