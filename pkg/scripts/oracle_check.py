"""Reduced-basis generator and steady state against the brute-force full-space oracle, N = 2..5.

    python scripts/oracle_check.py --out runs/oracle
"""

import argparse
from pathlib import Path

from opendicke.config import RunConfig
from opendicke.sweep import run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/oracle"))
    p.add_argument("--nmax", type=int, default=5)
    args = p.parse_args()
    cfg = RunConfig.from_dict(
        {"protocol": "oracle-check", "grids": {"N": {"list": list(range(2, args.nmax + 1))}}, "output": {"dir": str(args.out)}}
    )
    code = run(cfg)
    print((args.out / "oracle-check.csv").read_text())
    raise SystemExit(code)


if __name__ == "__main__":
    main()
