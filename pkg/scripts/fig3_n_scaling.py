"""Collectivity measure R(l) versus drive for N = 2..6 at kappa/g = 1.

    python scripts/fig3_n_scaling.py --workers 5
    python scripts/fig3_n_scaling.py --quick
"""

from common import build, execute, parser, table

QUICK = {"grids": {"E": {"log": [2000.0, 30000.0, 6]}, "N": {"list": [2, 3, 4]}}, "output": {"with_p_lm": False}}


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    cfg = build("fig3", args, QUICK)
    rows, _ = execute(cfg, args.verbose)
    Rcols = [c for c in rows[0] if c.startswith("R_l")]
    table(rows, ["E", "n_tls_norm", *Rcols, "M"], group="N")


if __name__ == "__main__":
    main()
