"""Liouvillian gap |lambda_1|/gamma and photon number versus drive for N = 2..5.

    python scripts/fig4_gap.py --workers 4
    python scripts/fig4_gap.py --quick
"""

from common import build, execute, parser, table

QUICK = {"grids": {"E": {"log": [1000.0, 30000.0, 6]}, "N": {"list": [2, 3]}}}


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    cfg = build("fig4", args, QUICK)
    rows, _ = execute(cfg, args.verbose)
    table(rows, ["E", "n_tls_norm", "gap_over_gamma", "lambda1_im", "m_ph", "g2", "gap_flagged"], group="N")


if __name__ == "__main__":
    main()
