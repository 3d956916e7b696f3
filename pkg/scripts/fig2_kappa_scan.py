"""Steady state versus drive for several cavity loss ratios kappa/g (N = 6).

Prints n/N, R(N/2), the cavity output rate and g2(0) for every kappa/g and
the transition estimate (g2 maximum) per curve.

    python scripts/fig2_kappa_scan.py --workers 4
    python scripts/fig2_kappa_scan.py --quick
"""

from common import build, execute, parser, table

QUICK = {"model": {"N": 3}, "grids": {"E": {"log": [1000.0, 30000.0, 8]}, "kappa_over_g": {"list": [10.0, 1.0]}}}


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    cfg = build("fig2", args, QUICK)
    rows, manifest = execute(cfg, args.verbose)
    N = cfg.model.N
    table(rows, ["E", "n_tls_norm", f"R_l{N / 2:g}", "output_rate", "g2", "M"], group="kappa_over_g")
    print()
    for t in manifest["result"].get("transitions", []):
        print(f"{t['group']}: E* = {t['E_star']} (g2 max), steepest n/N at E = {t['E_slope']:.4g}")


if __name__ == "__main__":
    main()
