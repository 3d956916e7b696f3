"""Pure dephasing: R(l_max), R(l_min) and the squeezing witness A for N = 5.

``--panel a`` sweeps delta/gamma over {0, 0.5, 1} and reports the switching
of R(l_max) and R(l_min); ``--panel b`` sweeps {0, 0.1, 0.5, 1, 2} and
reports where the witness A is positive (entanglement detected).

    python scripts/fig5_dephasing.py --panel a --workers 3
    python scripts/fig5_dephasing.py --panel b --quick
"""

from common import build, execute, parser, table

QUICK = {"model": {"N": 3}, "grids": {"E": {"log": [500.0, 30000.0, 6]}}}


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--panel", choices=["a", "b"], default="a")
    args = p.parse_args()
    cfg = build("fig5" + args.panel, args, QUICK)
    rows, _ = execute(cfg, args.verbose)
    Rcols = [c for c in rows[0] if c.startswith("R_l")]
    cols = ["E", "n_tls_norm", Rcols[0], Rcols[-1]] if args.panel == "a" else ["E", "n_tls_norm", "A", "ssi_a2", "ssi_b1", "ssi_b2"]
    table(rows, cols + ["M"], group="delta_over_gamma")


if __name__ == "__main__":
    main()
