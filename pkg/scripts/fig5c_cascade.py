"""Dark-state cascade: drive to the R(l_min) maximum, switch the drive off, follow p(l, -l).

    python scripts/fig5c_cascade.py
    python scripts/fig5c_cascade.py --quick
"""

import numpy as np

from common import build, execute, parser

QUICK = {"model": {"N": 3}, "grids": {"E": {"log": [2000.0, 20000.0, 5]}}, "cascade": {"n_out": 121}}


def main():
    args = parser(__doc__.splitlines()[0]).parse_args()
    cfg = build("fig5c", args, QUICK)
    rows, manifest = execute(cfg, args.verbose)
    info = manifest["result"]
    g = cfg.model.g_rate
    print(f"E* = {info['E_star']:.5g} gamma, cutoff M = {info['M']}")
    print(f"peak total dark population {info['peak_total_dark']:.4f} at t = {info['t_peak_total_dark']:.3g}/gamma"
          f" = {info['t_peak_total_dark'] * g:.3g}/g")
    cols = [c for c in rows[0] if c.startswith("p_dark")] + ["total_dark"]
    t = np.array([float(r["t"]) for r in rows])
    print("\n" + "  ".join(f"{c:>12}" for c in ["t*gamma"] + cols))
    for target in (0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 3.0, 10.0):
        r = rows[int(np.argmin(np.abs(t - target)))]
        print("  ".join(f"{float(r[c]):12.5g}" for c in ["t"] + cols))


if __name__ == "__main__":
    main()
