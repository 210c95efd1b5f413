"""Refinement ladder on the Gaussian-bump config: residual orders under (dx, ds) halving.

    python3 scripts/bump_convergence.py [--levels 3] [--config configs/bump.ini]
"""

import argparse
from pathlib import Path

from blowup_lab.config import load_config
from blowup_lab.pipeline import convergence_ladder

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "bump.ini"))
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    rows = convergence_ladder(load_config(args.config), args.levels)["levels"]
    print(f"{'nx':>6} {'ds':>8} {'T_est':>14} {'res(1.7)':>10} {'order':>6} "
          f"{'dissip.':>10} {'order':>6} {'T3 winner':>10}")
    for r in rows:
        o1 = r.get("order_residual_1_7", float("nan"))
        o2 = r.get("order_dissipation_residual", float("nan"))
        print(f"{r['nx']:6d} {r['ds']:8.4f} {r['T_est']:14.10f} {r['residual_1_7']:10.3e} {o1:6.2f} "
              f"{r['dissipation_residual']:10.3e} {o2:6.2f} {r['t3_winner']:>10}")


if __name__ == "__main__":
    main()
