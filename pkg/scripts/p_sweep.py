"""Blow-up time and energy summary over a range of p for flat data.

    python3 scripts/p_sweep.py [--p 1.5 2 3 5]

Flat data u1 = 1 blows up at T = 1/(p-1); the table compares the fit.
"""

import argparse

from blowup_lab.config import parse_config
from blowup_lab.pipeline import run_experiment

TEMPLATE = """
[model]
N = 1
p = {p}
[grid]
nx = 64
[ic]
kind = flat
u1 = 1
[similarity]
ds = 0.05
s_max = 3
centers = 0
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0, 5.0])
    args = ap.parse_args()
    print(f"{'p':>5} {'alpha':>6} {'T_est':>14} {'|T_est-T|':>10} {'min E':>14} "
          f"{'max dissip.':>12} {'violations':>10}")
    for p in args.p:
        res = run_experiment(parse_config(TEMPLATE.format(p=p)))
        s = res.summary
        T = 1.0 / (p - 1.0)
        print(f"{p:5.2f} {s['alpha']:6.2f} {s['T_est']:14.10f} {abs(s['T_est'] - T):10.2e} "
              f"{s['min_E']:14.6e} {s['max_dissipation_residual']:12.3e} {s['monotone_violations']:10d}")


if __name__ == "__main__":
    main()
