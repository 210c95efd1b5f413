"""Desk experiment: flat data, p = 2, N = 1.  Prints the closed-form comparisons.

    python3 scripts/desk_flat.py [--out DIR]
"""

import argparse
import math
from pathlib import Path

from blowup_lab.ball import weight_moment
from blowup_lab.config import load_config
from blowup_lab.energy import flat_energy_oracle
from blowup_lab.pipeline import run_experiment

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "desk_flat.ini"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="write the full output tree here")
    args = ap.parse_args()

    cfg = load_config(CONFIG)
    res = run_experiment(cfg, args.out)
    prm = cfg.params
    print(f"T_est = {res.estimate.T_est:.12f}  (exact 1)")
    ca = res.centers[0]
    s0 = -math.log(res.T_prime)
    R_a, R_am1 = weight_moment(prm.N, prm.alpha), weight_moment(prm.N, prm.alpha - 1)
    print(f"{'s':>8} {'E':>16} {'closed form':>16} {'rel err':>10} {'thm11':>10}")
    for k in range(0, len(ca.frames), 20):
        e = ca.energies[cfg.energy.convention][k]
        ref = flat_energy_oracle(prm, 1.0, e.s, s0, R_a, R_am1)
        print(f"{e.s:8.3f} {e.E:16.8e} {ref:16.8e} {abs(e.E - ref) / abs(ref):10.2e} "
              f"{ca.bounds[k].thm11:10.6f}")
    summ = res.summary
    print(f"max dissipation residual {summ['max_dissipation_residual']:.3e}, "
          f"monotone violations {summ['monotone_violations']}, "
          f"sup thm11 {summ['sup_thm11']:.6f} (closed form {2 + 2 * math.exp(-2):.6f})")


if __name__ == "__main__":
    main()
