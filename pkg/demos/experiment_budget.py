"""How much imperfection the two-sender experiment can absorb.

Scans detector efficiency and interferometer visibility, then simulates
photon counting at the nominal sample sizes and compares the observed
spread with the error-propagation formulas.

    python3 demos/experiment_budget.py [--runs 50]
"""

import argparse

import numpy as np

from spmac.experiment import (NOMINAL_VISIBILITIES, ExperimentConfig, eta_threshold, fixed_prior_rate,
                              monte_carlo_joint, visibility_channel)
from spmac.info_metrics import channel_mutual_information
from spmac.mac_builder import OPTIMAL_PRIOR_TB


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=50)
    args = ap.parse_args()

    print("detector efficiency")
    for eta in (1.0, 0.99, 0.98, 0.97, 0.95, 0.9):
        print(f"  eta={eta:.2f}  I={fixed_prior_rate(eta):.5f}")
    print(f"  one-bit threshold: fixed prior {eta_threshold('fixed'):.5f}, "
          f"optimized prior {eta_threshold('optimized'):.5f}")

    print("\nvisibility (rows v_sagnac, columns v_mz)")
    vals = (1.0, 0.99, 0.98, 0.95)
    print("          " + "".join(f"{v:>9.3f}" for v in vals))
    for vs in vals:
        row = [channel_mutual_information(visibility_channel(vs, vz), OPTIMAL_PRIOR_TB) for vz in vals]
        print(f"  {vs:7.3f} " + "".join(f"{r:9.5f}" for r in row))
    vs, vz = NOMINAL_VISIBILITIES
    print(f"  at ({vs}, {vz}): {channel_mutual_information(visibility_channel(vs, vz), OPTIMAL_PRIOR_TB):.5f}")

    runs = [monte_carlo_joint(ExperimentConfig(v_sagnac=vs, v_mz=vz, seed=s)) for s in range(args.runs)]
    i_ch = np.array([r.i_channel for r in runs])
    i_emp = np.array([r.i_empirical for r in runs])
    print(f"\nMonte Carlo, {args.runs} runs of 680 settings x 600 photons")
    print(f"  channel estimate   mean {i_ch.mean():.5f}  sd {i_ch.std(ddof=1):.5f}  "
          f"formula {np.sqrt(np.mean([r.v_r1 for r in runs])):.5f}")
    print(f"  empirical joint    mean {i_emp.mean():.5f}  sd {i_emp.std(ddof=1):.5f}  "
          f"formula {np.sqrt(np.mean([r.v_r2 for r in runs])):.5f}")


if __name__ == "__main__":
    main()
