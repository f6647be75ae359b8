"""Rate sums of a single particle shared by several senders.

A classical particle delivers at most one bit per use to the receiver, no
matter how the senders encode.  Keeping the particle in superposition and
adding an untouched reference path beats that bound.

    python3 demos/classical_vs_coherent.py [--max-n 5]
"""

import argparse

import numpy as np

from spmac.capacity import ba_mac_rate_sum
from spmac.info_metrics import channel_mutual_information
from spmac.mac_builder import (OPTIMAL_PRIOR_TB, build_mac, canonical_classical_mac, n_sender_assisted_mac,
                               transition_balanced_channel, two_sender_binary_protocol)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=5)
    args = ap.parse_args()

    print("classical canonical MAC, best rate sum over product priors")
    for lam in np.linspace(0, 1, 5):
        r = ba_mac_rate_sum(canonical_classical_mac([lam, 1 - lam]), restarts=4)
        print(f"  lambda={lam:.2f}  R_sum={r.value_bits:.6f}")

    print("\nunassisted two-sender phase/on-off protocol")
    for theta in (np.pi / 8, np.pi / 4, 3 * np.pi / 8):
        r = ba_mac_rate_sum(build_mac(*two_sender_binary_protocol(theta)), restarts=4)
        print(f"  theta={theta:.3f}  R_sum={r.value_bits:.6f}")

    ideal = channel_mutual_information(transition_balanced_channel(), OPTIMAL_PRIOR_TB)
    print(f"\nassisted two-sender channel at p(x1=1)=15/17: {ideal:.9f} bits (log2(17/8) = {np.log2(17 / 8):.9f})")

    print("\nassisted N-sender cascade")
    for n in range(2, args.max_n + 1):
        r = ba_mac_rate_sum(n_sender_assisted_mac(n))
        print(f"  N={n}  R_sum={r.value_bits:.9f}  flattened bound={r.upper_bound_bits:.9f}")


if __name__ == "__main__":
    main()
