"""What one sender can squeeze out of a particle it shares with a reference path.

Walks through the three measurement regimes of the accessible information,
finds the optimum and compares it with the Holevo quantity of the same
ensemble.

    python3 demos/one_sender_information.py
"""

import numpy as np

from spmac.analytic import (acc_info_one_sender, holevo_one_sender_closed_form, lemma_alpha_beta_scan,
                            one_sender_ensemble, optimize_one_sender)
from spmac.info_metrics import holevo_chi


def main():
    print("regime that wins along theta at q = 0.87")
    for theta in np.linspace(0.1, 1.4, 8):
        r = acc_info_one_sender(0.87, theta)
        print(f"  theta={theta:.3f}  I_acc={r.value_bits:.6f}  regime={r.regime}")

    opt = optimize_one_sender()
    a = opt.argmax
    print(f"\noptimum I_acc = {opt.value_bits:.10f} bits at q={a['q']:.5f}, "
          f"cos^2(theta)={a['cos2_theta']:.5f} (sin^2 = {a['sin2_theta']:.5f})")
    print(f"  stationarity residuals {opt.residuals}")
    print(f"  401x401 grid maximum    {opt.extra['grid_max_bits']:.10f}")

    hol = holevo_one_sender_closed_form()
    x = hol.argmax["x"]
    chi = holevo_chi(one_sender_ensemble(x, np.arccos(np.sqrt(x))))
    print(f"\nHolevo optimum 2x h2(x) = {hol.value_bits:.6f} at x = {x:.6f}; ensemble check {chi:.6f}")

    scan = lemma_alpha_beta_scan(0.87, np.pi / 4)
    print("\nlocal maxima of J over the encoding/decoding phases (alpha, beta):")
    for (al, be), v in zip(scan.maxima, scan.values):
        print(f"  ({al / np.pi:.3f} pi, {be / np.pi:.3f} pi)  J={v:.6f}")


if __name__ == "__main__":
    main()
