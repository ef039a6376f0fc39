"""Walk across the (beta, K) plane and watch the free-energy minima change.

Below beta_c = log 4 the zero minimum splits continuously once K passes kc2.
Above beta_c a metastable pair of minima appears at k1 and takes over at kc1.
"""

from __future__ import annotations

from blumecapel import BETA_C, classify, k1, kc1, kc2


def show(beta, k):
    rep = classify(beta, k)
    mins = ", ".join(f"{z:+.4f}" for z in rep.minima.local_minimizers)
    print(f"  K={k:.5f}  {rep.phase.value:<22} {rep.mixing_prediction.value:<8} minima [{mins}]")


print(f"beta_c = {BETA_C:.6f}\n")
for beta in (1.0, 2.0):
    print(f"beta = {beta}")
    if beta < BETA_C:
        c = kc2(beta)
        print(f"  kc2 = {c:.6f}")
        for k in (0.9 * c, c, 1.001 * c, 1.1 * c):
            show(beta, k)
    else:
        a, b = k1(beta), kc1(beta)
        print(f"  k1 = {a:.6f}, kc1 = {b:.6f}")
        for k in (0.9 * a, 0.5 * (a + b), b * (1 + 1e-6), 1.1 * b):
            show(beta, k)
    print()
