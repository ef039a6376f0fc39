"""Exact total-variation mixing times from the lumped count chain.

At (beta=1, K=0.8) the chain mixes in order n log n steps, so the ratio
t_mix / (n log n) settles as n doubles.
"""

from __future__ import annotations

import math

from blumecapel import ModelParams, t_mix_exact

print(f"{'n':>5} {'t_mix':>7} {'t_mix/(n log n)':>16}")
for n in (20, 40, 80, 160):
    t = t_mix_exact(ModelParams(n, 1.0, 0.8), 0.25)
    print(f"{n:>5} {t:>7} {t / (n * math.log(n)):>16.4f}")
