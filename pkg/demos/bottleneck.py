"""Exponentially small bottleneck ratio in the slow-mixing region.

The ratio Phi_* decays like exp(-r n), where r = I(z') - I(z~) is the
rate-function barrier between the saddle z' and the positive minimum z~.
"""

from __future__ import annotations

from blumecapel import ModelParams
from blumecapel.cli.scaling import fit_scaling
from blumecapel.equilibrium import slow_mixing_rate
from blumecapel.exactchain import bottleneck

beta, k = 1.0, 1.6
z_prime, z_tilde, rate = slow_mixing_rate(beta, k)
print(f"saddle z'={z_prime:.4f}, minimum z~={z_tilde:.4f}, barrier rate {rate:.5f}")
points = []
for n in range(20, 121, 20):
    rep = bottleneck(ModelParams(n, beta, k), z_prime)
    points.append((n, 1 / rep.phi_star))
    print(f"  n={n:>3}  Phi_*={rep.phi_star:.3e}  t_mix >= {rep.tmix_lower:.3e}")
fit = fit_scaling(points, "exponential")
print(f"fitted rate {fit.exponent_or_rate:.5f} (r^2 {fit.r_squared:.5f})")
