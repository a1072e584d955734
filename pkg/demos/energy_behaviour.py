"""Symplectic Euler against explicit Euler on the harmonic oscillator.

Symplectic Euler keeps the energy error bounded (it conserves the shadow
energy H - (h/2) q p exactly on this problem); explicit Euler spirals out.
"""

import numpy as np

from sympocp import Method, MethodSpec, get_problem, integrate
from sympocp.verify import energy_drift, explicit_euler_rollout

h, steps = 0.01, 10_000
pb = get_problem("osc")

gf2 = integrate(MethodSpec(Method.GF2_EULER), pb.hamiltonian, pb.x0, h, steps)
euler = explicit_euler_rollout(pb.hamiltonian, pb.x0, h, steps)

print(f"{'t':>8} {'H symplectic':>14} {'H explicit':>14}")
for k in range(0, steps + 1, steps // 10):
    print(f"{gf2.t[k]:8.1f} {gf2.H[k]:14.6f} {euler.H[k]:14.6f}")

for name, tr in (("symplectic Euler", gf2), ("explicit Euler", euler)):
    dev, slope = energy_drift(tr)
    print(f"{name:17s} max |H - H0| = {dev:.3e}   fitted slope = {slope:+.3e}")

shadow = gf2.H - 0.5 * h * gf2.q[:, 0] * gf2.p[:, 0]
print(f"spread of H - (h/2) q p along the symplectic run: {np.ptp(shadow):.1e}")
