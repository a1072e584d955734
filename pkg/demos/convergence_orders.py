"""Observed global orders on the oscillator, h = 0.2 * 2^-j, horizon 2."""

import numpy as np

from sympocp import Method, MethodSpec, get_problem
from sympocp.verify import observed_order

pb = get_problem("osc")
ladder = 0.2 * 2.0 ** -np.arange(6)
cases = [
    ("symplectic Euler", MethodSpec(Method.GF2_EULER), pb.hamiltonian),
    ("series r=1", MethodSpec(Method.SERIES, order=1), pb.hamiltonian),
    ("series r=2", MethodSpec(Method.SERIES, order=2), pb.hamiltonian),
    ("series r=3", MethodSpec(Method.SERIES, order=3), pb.hamiltonian),
    ("DEL alpha=1/2", MethodSpec(Method.DEL_FIXED, alpha=0.5), pb.lagrangian),
    ("DEL alpha=0", MethodSpec(Method.DEL_FIXED, alpha=0.0), pb.lagrangian),
]

print("h:" + "".join(f"{h:11.5f}" for h in ladder))
for name, spec, system in cases:
    rep = observed_order(spec, system, pb.x0, 2.0, pb.exact_flow, ladder)
    errs = "".join(f"{e:11.2e}" for e in rep.errors)
    print(f"{name:16s}{errs}   slope {rep.slope:5.2f} (nominal {rep.nominal:g})")
