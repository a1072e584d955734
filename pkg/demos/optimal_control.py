"""Discrete and continuous necessary conditions solved by shooting.

1. The one-stage problem q1 = q0 + u, cost (q0^2 + u^2)/2 + q1^2/2, q0 = 1.
2. A scalar LQ problem discretized by Euler: shooting on p0 against direct
   minimisation of the rolled-out cost.
3. The double integrator with a soft terminal target, solved on the
   continuous Hamiltonian flow; p0 converges at first order in h.
"""

import numpy as np

from sympocp import (DiscreteOCP, LQSpec, Method, MethodSpec, brute_force_solve, euler_discretization,
                     get_problem, lq_from_spec, shoot_continuous, shoot_discrete)

v = lambda x: np.atleast_1d(np.asarray(x, dtype=float))
one_stage = DiscreteOCP(
    N=1, n=1, m=1,
    f=lambda k, q, u: v(q) + v(u), f_q=lambda k, q, u: np.eye(1), f_u=lambda k, q, u: np.eye(1),
    L=lambda k, q, u: 0.5 * (v(q)[0] ** 2 + v(u)[0] ** 2), L_q=lambda k, q, u: v(q), L_u=lambda k, q, u: v(u),
    L_uu=lambda k, q, u: np.eye(1), S=lambda N, q: 0.5 * v(q)[0] ** 2, S_q=lambda N, q: v(q), q0=[1.0],
)
tr = shoot_discrete(one_stage)
print(f"one stage: u0 = {tr.u[0, 0]:.6f}, q1 = {tr.q[1, 0]:.6f}, p0 = {tr.p[0, 0]:.6f}, J = {tr.J:.6f}")

spec = LQSpec(A=[[0.3]], B=[[1.0]], Q=[[1.0]], R=[[0.5]], Qf=[[2.0]], q0=[1.0], t0=0.0, T=1.0)
for N in (5, 10, 20):
    docp = euler_discretization(lq_from_spec(spec), spec.q0, spec.T / N, N)
    J_shoot, J_direct = shoot_discrete(docp).J, brute_force_solve(docp).J
    print(f"LQ N={N:2d}: J shooting = {J_shoot:.10f}   J direct = {J_direct:.10f}")

pb = get_problem("dblint")
q0 = pb.extra.get("ocp_q0", np.zeros(2))
exact = np.array([30300, 15300]) / 2903
for h in (0.1, 0.05, 0.025):
    traj = shoot_continuous(pb.hamiltonian, pb.terminal_cost_dq, q0, 0.0, 1.0, MethodSpec(Method.GF2_EULER), h)
    print(f"double integrator h={h:5.3f}: p0 = {traj.p[0]}  |p0 - exact| = {np.max(np.abs(traj.p[0] - exact)):.2e}"
          f"  q(1) = {traj.q[-1]}")
