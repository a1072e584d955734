"""Built-in test problems.

========  ===================================  ===========================
name      problem                              reduced Hamiltonian
========  ===================================  ===========================
free      qdot = u, L = u^2/2                  p^2/2
inverted  qdot = u, L = (q^2 + u^2)/2          p^2/2 - q^2/2
dblint    x' = v, v' = u, L = u^2/2            p_x v + p_v^2/2
osc       (Hamiltonian given directly)         (p^2 + q^2)/2
========  ===================================  ===========================
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .elimination import DirectHamiltonian, EliminationConfig, Hamiltonian, ReducedHamiltonian
from .errors import ModelError
from .integrators import Lagrangian
from .model import ControlSystem, LQSpec, PhasePoint, build_pontryagin, lq_from_spec, _vec

DBLINT_TARGET = np.array([1.0, 0.0])
DBLINT_WEIGHT = 100.0


@dataclass
class Problem:
    name: str
    description: str
    hamiltonian: Hamiltonian
    x0: PhasePoint
    T: float = 1.0
    system: Optional[ControlSystem] = None
    lagrangian: Optional[Lagrangian] = None
    exact_flow: Optional[Callable] = None
    terminal_cost: Callable = None
    terminal_cost_dq: Callable = None
    N: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.terminal_cost is None:
            if self.system is not None:
                self.terminal_cost = self.system.terminal_cost
                self.terminal_cost_dq = self.system.terminal_cost_dq
            else:
                n = self.n
                self.terminal_cost = lambda t, q: 0.0
                self.terminal_cost_dq = lambda t, q: np.zeros(n)

    @property
    def n(self):
        return self.hamiltonian.n

    @property
    def m(self):
        return self.hamiltonian.m


def _scalar_system(name, q_weight, terminal_weight):
    return ControlSystem(
        n=1, m=1,
        dynamics=lambda t, q, u: _vec(u),
        dynamics_dq=lambda t, q, u: np.zeros((1, 1)),
        dynamics_du=lambda t, q, u: np.ones((1, 1)),
        running_cost=lambda t, q, u: 0.5 * (q_weight * _vec(q)[0] ** 2 + _vec(u)[0] ** 2),
        running_cost_dq=lambda t, q, u: q_weight * _vec(q),
        running_cost_du=lambda t, q, u: _vec(u),
        running_cost_duu=lambda t, q, u: np.ones((1, 1)),
        terminal_cost=lambda t, q: 0.5 * terminal_weight * _vec(q)[0] ** 2,
        terminal_cost_dq=lambda t, q: terminal_weight * _vec(q),
        name=name,
    )


def _dblint_system():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    w, target = DBLINT_WEIGHT, DBLINT_TARGET
    return ControlSystem(
        n=2, m=1,
        dynamics=lambda t, q, u: A @ _vec(q) + B @ _vec(u),
        dynamics_dq=lambda t, q, u: A,
        dynamics_du=lambda t, q, u: B,
        running_cost=lambda t, q, u: 0.5 * _vec(u)[0] ** 2,
        running_cost_dq=lambda t, q, u: np.zeros(2),
        running_cost_du=lambda t, q, u: _vec(u),
        running_cost_duu=lambda t, q, u: np.ones((1, 1)),
        terminal_cost=lambda t, q: 0.5 * w * np.sum((_vec(q) - target) ** 2),
        terminal_cost_dq=lambda t, q: w * (_vec(q) - target),
        name="dblint",
    )


def _flow_free(x, t):
    return PhasePoint(x.t + t, x.q + t * x.p, x.p.copy())


def _flow_inverted(x, t):
    c, s = np.cosh(t), np.sinh(t)
    return PhasePoint(x.t + t, c * x.q + s * x.p, s * x.q + c * x.p)


def _flow_osc(x, t):
    c, s = np.cos(t), np.sin(t)
    return PhasePoint(x.t + t, c * x.q + s * x.p, -s * x.q + c * x.p)


def _flow_dblint(x, t):
    (q1, q2), (p1, p2) = x.q, x.p
    q = np.array([q1 + q2 * t + p2 * t**2 / 2 - p1 * t**3 / 6, q2 + p2 * t - p1 * t**2 / 2])
    return PhasePoint(x.t + t, q, np.array([p1, p2 - p1 * t]))


def _lagrangian(name, k):
    """``L = v^2/2 - k q^2/2`` (scalar)."""
    return Lagrangian(
        n=1,
        value=lambda t, q, v: 0.5 * _vec(v)[0] ** 2 - 0.5 * k * _vec(q)[0] ** 2,
        dq=lambda t, q, v: -k * _vec(q),
        dv=lambda t, q, v: _vec(v),
        name=name,
    )


def osc_hamiltonian():
    return DirectHamiltonian(
        1,
        H=lambda t, q, p: 0.5 * (p[0] ** 2 + q[0] ** 2),
        H_q=lambda t, q, p: q,
        H_p=lambda t, q, p: p,
        name="osc",
    )


def get_problem(name: str, config: Optional[EliminationConfig] = None) -> Problem:
    """Build the catalog problem ``name``; raises ``KeyError`` for unknown names."""
    if name == "free":
        sys = _scalar_system("free", 0.0, 0.0)
        return Problem("free", "qdot = u, L = u^2/2", ReducedHamiltonian(build_pontryagin(sys), config),
                       PhasePoint(0.0, [2.0], [3.0]), T=1.0, system=sys,
                       lagrangian=_lagrangian("free", 0.0), exact_flow=_flow_free)
    if name == "inverted":
        sys = _scalar_system("inverted", 1.0, 1.0)
        return Problem("inverted", "qdot = u, L = (q^2 + u^2)/2, S = q^2/2",
                       ReducedHamiltonian(build_pontryagin(sys), config),
                       PhasePoint(0.0, [1.0], [0.0]), T=1.0, system=sys,
                       lagrangian=_lagrangian("inverted", -1.0), exact_flow=_flow_inverted)
    if name == "dblint":
        sys = _dblint_system()
        return Problem("dblint", "double integrator, L = u^2/2, S = 50 |q - (1,0)|^2",
                       ReducedHamiltonian(build_pontryagin(sys), config),
                       PhasePoint(0.0, [0.0, 1.0], [1.0, 1.0]), T=1.0, system=sys,
                       exact_flow=_flow_dblint, extra={"ocp_q0": np.zeros(2)})
    if name == "osc":
        return Problem("osc", "harmonic oscillator H = (p^2 + q^2)/2", osc_hamiltonian(),
                       PhasePoint(0.0, [1.0], [0.0]), T=2 * np.pi,
                       lagrangian=_lagrangian("osc", 1.0), exact_flow=_flow_osc)
    raise KeyError(name)


CATALOG = ("free", "inverted", "dblint", "osc")


def lq_problem(spec: LQSpec, config: Optional[EliminationConfig] = None, name="lq") -> Problem:
    """Wrap an LQ specification as a :class:`Problem`.

    A Lagrangian is attached when ``B R^-1 B'`` is invertible, i.e. when the
    velocity can be solved from the costate.
    """
    sys = lq_from_spec(spec)
    A, B, Q, R, Qf = spec.matrices()
    lag = None
    W = B(spec.t0) @ np.linalg.solve(R(spec.t0), B(spec.t0).T)
    if np.linalg.matrix_rank(W) == spec.n:

        def Winv(t):
            return np.linalg.inv(B(t) @ np.linalg.solve(R(t), B(t).T))

        # L(q, v) = (v - Aq)' W^-1 (v - Aq)/2 + q'Qq/2
        lag = Lagrangian(
            n=spec.n,
            value=lambda t, q, v: 0.5 * (v - A(t) @ q) @ Winv(t) @ (v - A(t) @ q) + 0.5 * q @ Q(t) @ q,
            dq=lambda t, q, v: -A(t).T @ Winv(t) @ (v - A(t) @ q) + Q(t) @ q,
            dv=lambda t, q, v: Winv(t) @ (v - A(t) @ q),
            name=name,
        )
    q0 = _vec(spec.q0).astype(float)
    return Problem(name, "linear-quadratic problem", ReducedHamiltonian(build_pontryagin(sys), config),
                   PhasePoint(spec.t0, q0, np.zeros_like(q0)), T=spec.T, system=sys,
                   lagrangian=lag, N=spec.N, extra={"lq": spec, "ocp_q0": q0})


def describe():
    """``(name, n, m, description)`` for every catalog problem."""
    rows = []
    for name in CATALOG:
        pb = get_problem(name)
        rows.append((name, pb.n, pb.m, pb.description))
    return rows


def require(problem: Problem, what: str):
    if what == "lagrangian" and problem.lagrangian is None:
        raise ModelError(f"problem '{problem.name}' has no regular Lagrangian (DEL methods unavailable)")
    if what == "system" and problem.system is None:
        raise ModelError(f"problem '{problem.name}' has no control system")
