"""Discrete optimal control and single shooting.

Discrete problem::

    q_{k+1} = f(k, q_k, u_k),   J = Sbar(N, q_N) + sum_k Lbar(k, q_k, u_k)

with stage Hamiltonian ``Hbar = p_{k+1} . f - Lbar``. The necessary
conditions are

    q_{k+1} = f(k, q_k, u_k)
    p_k     = p_{k+1} f_q - Lbar_q
    0       = p_{k+1} f_u - Lbar_u

with ``q_0`` given and ``p_N = -Sbar_q(N, q_N)``. States run forward and
costates backward; :func:`shoot_discrete` closes the loop by Newton
iteration on ``p_0``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import fd_gradient, fd_jacobian, inf_norm, newton
from .errors import ConvergenceError, ModelError, RegularityError, StepError, SympocpError
from .integrators import Method, MethodSpec, integrate
from .model import ControlSystem, PhasePoint, Trajectory, _vec


@dataclass(frozen=True)
class DiscreteOCP:
    """Discrete-time optimal control problem.

    ``f``/``f_q``/``f_u`` take ``(k, q, u)``; ``L``/``L_q``/``L_u``/``L_uu``
    likewise; ``S``/``S_q`` take ``(N, q)``.
    """

    N: int
    n: int
    m: int
    f: Callable
    f_q: Callable
    f_u: Callable
    L: Callable
    L_q: Callable
    L_u: Callable
    L_uu: Callable
    S: Callable
    S_q: Callable
    q0: np.ndarray
    h: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ModelError("horizon N must be at least 1")
        q0 = _vec(self.q0).astype(float)
        if q0.size != self.n:
            raise ModelError(f"q0 has {q0.size} entries, expected {self.n}")
        object.__setattr__(self, "q0", q0)

    def Hbar(self, k, q, p_next, u):
        return _vec(p_next) @ _vec(self.f(k, q, u)) - self.L(k, q, u)


@dataclass
class DiscreteTrajectory:
    q: np.ndarray  # (N+1, n)
    p: np.ndarray  # (N+1, n)
    u: np.ndarray  # (N, m)
    J: float
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float))
        self.p = np.atleast_2d(np.asarray(self.p, dtype=float))
        N = self.q.shape[0] - 1
        self.u = np.asarray(self.u, dtype=float).reshape(N, -1)
        if self.p.shape != self.q.shape:
            raise ModelError("states and costates must have the same shape")

    @property
    def N(self):
        return self.u.shape[0]


@dataclass(frozen=True)
class ShootingConfig:
    tol: float = 1e-10
    max_iter: int = 50
    fd_step: float = 1e-6
    step_tol: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0:
            raise ModelError("shooting tol must be positive")


def euler_discretization(system: ControlSystem, q0, h: float, N: int, t0: float = 0.0) -> DiscreteOCP:
    """``f = q + h Gamma(t_k, q, u)``, ``Lbar = h L(t_k, q, u)``, ``Sbar = S(t_N, q)``."""
    n, m = system.n, system.m
    tk = lambda k: t0 + k * h
    T = t0 + N * h
    return DiscreteOCP(
        N=N, n=n, m=m,
        f=lambda k, q, u: _vec(q) + h * _vec(system.dynamics(tk(k), q, u)),
        f_q=lambda k, q, u: np.eye(n) + h * np.asarray(system.dynamics_dq(tk(k), q, u)).reshape(n, n),
        f_u=lambda k, q, u: h * np.asarray(system.dynamics_du(tk(k), q, u)).reshape(n, m),
        L=lambda k, q, u: h * system.running_cost(tk(k), q, u),
        L_q=lambda k, q, u: h * _vec(system.running_cost_dq(tk(k), q, u)),
        L_u=lambda k, q, u: h * _vec(system.running_cost_du(tk(k), q, u)),
        L_uu=lambda k, q, u: h * np.asarray(system.running_cost_duu(tk(k), q, u)).reshape(m, m),
        S=lambda N_, q: system.terminal_cost(T, q),
        S_q=lambda N_, q: _vec(system.terminal_cost_dq(T, q)),
        q0=q0, h=h, t0=t0,
    )


def necessary_step(docp: DiscreteOCP, k: int, q_k, p_k, u_guess=None, tol: float = 1e-12, max_iter: int = 50):
    """Advance ``(q_k, p_k)`` to ``(q_{k+1}, p_{k+1})`` through the stage conditions.

    ``(p_{k+1}, u_k)`` solve ``p_k = p_{k+1} f_q - Lbar_q`` and
    ``p_{k+1} f_u = Lbar_u`` jointly; then ``q_{k+1} = f(k, q_k, u_k)``.
    Returns ``(q_next, p_next, u_k)``.
    """
    n, m = docp.n, docp.m
    q_k, p_k = _vec(q_k).astype(float), _vec(p_k).astype(float)

    def residual(z):
        p1, u = z[:n], z[n:]
        fq = np.asarray(docp.f_q(k, q_k, u)).reshape(n, n)
        fu = np.asarray(docp.f_u(k, q_k, u)).reshape(n, m)
        return np.concatenate([
            p_k - (p1 @ fq - _vec(docp.L_q(k, q_k, u))),
            p1 @ fu - _vec(docp.L_u(k, q_k, u)),
        ])

    u0 = np.zeros(m) if u_guess is None else _vec(u_guess).astype(float)
    try:
        z = newton(residual, np.concatenate([p_k, u0]), tol=tol, max_iter=max_iter,
                   what=f"stage {k} necessary conditions").x
    except RegularityError as exc:
        raise RegularityError(f"stage {k}: singular control block; {exc}", exc.matrix) from exc
    except ConvergenceError as exc:
        raise StepError(str(exc), exc.residual, exc.history, index=k) from exc
    p1, u = z[:n], z[n:]
    Huu = np.atleast_2d(_u_hessian(docp, k, q_k, p1, u))
    if m and abs(np.linalg.det(Huu)) < 1e-14 * max(1.0, np.abs(Huu).max()) ** m:
        raise RegularityError(f"stage {k}: control Hessian of Hbar is singular", Huu)
    return _vec(docp.f(k, q_k, u)).astype(float), p1, u


def _u_hessian(docp, k, q, p1, u):
    return fd_jacobian(lambda v: p1 @ np.asarray(docp.f_u(k, q, v)).reshape(docp.n, docp.m)
                       - _vec(docp.L_u(k, q, v)), u, rel=1e-5)


def rollout(docp: DiscreteOCP, p0, tol=1e-12):
    """Forward sweep of :func:`necessary_step` from ``(q_0, p_0)``."""
    q = [docp.q0]
    p = [_vec(p0).astype(float)]
    us = []
    u = None
    for k in range(docp.N):
        qn, pn, u = necessary_step(docp, k, q[-1], p[-1], u, tol=tol)
        q.append(qn), p.append(pn), us.append(u)
    return np.array(q), np.array(p), np.array(us).reshape(docp.N, docp.m)


def objective(docp: DiscreteOCP, controls) -> float:
    """``J = Sbar(N, q_N) + sum_k Lbar(k, q_k, u_k)`` by forward rollout of ``f``."""
    u = np.asarray(controls, dtype=float).reshape(docp.N, docp.m)
    q = docp.q0
    J = 0.0
    for k in range(docp.N):
        J += docp.L(k, q, u[k])
        q = _vec(docp.f(k, q, u[k]))
    return float(J + docp.S(docp.N, q))


def states(docp: DiscreteOCP, controls):
    u = np.asarray(controls, dtype=float).reshape(docp.N, docp.m)
    q = [docp.q0]
    for k in range(docp.N):
        q.append(_vec(docp.f(k, q[-1], u[k])).astype(float))
    return np.array(q)


def augmented_index(docp: DiscreteOCP, traj: DiscreteTrajectory) -> float:
    """``J' = sum_k [p_{k+1}.(f(k, q_k, u_k) - q_{k+1}) - Lbar(k, q_k, u_k)] - Sbar(N, q_N)``."""
    total = 0.0
    for k in range(docp.N):
        fk = _vec(docp.f(k, traj.q[k], traj.u[k]))
        total += traj.p[k + 1] @ (fk - traj.q[k + 1]) - docp.L(k, traj.q[k], traj.u[k])
    return float(total - docp.S(docp.N, traj.q[-1]))


def feasibility_terms(docp: DiscreteOCP, traj: DiscreteTrajectory):
    """The multiplier terms ``p_{k+1}.(f - q_{k+1})`` of ``J'``, one per stage."""
    return np.array([traj.p[k + 1] @ (_vec(docp.f(k, traj.q[k], traj.u[k])) - traj.q[k + 1])
                     for k in range(docp.N)])


def shoot_discrete(docp: DiscreteOCP, cfg: Optional[ShootingConfig] = None, p0_guess=None) -> DiscreteTrajectory:
    """Newton iteration on ``p_0`` until ``|p_N + Sbar_q(N, q_N)|_inf <= tol``.

    A rollout that fails mid-horizon counts as an infinite residual, which
    makes the Newton step halve.
    """
    cfg = cfg or ShootingConfig()

    def boundary(p0):
        q, p, _ = rollout(docp, p0, cfg.step_tol)
        return p[-1] + _vec(docp.S_q(docp.N, q[-1]))

    p0 = np.zeros(docp.n) if p0_guess is None else _vec(p0_guess).astype(float)
    try:
        res = newton(boundary, p0, tol=cfg.tol, max_iter=cfg.max_iter, fd_rel=cfg.fd_step,
                     what="discrete shooting")
    except ConvergenceError as exc:
        raise ConvergenceError(f"discrete shooting diverged: {exc}", exc.residual, exc.history) from exc
    q, p, u = rollout(docp, res.x, cfg.step_tol)
    return DiscreteTrajectory(q, p, u, objective(docp, u),
                              info={"residual": res.residual, "history": res.history,
                                    "iterations": res.iterations})


def brute_force_solve(docp: DiscreteOCP, tol: float = 1e-8, u0=None, max_iter: int = 50,
                      fd_step: float = 1e-5) -> DiscreteTrajectory:
    """Reference solver: dense Newton on ``J`` over the stacked controls.

    Gradient and Hessian come from finite differences of :func:`objective`
    only, independent of the costate machinery. Costates in the result are
    left as NaN.
    """
    dim = docp.N * docp.m
    if dim > 200:
        raise ModelError(f"brute force limited to N*m <= 200, got {dim}")
    J = lambda u: objective(docp, u)
    grad = lambda u: fd_gradient(J, u, rel=fd_step)

    def hess(u):
        H = _fd_hessian(J, u, 1e-4)
        return 0.5 * (H + H.T)

    x = np.zeros(dim) if u0 is None else np.asarray(u0, dtype=float).reshape(-1)
    try:
        res = newton(grad, x, tol=tol, max_iter=max_iter, jac=hess, polish=False, what="brute-force minimisation")
    except ConvergenceError as exc:
        raise ConvergenceError(f"brute-force minimisation failed: {exc}", exc.residual, exc.history) from exc
    u = res.x.reshape(docp.N, docp.m)
    q = states(docp, u)
    return DiscreteTrajectory(q, np.full_like(q, np.nan), u, J(u),
                              info={"grad_norm": res.residual, "iterations": res.iterations})


def _fd_hessian(fun, x, rel):
    x = np.asarray(x, dtype=float)
    d = x.size
    s = rel * np.maximum(1.0, np.abs(x))
    H = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i], ej[j] = s[i], s[j]
            H[i, j] = H[j, i] = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (
                4 * s[i] * s[j])
    return H


# ---------------------------------------------------------------------------
# continuous problems


def shoot_continuous(rh, terminal_cost_dq, q0, t0: float, T: float, method: Optional[MethodSpec] = None,
                     h: float = 0.01, cfg: Optional[ShootingConfig] = None, p0_guess=None) -> Trajectory:
    """Single shooting on ``p(t0)`` so that ``p(T) = -S_q(T, q(T))``.

    The state-costate system is propagated with a second-kind integrator
    (symplectic Euler or the Hamilton-Jacobi series). ``T - t0`` must be an
    integer multiple of ``h``.
    """
    method = method or MethodSpec(Method.GF2_EULER)
    cfg = cfg or ShootingConfig()
    if method.is_lagrangian:
        raise ModelError("continuous shooting needs a phase-space (second-kind) method")
    steps = int(round((T - t0) / h))
    if steps < 1 or abs(steps * h - (T - t0)) > 1e-9 * max(1.0, abs(T)):
        raise ModelError(f"horizon {T - t0} is not a positive multiple of h={h}")
    q0 = _vec(q0).astype(float)

    def propagate(p0):
        return integrate(method, rh, PhasePoint(t0, q0, p0), h, steps)

    def boundary(p0):
        tr = propagate(p0)
        return tr.p[-1] + _vec(terminal_cost_dq(tr.t[-1], tr.q[-1]))

    p0 = np.zeros_like(q0) if p0_guess is None else _vec(p0_guess).astype(float)
    try:
        res = newton(boundary, p0, tol=cfg.tol, max_iter=cfg.max_iter, fd_rel=cfg.fd_step,
                     what="continuous shooting")
    except ConvergenceError as exc:
        raise ConvergenceError(f"continuous shooting diverged: {exc}", exc.residual, exc.history) from exc
    traj = propagate(res.x)
    traj.meta.update(residual=res.residual, history=res.history, iterations=res.iterations)
    return traj
