"""One-step symplectic maps built from generating functions.

Second-kind maps act on phase points ``(q, p)`` of a Hamiltonian:

* ``step_gf2`` -- generating function ``q0.p1 + h H(t0, q0, p1)``, i.e.
  symplectic Euler with ``p1`` implicit;
* ``step_series`` -- the truncated Hamilton-Jacobi series
  ``q0.p1 + sum_i h^i G_i(q0, p1)``, ``i <= r``.

First-kind maps act on position pairs of a Lagrangian through the discrete
Lagrangian ``S_d = h L(alpha q0 + (1-alpha) q1, (q1 - q0)/h)``:

* ``step_del`` -- discrete Euler-Lagrange equations on a fixed grid;
* ``step_del_adaptive`` -- the same coupled with the discrete energy
  equation, which also determines the next time.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ._numerics import complex_step_jacobian, fd_jacobian, inf_norm, newton
from .errors import ConvergenceError, ModelError, RegularityError, StepError, SympocpError
from .model import PhasePoint, Trajectory, _vec

MIN_ADAPTIVE_STEP = 1e-10


class Method(str, Enum):
    GF2_EULER = "gf2-euler"
    SERIES = "series"
    DEL_FIXED = "del"
    DEL_ADAPTIVE = "del-adaptive"


@dataclass(frozen=True)
class MethodSpec:
    kind: Method = Method.GF2_EULER
    order: int = 1
    alpha: float = 0.5
    implicit_tol: float = 1e-12
    implicit_max_iter: int = 50

    def __post_init__(self):
        object.__setattr__(self, "kind", Method(self.kind))
        if self.kind is Method.SERIES and self.order not in (1, 2, 3):
            raise ModelError(f"series order must be 1, 2 or 3, got {self.order}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ModelError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.implicit_tol > 0 or self.implicit_max_iter < 1:
            raise ModelError("implicit_tol must be positive and implicit_max_iter at least 1")

    @property
    def is_lagrangian(self):
        return self.kind in (Method.DEL_FIXED, Method.DEL_ADAPTIVE)


def _solve(residual, x0, spec, what, **kw):
    try:
        return newton(residual, x0, tol=spec.implicit_tol, max_iter=spec.implicit_max_iter, what=what, **kw)
    except (ConvergenceError, RegularityError) as exc:
        raise StepError(str(exc), getattr(exc, "residual", np.inf), getattr(exc, "history", ())) from exc


# ---------------------------------------------------------------------------
# second kind: symplectic Euler and the Hamilton-Jacobi series


def step_gf2(rh, x: PhasePoint, h: float, spec: Optional[MethodSpec] = None, u_guess=None) -> PhasePoint:
    """Solve ``p0 = p1 + h H_q(t0, q0, p1)`` for ``p1``, then ``q1 = q0 + h H_p(t0, q0, p1)``."""
    spec = spec or MethodSpec()
    if h == 0:
        raise ModelError("step size must be non-zero")
    t0, q0, p0 = x.t, x.q, x.p

    def residual(p1):
        return p0 - p1 - h * _vec(rh.grad(t0, q0, p1, u_guess)[0])

    p1 = _solve(residual, p0, spec, "symplectic Euler step").x
    q1 = q0 + h * _vec(rh.grad(t0, q0, p1, u_guess)[1])
    return PhasePoint(t0 + h, q1, p1)


def _derivative_data(rh, t, q, p, r):
    gq, gp = rh.grad(t, q, p)
    g = np.concatenate([_vec(gq), _vec(gp)])
    Hs = rh.hessian(t, q, p) if r >= 2 else None
    T = rh.third(t, q, p) if r >= 3 else None
    return g, Hs, T


def series_coefficients(rh, q0, p1, t_anchor=0.0, r=3):
    """Values ``(G_1, ..., G_r)`` of the Hamilton-Jacobi series coefficients at ``(q0, p1)``.

    ``G_1 = H``, ``G_2 = H_q.H_p / 2`` and
    ``G_3 = (H_pp[H_q, H_q] + H_pq[H_q, H_p] + H_qq[H_p, H_p]) / 6``,
    with time frozen at ``t_anchor``.
    """
    q0, p1 = _vec(q0), _vec(p1)
    n = q0.size
    G = [float(np.real(rh.value(t_anchor, q0, p1)))]
    if r >= 2:
        g, Hs, _ = _derivative_data(rh, t_anchor, q0, p1, 2)
        gq, gp = g[:n], g[n:]
        G.append(0.5 * gq @ gp)
        if r >= 3:
            Hqq, Hpq, Hpp = Hs[:n, :n], Hs[n:, :n], Hs[n:, n:]
            G.append((gq @ Hpp @ gq + gq @ Hpq @ gp + gp @ Hqq @ gp) / 6.0)
    return np.array(G)


def series_gradients(rh, q0, p1, t_anchor=0.0, r=3):
    """Gradients of ``G_1..G_r`` in ``x = (q0, p1)``, shape ``(r, 2n)``.

    Obtained by differentiating the closed forms of the coefficients, using
    the Hessian and third-derivative tensor of ``H``.
    """
    q0, p1 = _vec(q0), _vec(p1)
    n = q0.size
    g, Hs, T = _derivative_data(rh, t_anchor, q0, p1, r)
    out = [g]
    if r >= 2:
        gq, gp = g[:n], g[n:]
        dgq, dgp = Hs[:n, :], Hs[n:, :]  # d(gq)/dx, d(gp)/dx
        out.append(0.5 * (gp @ dgq + gq @ dgp))
        if r >= 3:
            Hqq, Hpq, Hpp = Hs[:n, :n], Hs[n:, :n], Hs[n:, n:]
            Tqq, Tpq, Tpp = T[:n, :n, :], T[n:, :n, :], T[n:, n:, :]
            d1 = np.einsum("a,abj,b->j", gq, Tpp, gq) + 2.0 * (gq @ Hpp) @ dgq
            d2 = (np.einsum("a,abj,b->j", gq, Tpq, gp)
                  + (Hpq @ gp) @ dgq + (gq @ Hpq) @ dgp)
            d3 = np.einsum("a,abj,b->j", gp, Tqq, gp) + 2.0 * (gp @ Hqq) @ dgp
            out.append((d1 + d2 + d3) / 6.0)
    return np.array(out)


def _series_sums(rh, t0, q0, p1, h, r):
    dG = series_gradients(rh, q0, p1, t0, r)
    weights = h ** np.arange(1, r + 1)
    total = weights @ dG
    n = q0.size
    return total[:n], total[n:]


def step_series(rh, x: PhasePoint, h: float, r: int = 2, spec: Optional[MethodSpec] = None) -> PhasePoint:
    """One step of the order-``r`` Hamilton-Jacobi series map.

    ``p0 = p1 + sum h^i dG_i/dq(q0, p1)`` is solved for ``p1``, then
    ``q1 = q0 + sum h^i dG_i/dp(q0, p1)``. Time is frozen at ``x.t``, so
    for explicitly time-dependent Hamiltonians the order drops to one.
    """
    spec = spec or MethodSpec(Method.SERIES, order=r)
    if r not in (1, 2, 3):
        raise ModelError(f"series order must be 1, 2 or 3, got {r}")
    t0, q0, p0 = x.t, x.q, x.p
    if h == 0:
        return PhasePoint(t0, q0.copy(), p0.copy())

    def residual(p1):
        return p0 - p1 - _series_sums(rh, t0, q0, p1, h, r)[0]

    n = q0.size

    def jac(p1):
        # leading-order Jacobian; the higher series terms only slow convergence by O(h^2)
        Hs = rh.hessian(t0, q0, np.real(p1))
        return -np.eye(n) - h * Hs[:n, n:]

    p1 = _solve(residual, p0, spec, f"order-{r} series step", jac=jac).x
    q1 = q0 + _series_sums(rh, t0, q0, p1, h, r)[1]
    return PhasePoint(t0 + h, q1, p1)


# ---------------------------------------------------------------------------
# first kind: discrete Euler-Lagrange


@dataclass(frozen=True)
class Lagrangian:
    """``L(t, q, v)`` with gradients ``L_q``, ``L_v`` and optionally ``L_t``.

    ``dt=None`` marks an autonomous Lagrangian.
    """

    n: int
    value: Callable
    dq: Callable
    dv: Callable
    dt: Optional[Callable] = None
    name: str = ""

    def L_t(self, t, q, v):
        return 0.0 if self.dt is None else self.dt(t, q, v)


class DiscreteLagrangian:
    """``S_d(q0, q1, t0, t1) = (t1 - t0) L(alpha t0 + (1-alpha) t1, alpha q0 + (1-alpha) q1, (q1 - q0)/(t1 - t0))``.

    ``d1..d4`` are the partial derivatives with respect to ``q0, q1, t0, t1``.
    """

    def __init__(self, lagrangian: Lagrangian, alpha: float = 0.5):
        self.L = lagrangian
        self.alpha = float(alpha)

    def _args(self, q0, q1, t0, t1):
        a = self.alpha
        h = t1 - t0
        return h, a * t0 + (1 - a) * t1, a * q0 + (1 - a) * q1, (q1 - q0) / h

    def value(self, q0, q1, t0, t1):
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        return h * self.L.value(tau, xi, v)

    def d1(self, q0, q1, t0, t1):
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        return h * self.alpha * _vec(self.L.dq(tau, xi, v)) - _vec(self.L.dv(tau, xi, v))

    def d2(self, q0, q1, t0, t1):
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        return h * (1 - self.alpha) * _vec(self.L.dq(tau, xi, v)) + _vec(self.L.dv(tau, xi, v))

    def energy(self, q0, q1, t0, t1):
        """Discrete energy ``v.L_v - L`` at the interval's evaluation point."""
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        return v @ _vec(self.L.dv(tau, xi, v)) - self.L.value(tau, xi, v)

    def d3(self, q0, q1, t0, t1):
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        E = v @ _vec(self.L.dv(tau, xi, v)) - self.L.value(tau, xi, v)
        return E + h * self.alpha * self.L.L_t(tau, xi, v)

    def d4(self, q0, q1, t0, t1):
        h, tau, xi, v = self._args(_vec(q0), _vec(q1), t0, t1)
        E = v @ _vec(self.L.dv(tau, xi, v)) - self.L.value(tau, xi, v)
        return -E + h * (1 - self.alpha) * self.L.L_t(tau, xi, v)

    def del_residual(self, q_prev, q_curr, q_next, t_prev, t_curr, t_next):
        return self.d2(q_prev, q_curr, t_prev, t_curr) + self.d1(q_curr, q_next, t_curr, t_next)

    def energy_residual(self, q_prev, q_curr, q_next, t_prev, t_curr, t_next):
        return self.d4(q_prev, q_curr, t_prev, t_curr) + self.d3(q_curr, q_next, t_curr, t_next)


def _jacobian(fun):
    def jac(x):
        if np.iscomplexobj(x):
            return fd_jacobian(fun, x)
        try:
            return complex_step_jacobian(fun, x)
        except (TypeError, ValueError, ArithmeticError, SympocpError):
            return fd_jacobian(fun, x)

    return jac


def _del_next(Sd, left, q_guess, q_curr, t_curr, t_next, spec, what="discrete Euler-Lagrange step"):
    """``q_next`` with ``left + D1 S_d(q_curr, q_next) = 0``, ``left`` being the previous interval's ``D2 S_d``."""

    def residual(x):
        return left + Sd.d1(q_curr, x, t_curr, t_next)

    return _solve(residual, q_guess, spec, what, jac=_jacobian(residual)).x


def step_del(lagrangian: Lagrangian, q_prev, q_curr, t_k: float, h: float, alpha: float = 0.5,
             spec: Optional[MethodSpec] = None):
    """Solve ``D2 S_d(q_prev, q_curr) + D1 S_d(q_curr, q_next) = 0`` for ``q_next``.

    ``t_k`` is the time of ``q_curr``; the grid is uniform with spacing ``h``.
    """
    spec = spec or MethodSpec(Method.DEL_FIXED, alpha=alpha)
    Sd = DiscreteLagrangian(lagrangian, alpha)
    q_prev, q_curr = _vec(q_prev).astype(float), _vec(q_curr).astype(float)
    left = Sd.d2(q_prev, q_curr, t_k - h, t_k)
    return _del_next(Sd, left, 2 * q_curr - q_prev, q_curr, t_k, t_k + h, spec)


def del_legendre_start(lagrangian: Lagrangian, x: PhasePoint, h: float, alpha: float = 0.5,
                       spec: Optional[MethodSpec] = None):
    """Position ``q1`` at ``x.t + h`` with ``p0 = -D1 S_d(q0, q1)`` (discrete Legendre transform)."""
    spec = spec or MethodSpec(Method.DEL_FIXED, alpha=alpha)
    Sd = DiscreteLagrangian(lagrangian, alpha)
    t0, q0, p0 = x.t, x.q, x.p

    def residual(q1):
        return p0 + Sd.d1(q0, q1, t0, t0 + h)

    return _solve(residual, q0.astype(float), spec, "discrete Legendre transform",
                  jac=_jacobian(residual)).x


def step_del_phase(lagrangian: Lagrangian, x: PhasePoint, h: float, alpha: float = 0.5,
                   spec: Optional[MethodSpec] = None) -> PhasePoint:
    """The DEL scheme as a map on ``(q, p)``: ``p0 = -D1 S_d(q0, q1)``, ``p1 = D2 S_d(q0, q1)``."""
    q1 = del_legendre_start(lagrangian, x, h, alpha, spec)
    Sd = DiscreteLagrangian(lagrangian, alpha)
    return PhasePoint(x.t + h, q1, Sd.d2(x.q, q1, x.t, x.t + h))


def step_del_adaptive(lagrangian: Lagrangian, q_prev, q_curr, t_prev: float, t_curr: float,
                      alpha: float = 0.5, spec: Optional[MethodSpec] = None):
    """Solve the position and energy equations jointly for ``(q_next, t_next)``.

    The unknown step is carried as ``log(t_next - t_curr)``: the equations
    are symmetric under time reversal and otherwise admit the backward root
    ``(q_prev, t_prev)``, which Newton is easily drawn to. Newton starts
    from the fixed-step DEL solution with the previous step size, and its
    corrections are minimum-norm least-squares solutions, so directions in
    which the two equations are degenerate (e.g. a free particle, where any
    step size is admissible) keep the previous step.
    """
    spec = spec or MethodSpec(Method.DEL_ADAPTIVE, alpha=alpha)
    Sd = DiscreteLagrangian(lagrangian, alpha)
    q_prev, q_curr = _vec(q_prev).astype(float), _vec(q_curr).astype(float)
    n = q_curr.size
    h_prev = t_curr - t_prev
    if not h_prev > 0:
        raise StepError("adaptive step needs t_curr > t_prev")
    left_q = Sd.d2(q_prev, q_curr, t_prev, t_curr)
    left_t = Sd.d4(q_prev, q_curr, t_prev, t_curr)

    def residual(z):
        q_next, t_next = z[:n], t_curr + np.exp(z[n])
        return np.concatenate([
            left_q + Sd.d1(q_curr, q_next, t_curr, t_next),
            np.atleast_1d(left_t + Sd.d3(q_curr, q_next, t_curr, t_next)),
        ])

    fixed = MethodSpec(Method.DEL_FIXED, alpha=alpha, implicit_tol=spec.implicit_tol,
                       implicit_max_iter=spec.implicit_max_iter)

    def q_of(h, guess):
        return _del_next(Sd, left_q, guess, q_curr, t_curr, t_curr + h, fixed)

    try:
        q_guess = q_of(h_prev, 2 * q_curr - q_prev)
    except StepError:
        q_guess = 2 * q_curr - q_prev
    z0 = np.concatenate([q_guess, [np.log(h_prev)]])
    try:
        z = _solve(residual, z0, spec, "adaptive discrete Euler-Lagrange step",
                   jac=_jacobian(residual), lstsq=True).x
    except StepError as coupled:
        # near turning points the coupled Jacobian is close to singular; eliminate
        # q_next through the position equation and solve the energy equation in log h
        def energy(s):
            h = float(np.exp(s[0]))
            return np.atleast_1d(left_t + Sd.d3(q_curr, q_of(h, q_guess), t_curr, t_curr + h))

        try:
            s = _solve(energy, z0[n:], spec, "adaptive step size (reduced)", fd_rel=1e-7).x
            z = np.concatenate([q_of(float(np.exp(s[0])), q_guess), s])
        except StepError:
            raise coupled from None
        if np.abs(residual(z)).max() > spec.implicit_tol:
            raise coupled
    h = float(np.exp(z[n]))
    if not h > MIN_ADAPTIVE_STEP:
        raise StepError(f"adaptive step collapsed (h = {h:.3e})")
    return z[:n], t_curr + h


# ---------------------------------------------------------------------------
# trajectories


def _record(hamiltonian, t, q, p, u_prev):
    if hamiltonian is None:
        return np.zeros(0), np.nan
    u = _vec(hamiltonian.control(t, q, p, u_prev))
    return u, float(np.real(hamiltonian.value(t, q, p, u)))


def integrate(method: MethodSpec, system, x0, h: float, steps: int, *, t0: float = 0.0,
              hamiltonian=None) -> Trajectory:
    """Iterate a one-step map ``steps`` times.

    For the second-kind methods ``system`` is a Hamiltonian and ``x0`` a
    :class:`PhasePoint`. For the DEL methods ``system`` is a
    :class:`Lagrangian` and ``x0`` is either a phase point (the first
    position step then comes from the discrete Legendre transform) or a
    pair ``(q0, q1)`` of positions at ``t0`` and ``t0 + h``; momenta in the
    returned trajectory are ``p_k = D2 S_d(q_{k-1}, q_k)``. Pass
    ``hamiltonian`` to record control and Hamiltonian values along DEL
    runs.

    A failing step raises :class:`StepError` carrying the step index and the
    partial trajectory.
    """
    if steps < 0:
        raise ModelError("steps must be non-negative")
    if h <= 0:
        raise ModelError("step size must be positive")
    if method.is_lagrangian:
        return _integrate_del(method, system, x0, h, steps, t0, hamiltonian)

    if not isinstance(x0, PhasePoint):
        raise ModelError("second-kind methods start from a PhasePoint")
    rec = hamiltonian or system
    x = x0
    u_prev = None
    ts, qs, ps, us, Hs = [], [], [], [], []

    def push(x):
        nonlocal u_prev
        u, Hv = _record(rec, x.t, x.q, x.p, u_prev)
        u_prev = u if u.size else None
        ts.append(x.t), qs.append(x.q), ps.append(x.p), us.append(u), Hs.append(Hv)

    def partial():
        return Trajectory(ts, qs, ps, np.array(us).reshape(len(ts), -1), Hs, meta={"method": method.kind.value})

    push(x)
    for k in range(steps):
        try:
            if method.kind is Method.GF2_EULER:
                x = step_gf2(system, x, h, method, u_guess=u_prev)
            else:
                x = step_series(system, x, h, method.order, method)
        except SympocpError as exc:
            raise StepError(f"step {k} failed: {exc}", getattr(exc, "residual", np.inf),
                            index=k, partial=partial()) from exc
        push(x)
    traj = partial()
    traj.meta.update(h=h, order=method.order)
    return traj


def _integrate_del(method, lagrangian, x0, h, steps, t0, hamiltonian):
    Sd = DiscreteLagrangian(lagrangian, method.alpha)
    if isinstance(x0, PhasePoint):
        t0 = x0.t
        q0 = x0.q
        q1 = del_legendre_start(lagrangian, x0, h, method.alpha, method)
    else:
        q0, q1 = (_vec(v).astype(float) for v in x0)
    qs = [q0, q1]
    ts = [t0, t0 + h]

    def build(nq):
        # p_0 from the left Legendre transform, p_k = D2 S_d(q_{k-1}, q_k) afterwards
        q = qs[:nq]
        t = ts[:nq]
        p = [-Sd.d1(qs[0], qs[1], ts[0], ts[1])]
        p += [Sd.d2(q[k - 1], q[k], t[k - 1], t[k]) for k in range(1, nq)]
        us, Hs = [], []
        u_prev = None
        for k in range(nq):
            u, Hv = _record(hamiltonian, t[k], q[k], p[k], u_prev)
            u_prev = u if u.size else None
            us.append(u), Hs.append(Hv)
        return Trajectory(t, q, p, np.array(us).reshape(nq, -1), Hs,
                          meta={"method": method.kind.value, "alpha": method.alpha, "h": h})

    for k in range(1, steps):
        try:
            if method.kind is Method.DEL_FIXED:
                q_next = step_del(lagrangian, qs[k - 1], qs[k], ts[k], h, method.alpha, method)
                t_next = ts[0] + (k + 1) * h
            else:
                q_next, t_next = step_del_adaptive(lagrangian, qs[k - 1], qs[k], ts[k - 1], ts[k],
                                                   method.alpha, method)
        except SympocpError as exc:
            raise StepError(f"step {k} failed: {exc}", getattr(exc, "residual", np.inf),
                            index=k, partial=build(k + 1)) from exc
        qs.append(q_next)
        ts.append(t_next)
    return build(steps + 1)
