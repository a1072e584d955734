"""Numerical certificates: symplecticity, convergence order, energy behaviour,
Hamilton-Jacobi residuals and generating-function chain residuals."""

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import FD_REL_STEP, fd_steps, inf_norm
from .errors import ModelError, SympocpError, VerificationError
from .integrators import (DiscreteLagrangian, Method, MethodSpec, _series_sums, integrate,
                          series_coefficients, step_del_phase, step_gf2, step_series)
from .model import PhasePoint, Trajectory, _vec

ERROR_FLOOR = 1e-12


def canonical_form(dim: int):
    """``[[0, I], [-I, 0]]`` of size ``dim`` (must be even)."""
    if dim % 2:
        raise VerificationError(f"symplectic form needs an even dimension, got {dim}")
    n = dim // 2
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def symplectic_defect(M) -> float:
    """``max |M' J M - J|`` for the canonical skew matrix ``J``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise VerificationError(f"matrix must be square, got {M.shape}")
    J = canonical_form(M.shape[0])
    return float(np.max(np.abs(M.T @ J @ M - J)))


def flow_jacobian(step, x: PhasePoint, h: float = None, rel: float = FD_REL_STEP):
    """Central-difference Jacobian of ``(q, p) -> step(x, h)``.

    ``step`` is called as ``step(PhasePoint, h)`` (or ``step(PhasePoint)`` if
    ``h`` is None) and must return a :class:`PhasePoint`.
    """
    z = x.z
    steps = fd_steps(z, rel)
    cols = []
    call = (lambda pt: step(pt)) if h is None else (lambda pt: step(pt, h))
    for j in range(z.size):
        e = np.zeros(z.size)
        e[j] = steps[j]
        try:
            zp = call(PhasePoint.from_z(x.t, z + e)).z
            zm = call(PhasePoint.from_z(x.t, z - e)).z
        except SympocpError as exc:
            raise VerificationError(f"step failed on the difference stencil: {exc}") from exc
        cols.append((zp - zm) / (2 * steps[j]))
    return np.stack(cols, axis=1)


def explicit_euler_step(rh, x: PhasePoint, h: float) -> PhasePoint:
    """Non-symplectic reference: ``q1 = q0 + h H_p``, ``p1 = p0 - h H_q`` at the old point."""
    gq, gp = rh.grad(x.t, x.q, x.p)
    return PhasePoint(x.t + h, x.q + h * _vec(gp), x.p - h * _vec(gq))


def one_step_map(method: MethodSpec, system) -> Callable:
    """``step(x, h)`` for any method, acting on phase points."""
    kind = method.kind
    if kind is Method.GF2_EULER:
        return lambda x, h: step_gf2(system, x, h, method)
    if kind is Method.SERIES:
        return lambda x, h: step_series(system, x, h, method.order, method)
    if kind is Method.DEL_FIXED:
        return lambda x, h: step_del_phase(system, x, h, method.alpha, method)
    raise ModelError(f"no fixed-step phase-space map for {kind.value}")


# ---------------------------------------------------------------------------
# reports


@dataclass
class SymplecticityReport:
    defects: np.ndarray
    fd_step: float = FD_REL_STEP
    problem: str = ""
    method: str = ""
    h: float = float("nan")
    tol: float = 1e-5

    @property
    def samples(self):
        return int(np.size(self.defects))

    @property
    def max_defect(self):
        return float(np.max(self.defects))

    @property
    def mean_defect(self):
        return float(np.mean(self.defects))

    @property
    def passed(self):
        return self.max_defect <= self.tol

    def to_json(self):
        return {"check": "symplecticity", "problem": self.problem, "method": self.method, "h": self.h,
                "samples": self.samples, "max_defect": self.max_defect, "mean_defect": self.mean_defect,
                "slope": None, "pass": bool(self.passed)}


def symplecticity_sweep(step, points, h, tol=1e-5, problem="", method="") -> SymplecticityReport:
    """Defect of ``step`` at each phase point in ``points``."""
    defects = np.array([symplectic_defect(flow_jacobian(step, x, h)) for x in points])
    if defects.size == 0:
        raise VerificationError("need at least one sample point")
    return SymplecticityReport(defects, FD_REL_STEP, problem, method, h, tol)


def random_points(n, count, rng, scale=1.0, t=0.0):
    return [PhasePoint(t, rng.uniform(-scale, scale, n), rng.uniform(-scale, scale, n)) for _ in range(count)]


@dataclass
class OrderReport:
    h: np.ndarray
    errors: np.ndarray
    slope: float
    nominal: float = float("nan")
    used: np.ndarray = field(default=None)
    flagged: bool = False
    note: str = ""

    def passed(self, tol=0.2):
        return (not self.flagged) and abs(self.slope - self.nominal) <= tol

    def to_json(self, problem="", method=""):
        return {"check": "order", "problem": problem, "method": method, "h": self.h.tolist(),
                "samples": int(self.h.size), "max_defect": None, "mean_defect": None,
                "errors": self.errors.tolist(), "slope": None if np.isnan(self.slope) else self.slope,
                "nominal": self.nominal, "pass": bool(self.passed())}


def fit_order(h, errors, nominal=float("nan"), floor=ERROR_FLOOR) -> OrderReport:
    """Least-squares slope of ``log e`` against ``log h``.

    Points within 100x of ``floor`` are discarded. Fewer than two remaining
    points leave the order undefined and the report flagged.
    """
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(np.diff(h) >= 0):
        raise ModelError("step sizes must be strictly decreasing")
    used = errors > 100 * floor
    if used.sum() < 2:
        return OrderReport(h, errors, float("nan"), nominal, used, True, "errors at the solver floor")
    slope = np.polyfit(np.log(h[used]), np.log(errors[used]), 1)[0]
    note = "" if used.all() else f"ladder truncated to {int(used.sum())} points"
    return OrderReport(h, errors, float(slope), nominal, used, False, note)


def observed_order(method: MethodSpec, system, x0: PhasePoint, T: float, oracle: Callable,
                   h_ladder, nominal=None) -> OrderReport:
    """Global error at time ``T`` against ``oracle(x0, T - x0.t)`` over a ladder of steps.

    ``system`` is a Hamiltonian for second-kind methods and a Lagrangian for
    DEL methods (errors are then measured on ``(q, p)`` with ``p`` from the
    discrete Legendre transform). ``method`` may also be the string
    ``"explicit-euler"`` or a callable ``step(x, h)``.
    """
    h_ladder = np.asarray(h_ladder, dtype=float)
    if h_ladder.size < 4:
        raise ModelError("an order ladder needs at least 4 step sizes")
    exact = oracle(x0, T - x0.t).z
    errors = []
    for h in h_ladder:
        steps = int(round((T - x0.t) / h))
        if abs(steps * h - (T - x0.t)) > 1e-9 * max(1.0, abs(T)):
            raise ModelError(f"h={h} does not divide the horizon")
        if callable(method) or method == "explicit-euler":
            step = method if callable(method) else (lambda x, hh: explicit_euler_step(system, x, hh))
            x = x0
            for _ in range(steps):
                x = step(x, h)
            z = x.z
        else:
            tr = integrate(method, system, x0, h, steps)
            z = np.concatenate([tr.q[-1], tr.p[-1]])
        errors.append(inf_norm(z - exact))
    if nominal is None:
        nominal = nominal_order(method)
    return fit_order(h_ladder, errors, nominal)


def series_reference(rh, h_ref: float):
    """Oracle ``(x0, T) -> x(T)`` from the order-3 series at a step no larger than ``h_ref``."""
    spec = MethodSpec(Method.SERIES, order=3)

    def oracle(x0: PhasePoint, T: float) -> PhasePoint:
        steps = max(1, int(np.ceil(T / h_ref - 1e-9)))
        tr = integrate(spec, rh, x0, T / steps, steps)
        return PhasePoint(tr.t[-1], tr.q[-1], tr.p[-1])
    return oracle


def nominal_order(method) -> float:
    if not isinstance(method, MethodSpec):
        return 1.0
    if method.kind is Method.SERIES:
        return float(method.order)
    if method.kind is Method.GF2_EULER:
        return 1.0
    return 2.0 if method.alpha == 0.5 else 1.0


def energy_drift(traj: Trajectory):
    """``(max |H_k - H_0|, least-squares slope of H against t)``."""
    dev = traj.H - traj.H[0]
    slope = np.polyfit(traj.t, traj.H, 1)[0] if len(traj) > 1 else 0.0
    return float(np.max(np.abs(dev))), float(slope)


def explicit_euler_rollout(rh, x0: PhasePoint, h: float, steps: int) -> Trajectory:
    ts, qs, ps, Hs = [x0.t], [x0.q], [x0.p], [rh.value(x0.t, x0.q, x0.p)]
    x = x0
    for _ in range(steps):
        x = explicit_euler_step(rh, x, h)
        ts.append(x.t), qs.append(x.q), ps.append(x.p), Hs.append(rh.value(x.t, x.q, x.p))
    return Trajectory(ts, qs, ps, np.zeros((len(ts), 0)), Hs, meta={"method": "explicit-euler"})


def truncated_s2(rh, r, q0, p1, t, t_anchor=0.0):
    """``S_2 = q0.p1 + sum_{i<=r} t^i G_i(q0, p1)``."""
    G = series_coefficients(rh, q0, p1, t_anchor, r)
    return _vec(q0) @ _vec(p1) + sum(t ** (i + 1) * G[i] for i in range(r))


def hj_residual(rh, r, q0, p1, t, t_anchor=0.0, rel=FD_REL_STEP) -> float:
    """``|dS_2/dt - H(dS_2/dp1, p1)|`` for the order-``r`` truncated series.

    Both derivatives are central differences of :func:`truncated_s2`; the
    time step is ``rel * max(1, |t|)``, i.e. absolute at small ``t``.
    """
    q0, p1 = _vec(q0).astype(float), _vec(p1).astype(float)
    S = lambda tt, pp: truncated_s2(rh, r, q0, pp, tt, t_anchor)
    dt = rel * max(1.0, abs(t))
    dS_dt = (S(t + dt, p1) - S(t - dt, p1)) / (2 * dt)
    steps = fd_steps(p1, rel)
    dS_dp = np.empty_like(p1)
    for j in range(p1.size):
        e = np.zeros_like(p1)
        e[j] = steps[j]
        dS_dp[j] = (S(t, p1 + e) - S(t, p1 - e)) / (2 * steps[j])
    return float(abs(dS_dt - np.real(rh.value(t_anchor, dS_dp, p1))))


def composition_check(method: MethodSpec, system, x0, h: float = None, steps: int = None) -> float:
    """Largest residual of the chain conditions along ``integrate(method, system, x0, h, steps)``.

    ``x0`` may also be an already computed :class:`Trajectory`. DEL trajectories: ``D2 S_d(q_{k-1}, q_k) + D1 S_d(q_k, q_{k+1})`` at the
    interior points (plus the energy equation for adaptive runs); vacuous for
    a single step. Second-kind trajectories: the defining relations
    ``q_k = dS_2/dp(q_{k-1}, p_k)`` and ``p_k = dS_2/dq(q_k, p_{k+1})``.
    """
    if isinstance(x0, Trajectory):
        traj = x0
    else:
        if h is None or steps is None:
            raise ModelError("composition_check needs h and steps when given a start point")
        traj = integrate(method, system, x0, h, steps)
    N = len(traj) - 1
    if method.is_lagrangian:
        Sd = DiscreteLagrangian(system, method.alpha)
        worst = 0.0
        for k in range(1, N):
            args = (traj.q[k - 1], traj.q[k], traj.q[k + 1], traj.t[k - 1], traj.t[k], traj.t[k + 1])
            worst = max(worst, inf_norm(Sd.del_residual(*args)))
            if method.kind is Method.DEL_ADAPTIVE:
                worst = max(worst, abs(float(Sd.energy_residual(*args))))
        return worst
    r = 1 if method.kind is Method.GF2_EULER else method.order
    worst = 0.0
    for k in range(N):
        h = traj.t[k + 1] - traj.t[k]
        dq, dp = _series_sums(system, traj.t[k], traj.q[k], traj.p[k + 1], h, r)
        worst = max(worst, inf_norm(traj.q[k + 1] - traj.q[k] - dp), inf_norm(traj.p[k] - traj.p[k + 1] - dq))
    return worst


def report_json(check, problem, method, h=None, samples=None, max_defect=None, mean_defect=None,
                slope=None, passed=False, **extra):
    out = {"check": check, "problem": problem, "method": method, "h": h, "samples": samples,
           "max_defect": max_defect, "mean_defect": mean_defect, "slope": slope, "pass": bool(passed)}
    out.update(extra)
    return out
