"""Continuous optimal control problems and their Pontryagin Hamiltonian.

A problem is ``qdot = Gamma(t, q, u)`` with cost
``int L(t, q, u) dt + S(T, q(T))``. The Pontryagin function used
throughout the package is ``H = p . Gamma - L``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import fd_jacobian
from .errors import ModelError

HUU_FD_STEP = 1e-5


def _vec(x):
    return np.atleast_1d(np.asarray(x))


def _zero_terminal(t, q):
    return 0.0


@dataclass(frozen=True)
class ControlSystem:
    """Control system with running and terminal cost.

    All evaluators take 1-d arrays and must be re-entrant. ``dynamics_dq``
    returns the ``n x n`` Jacobian, ``dynamics_du`` the ``n x m`` one.
    ``affine_in_u`` declares ``Gamma`` affine in the control, in which case
    the control Hessian of ``H`` is exactly ``-running_cost_duu``.
    """

    n: int
    m: int
    dynamics: Callable
    dynamics_dq: Callable
    dynamics_du: Callable
    running_cost: Callable
    running_cost_dq: Callable
    running_cost_du: Callable
    running_cost_duu: Callable
    terminal_cost: Callable = _zero_terminal
    terminal_cost_dq: Optional[Callable] = None
    affine_in_u: bool = True
    name: str = ""

    def __post_init__(self):
        if int(self.n) < 1 or int(self.m) < 0:
            raise ModelError(f"invalid dimensions n={self.n}, m={self.m}")
        if self.terminal_cost_dq is None:
            n = self.n
            object.__setattr__(self, "terminal_cost_dq", lambda t, q: np.zeros(n))

    def check_dimensions(self, t=0.0, q=None, u=None):
        """Evaluate every evaluator once and verify output shapes."""
        q = np.zeros(self.n) if q is None else _vec(q)
        u = np.zeros(self.m) if u is None else _vec(u)
        n, m = self.n, self.m
        if q.shape != (n,) or u.shape != (m,):
            raise ModelError(f"expected q of shape ({n},) and u of shape ({m},)")
        expected = {
            "dynamics": ((n,), self.dynamics(t, q, u)),
            "dynamics_dq": ((n, n), self.dynamics_dq(t, q, u)),
            "dynamics_du": ((n, m), self.dynamics_du(t, q, u)),
            "running_cost": ((), self.running_cost(t, q, u)),
            "running_cost_dq": ((n,), self.running_cost_dq(t, q, u)),
            "running_cost_du": ((m,), self.running_cost_du(t, q, u)),
            "running_cost_duu": ((m, m), self.running_cost_duu(t, q, u)),
            "terminal_cost": ((), self.terminal_cost(t, q)),
            "terminal_cost_dq": ((n,), self.terminal_cost_dq(t, q)),
        }
        for name, (shape, value) in expected.items():
            value = np.asarray(value)
            if value.size != int(np.prod(shape)) or value.ndim > max(len(shape), 1):
                raise ModelError(f"{name} returned shape {value.shape}, expected {shape}")
        return True


@dataclass(frozen=True)
class PhasePoint:
    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q, p = _vec(self.q), _vec(self.p)
        if q.shape != p.shape or q.ndim != 1:
            raise ModelError(f"q and p must be vectors of equal length, got {q.shape} and {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def z(self):
        """Stacked phase vector ``(q, p)``."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_z(cls, t, z):
        z = _vec(z)
        n = z.size // 2
        return cls(t, z[:n], z[n:])


@dataclass
class Trajectory:
    """Time-stamped samples ``(t, q, p, u, H)`` stored as stacked arrays."""

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    u: np.ndarray
    H: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        k = self.t.size
        if k == 0:
            raise ModelError("a trajectory needs at least one sample")
        try:
            self.q = np.asarray(self.q, dtype=float).reshape(k, -1)
            self.p = np.asarray(self.p, dtype=float).reshape(k, -1)
            self.u = np.asarray(self.u, dtype=float).reshape(k, -1)
        except ValueError as exc:
            raise ModelError(f"inconsistent trajectory array shapes: {exc}") from None
        self.H = np.asarray(self.H, dtype=float).reshape(-1)
        if self.q.shape != self.p.shape or self.H.size != k:
            raise ModelError("inconsistent trajectory array shapes")
        if np.any(np.diff(self.t) <= 0):
            raise ModelError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def n(self):
        return self.q.shape[1]

    @property
    def m(self):
        return self.u.shape[1]

    def point(self, k) -> PhasePoint:
        return PhasePoint(self.t[k], self.q[k], self.p[k])

    def samples(self):
        """Iterate over ``(t, q, p, u, H)`` records."""
        for k in range(len(self)):
            yield self.t[k], self.q[k], self.p[k], self.u[k], self.H[k]


class PontryaginEvaluator:
    """``H(t,q,p,u) = p . Gamma - L`` and its partial derivatives."""

    def __init__(self, system: ControlSystem):
        self.system = system
        self.n, self.m = system.n, system.m

    def H(self, t, q, p, u):
        s = self.system
        return _vec(p) @ _vec(s.dynamics(t, q, u)) - s.running_cost(t, q, u)

    def H_q(self, t, q, p, u):
        s = self.system
        Gq = np.asarray(s.dynamics_dq(t, q, u)).reshape(self.n, self.n)
        return _vec(p) @ Gq - _vec(s.running_cost_dq(t, q, u))

    def H_p(self, t, q, p, u):
        return _vec(self.system.dynamics(t, q, u))

    def H_u(self, t, q, p, u):
        s = self.system
        Gu = np.asarray(s.dynamics_du(t, q, u)).reshape(self.n, self.m)
        return _vec(p) @ Gu - _vec(s.running_cost_du(t, q, u))

    def H_uu(self, t, q, p, u):
        s = self.system
        Luu = np.asarray(s.running_cost_duu(t, q, u)).reshape(self.m, self.m)
        if s.affine_in_u:
            return -Luu
        return fd_jacobian(lambda v: self.H_u(t, q, p, v), _vec(u), rel=HUU_FD_STEP)


def build_pontryagin(system: ControlSystem) -> PontryaginEvaluator:
    """Check ``system`` and return the evaluator bundle for its Pontryagin Hamiltonian."""
    system.check_dimensions()
    return PontryaginEvaluator(system)


def _as_matrix_fn(M, shape, name):
    if callable(M):
        return lambda t: np.asarray(M(t), dtype=float).reshape(shape)
    arr = np.asarray(M, dtype=float)
    if arr.size != shape[0] * shape[1]:
        raise ModelError(f"{name} has {arr.size} entries, expected shape {shape}")
    arr = arr.reshape(shape)
    return lambda t: arr


@dataclass(frozen=True)
class LQSpec:
    """Linear-quadratic problem data. Matrices may be constants or functions of time."""

    A: object
    B: object
    Q: object
    R: object
    Qf: object
    q0: np.ndarray
    t0: float = 0.0
    T: float = 1.0
    N: Optional[int] = None

    @property
    def n(self):
        return _vec(self.q0).size

    @property
    def m(self):
        R = self.R(self.t0) if callable(self.R) else self.R
        return int(np.sqrt(np.asarray(R).size))

    def matrices(self):
        """Return callables ``A(t), B(t), Q(t), R(t), Qf(t)`` with checked shapes."""
        n, m = self.n, self.m
        return (
            _as_matrix_fn(self.A, (n, n), "A"),
            _as_matrix_fn(self.B, (n, m), "B"),
            _as_matrix_fn(self.Q, (n, n), "Q"),
            _as_matrix_fn(self.R, (m, m), "R"),
            _as_matrix_fn(self.Qf, (n, n), "Qf"),
        )

    def validate(self):
        A, B, Q, R, Qf = self.matrices()
        if not self.T > self.t0:
            raise ModelError("final time T must exceed t0")
        for t in (self.t0, 0.5 * (self.t0 + self.T), self.T):
            Rt = R(t)
            if not np.allclose(Rt, Rt.T, atol=1e-12):
                raise ModelError("R must be symmetric")
            try:
                np.linalg.cholesky(Rt)
            except np.linalg.LinAlgError:
                raise ModelError("R must be positive definite") from None
            for name, M in (("Q", Q(t)), ("Qf", Qf(t))):
                if not np.allclose(M, M.T, atol=1e-12):
                    raise ModelError(f"{name} must be symmetric")
                if np.linalg.eigvalsh(M).min() < -1e-12:
                    raise ModelError(f"{name} must be positive semidefinite")
            A(t), B(t)
        return True


def lq_from_spec(spec: LQSpec) -> ControlSystem:
    """Instantiate ``Gamma = A q + B u``, ``L = (q'Qq + u'Ru)/2``, ``S = q'Qf q/2``."""
    spec.validate()
    A, B, Q, R, Qf = spec.matrices()
    n, m = spec.n, spec.m
    return ControlSystem(
        n=n,
        m=m,
        dynamics=lambda t, q, u: A(t) @ _vec(q) + B(t) @ _vec(u),
        dynamics_dq=lambda t, q, u: A(t),
        dynamics_du=lambda t, q, u: B(t),
        running_cost=lambda t, q, u: 0.5 * (_vec(q) @ Q(t) @ _vec(q) + _vec(u) @ R(t) @ _vec(u)),
        running_cost_dq=lambda t, q, u: Q(t) @ _vec(q),
        running_cost_du=lambda t, q, u: R(t) @ _vec(u),
        running_cost_duu=lambda t, q, u: R(t),
        terminal_cost=lambda t, q: 0.5 * _vec(q) @ Qf(t) @ _vec(q),
        terminal_cost_dq=lambda t, q: Qf(t) @ _vec(q),
        affine_in_u=True,
        name="lq",
    )


def lq_spec_from_dict(data: dict) -> LQSpec:
    """Parse the ``{"type": "lq", ...}`` problem schema."""
    if data.get("type") != "lq":
        raise ModelError(f"expected problem type 'lq', got {data.get('type')!r}")
    missing = [k for k in ("n", "m", "A", "B", "Q", "R", "Qf", "q0", "t0", "T") if k not in data]
    if missing:
        raise ModelError(f"LQ problem is missing keys: {', '.join(missing)}")
    n, m = int(data["n"]), int(data["m"])
    q0 = np.asarray(data["q0"], dtype=float).reshape(-1)
    if q0.size != n:
        raise ModelError(f"q0 has {q0.size} entries, expected n={n}")
    try:
        spec = _lq_spec(data, n, m, q0)
    except ValueError as exc:
        raise ModelError(f"malformed LQ problem: {exc}") from None
    spec.validate()
    return spec


def _lq_spec(data, n, m, q0):
    return LQSpec(
        A=np.asarray(data["A"], dtype=float).reshape(n, n),
        B=np.asarray(data["B"], dtype=float).reshape(n, m),
        Q=np.asarray(data["Q"], dtype=float).reshape(n, n),
        R=np.asarray(data["R"], dtype=float).reshape(m, m),
        Qf=np.asarray(data["Qf"], dtype=float).reshape(n, n),
        q0=q0,
        t0=float(data["t0"]),
        T=float(data["T"]),
        N=int(data["N"]) if data.get("N") is not None else None,
    )
