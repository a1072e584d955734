"""Discrete Hamiltonian systems.

Nonlinear form::

    y(t+1) - y(t) =  H_z(t, y(t+1), z(t))
    z(t+1) - z(t) = -H_y(t, y(t+1), z(t))

These are exactly ``y(t) = dS/dz`` and ``z(t+1) = dS/dy`` for the mixed
generating function ``S(y(t+1), z(t)) = z(t).y(t+1) - H(t, y(t+1), z(t))``,
so the map ``(y, z) -> (y(t+1), z(t+1))`` is symplectic wherever
``det(I - H_yz) != 0``.

The linear case ``dy = B y(t+1) + C z``, ``dz = -A y(t+1) - B' z`` comes from
``H = y'Ay/2 + z'By + z'Cz/2``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._numerics import fd_jacobian, newton
from .errors import ConvergenceError, ModelError, RegularityError, SingularStepError, StepError

DEGENERACY_TOL = 1e-10


def _const(M):
    M = np.asarray(M, dtype=float)
    return lambda t: M


@dataclass(frozen=True)
class LinearDHS:
    """``A``, ``B``, ``C`` are functions of integer time (or constant matrices)."""

    d: int
    A: Callable
    B: Callable
    C: Callable

    def __post_init__(self):
        for name in ("A", "B", "C"):
            M = getattr(self, name)
            if not callable(M):
                M = np.asarray(M, dtype=float)
                if M.shape != (self.d, self.d):
                    raise ModelError(f"{name} must be {self.d}x{self.d}, got {M.shape}")
                object.__setattr__(self, name, _const(M))

    def check(self, t=0):
        A, B, C = self.A(t), self.B(t), self.C(t)
        if not np.allclose(A, A.T, atol=1e-12) or not np.allclose(C, C.T, atol=1e-12):
            raise ModelError("A and C must be symmetric")
        M = np.eye(self.d) - B
        if abs(np.linalg.det(M)) < DEGENERACY_TOL:
            raise RegularityError(f"I - B(t) is singular at t={t}", M)
        return True

    @classmethod
    def from_dict(cls, data: dict) -> "LinearDHS":
        """Parse ``{"type": "dhs-linear", "d", "A", "B", "C"}``."""
        if data.get("type") != "dhs-linear":
            raise ModelError(f"expected problem type 'dhs-linear', got {data.get('type')!r}")
        d = int(data["d"])
        try:
            sys = cls(d, *(np.asarray(data[k], dtype=float).reshape(d, d) for k in "ABC"))
        except (KeyError, ValueError) as exc:
            raise ModelError(f"malformed dhs-linear problem: {exc}") from None
        sys.check()
        return sys


def step_linear(sys: LinearDHS, t, y, z):
    """``y1 = (I - B)^-1 (y + C z)``, ``z1 = z - A y1 - B' z``."""
    A, B, C = sys.A(t), sys.B(t), sys.C(t)
    M = np.eye(sys.d) - B
    if abs(np.linalg.det(M)) < DEGENERACY_TOL:
        raise RegularityError(f"I - B(t) is singular at t={t}", M)
    y, z = np.atleast_1d(y).astype(float), np.atleast_1d(z).astype(float)
    y1 = np.linalg.solve(M, y + C @ z)
    return y1, z - A @ y1 - B.T @ z


def linear_step_matrix(sys: LinearDHS, t):
    """Exact matrix of :func:`step_linear` acting on ``(y, z)``."""
    A, B, C = sys.A(t), sys.B(t), sys.C(t)
    I = np.eye(sys.d)
    K = np.linalg.inv(I - B)
    return np.block([[K, K @ C], [-A @ K, I - B.T - A @ K @ C]])


@dataclass(frozen=True)
class NonlinearDHS:
    """``H(t, y, z)`` with gradients; ``H_yz`` (``d x d``, rows ``y``) is optional."""

    d: int
    H: Callable
    H_y: Callable
    H_z: Callable
    H_yz: Optional[Callable] = None

    def mixed(self, t, y, z):
        if self.H_yz is not None:
            return np.asarray(self.H_yz(t, y, z), dtype=float).reshape(self.d, self.d)
        # d/dy of H_z gives H_zy; transpose to rows-in-y
        return fd_jacobian(lambda yy: np.atleast_1d(self.H_z(t, yy, z)), np.asarray(y, dtype=float)).T


def quadratic_dhs(sys: LinearDHS) -> NonlinearDHS:
    """The nonlinear form of a linear system, ``H = y'Ay/2 + z'By + z'Cz/2``."""
    return NonlinearDHS(
        d=sys.d,
        H=lambda t, y, z: 0.5 * y @ sys.A(t) @ y + z @ sys.B(t) @ y + 0.5 * z @ sys.C(t) @ z,
        H_y=lambda t, y, z: sys.A(t) @ y + sys.B(t).T @ z,
        H_z=lambda t, y, z: sys.B(t) @ y + sys.C(t) @ z,
        H_yz=lambda t, y, z: sys.B(t).T,
    )


def dhs_regularity(sys: NonlinearDHS, t, y_next, z):
    """Mixed block ``d2S/dy dz = I - H_yz`` and its determinant."""
    M = np.eye(sys.d) - sys.mixed(t, np.atleast_1d(y_next).astype(float), np.atleast_1d(z).astype(float))
    return M, float(np.linalg.det(M))


def step_nonlinear(sys: NonlinearDHS, t, y, z, y_guess=None, tol=1e-12, max_iter=50):
    """Solve ``y = y1 - H_z(t, y1, z)`` for ``y1``; then ``z1 = z - H_y(t, y1, z)``."""
    y, z = np.atleast_1d(y).astype(float), np.atleast_1d(z).astype(float)
    y0 = y.copy() if y_guess is None else np.atleast_1d(y_guess).astype(float)

    def residual(y1):
        return y1 - np.atleast_1d(sys.H_z(t, y1, z)) - y

    def jac(y1):
        M, det = dhs_regularity(sys, t, y1, z)
        if abs(det) < DEGENERACY_TOL:
            raise SingularStepError(f"degenerate generating function at t={t}: det = {det:.3e}", M)
        return M.T

    try:
        y1 = newton(residual, y0, tol=tol, max_iter=max_iter, jac=jac, what="discrete Hamiltonian step").x
    except SingularStepError:
        raise
    except RegularityError as exc:
        raise SingularStepError(str(exc), exc.matrix) from exc
    except ConvergenceError as exc:
        raise StepError(str(exc), exc.residual, exc.history) from exc
    M, det = dhs_regularity(sys, t, y1, z)
    if abs(det) < DEGENERACY_TOL:
        raise SingularStepError(f"degenerate generating function at t={t}: det = {det:.3e}", M)
    return y1, z - np.atleast_1d(sys.H_y(t, y1, z))
