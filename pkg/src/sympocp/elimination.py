"""Elimination of the control through the stationarity condition ``H_u = 0``.

The result is a Hamiltonian on ``(t, q, p)`` only. Everything downstream
(integrators, shooting, verification) talks to the small interface shared
by :class:`ReducedHamiltonian` and :class:`DirectHamiltonian`:
``value``, ``grad``, ``hessian``, ``third`` and ``control``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._numerics import complex_step_jacobian, fd_jacobian, newton
from .errors import ConvergenceError, ModelError, RegularityError
from .model import PontryaginEvaluator, _vec

HESSIAN_FD_STEP = 1e-5
THIRD_FD_STEP = 1e-5


@dataclass(frozen=True)
class EliminationConfig:
    tol: float = 1e-12
    max_iter: int = 50
    warm_start: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ModelError("elimination tol must be positive")
        if self.max_iter < 1:
            raise ModelError("elimination max_iter must be at least 1")


def solve_stationarity(base: PontryaginEvaluator, t, q, p, u_guess=None, config=None, full_output=False):
    """Newton iteration ``u <- u - H_uu^{-1} H_u`` until ``|H_u|_inf <= tol``.

    Returns the stationary control (or the full :class:`NewtonResult` when
    ``full_output``). The branch found is the one the guess leads to; it is
    a stationary point, not a certified minimiser.
    """
    config = config or EliminationConfig()
    q, p = _vec(q), _vec(p)
    dtype = np.result_type(q, p, float)
    if base.m == 0:
        u0 = np.zeros(0, dtype=dtype)
        return u0 if not full_output else None
    if u_guess is None or not config.warm_start:
        u_guess = np.zeros(base.m)
    u_guess = np.asarray(u_guess, dtype=dtype).reshape(base.m)

    def jac(u):
        Huu = np.atleast_2d(base.H_uu(t, q, p, u))
        if not np.all(np.isfinite(Huu)) or np.linalg.cond(np.real(Huu)) > 1.0 / config.tol:
            raise RegularityError(
                f"control Hessian H_uu is singular at t={np.real(t)}: {np.real(Huu).tolist()}", np.real(Huu)
            )
        return Huu

    res = newton(
        lambda u: base.H_u(t, q, p, u),
        u_guess,
        tol=config.tol,
        max_iter=config.max_iter,
        jac=jac,
        what="control elimination",
    )
    jac(res.x)
    return res if full_output else res.x


class Hamiltonian:
    """Common derivative machinery for Hamiltonians on ``(t, q, p)``.

    Subclasses provide ``value``, ``grad`` (returning ``(H_q, H_p)``) and
    ``control``. The Hessian in the stacked variable ``x = (q, p)`` comes
    from the complex-step derivative of ``grad`` when the evaluators accept
    complex input, and from central differences otherwise.
    """

    n: int
    m: int

    def value(self, t, q, p, u_guess=None):
        raise NotImplementedError

    def grad(self, t, q, p, u_guess=None):
        raise NotImplementedError

    def control(self, t, q, p, u_guess=None):
        return np.zeros(0)

    def _stacked_grad(self, t, x):
        n = self.n
        gq, gp = self.grad(t, x[:n], x[n:])
        return np.concatenate([_vec(gq), _vec(gp)])

    def hessian(self, t, q, p):
        x = np.concatenate([_vec(q), _vec(p)]).astype(float)
        if getattr(self, "_complex_ok", True):
            try:
                Hs = complex_step_jacobian(lambda y: self._stacked_grad(t, y), x)
            except (TypeError, ValueError, ArithmeticError, ConvergenceError, RegularityError):
                self._complex_ok = False
            else:
                return 0.5 * (Hs + Hs.T)
        Hs = fd_jacobian(lambda y: self._stacked_grad(t, y), x, rel=HESSIAN_FD_STEP)
        return 0.5 * (Hs + Hs.T)

    def third(self, t, q, p):
        """Third-derivative tensor ``T[a, b, c]`` by central differences of the Hessian."""
        x = np.concatenate([_vec(q), _vec(p)]).astype(float)
        d = x.size
        steps = THIRD_FD_STEP * np.maximum(1.0, np.abs(x))
        T = np.empty((d, d, d))
        n = self.n
        for c in range(d):
            e = np.zeros(d)
            e[c] = steps[c]
            Hp = self.hessian(t, (x + e)[:n], (x + e)[n:])
            Hm = self.hessian(t, (x - e)[:n], (x - e)[n:])
            T[:, :, c] = (Hp - Hm) / (2.0 * steps[c])
        # average over index permutations to damp difference noise
        return (T + T.transpose(0, 2, 1) + T.transpose(1, 0, 2)
                + T.transpose(1, 2, 0) + T.transpose(2, 0, 1) + T.transpose(2, 1, 0)) / 6.0


class ReducedHamiltonian(Hamiltonian):
    """``H~(t, q, p) = H(t, q, p, u*(t, q, p))`` with ``u*`` from :func:`solve_stationarity`.

    Immutable; warm starts are passed explicitly through ``u_guess`` so
    that no state is shared between trajectories.
    """

    def __init__(self, base: PontryaginEvaluator, config: Optional[EliminationConfig] = None):
        self.base = base
        self.config = config or EliminationConfig()
        self.n, self.m = base.n, base.m
        self.system = base.system

    def control(self, t, q, p, u_guess=None):
        return solve_stationarity(self.base, t, q, p, u_guess, self.config)

    def value(self, t, q, p, u_guess=None):
        u = self.control(t, q, p, u_guess)
        return self.base.H(t, q, p, u)

    def grad(self, t, q, p, u_guess=None):
        u = self.control(t, q, p, u_guess)
        return self.base.H_q(t, q, p, u), self.base.H_p(t, q, p, u)

    def terminal_cost_dq(self, t, q):
        return _vec(self.system.terminal_cost_dq(t, q))


def reduced_grad(rh: Hamiltonian, t, q, p, u_guess=None):
    """``(H~_q, H~_p)``; by the envelope identity these are the partials of ``H`` at ``u*``."""
    return rh.grad(t, q, p, u_guess)


class DirectHamiltonian(Hamiltonian):
    """A Hamiltonian given directly (no control), e.g. the harmonic oscillator."""

    def __init__(self, n: int, H: Callable, H_q: Callable, H_p: Callable, name: str = ""):
        self.n, self.m = int(n), 0
        self._H, self._Hq, self._Hp = H, H_q, H_p
        self.name = name

    def value(self, t, q, p, u_guess=None):
        return self._H(t, _vec(q), _vec(p))

    def grad(self, t, q, p, u_guess=None):
        q, p = _vec(q), _vec(p)
        return _vec(self._Hq(t, q, p)), _vec(self._Hp(t, q, p))


def eliminate(base: PontryaginEvaluator, config: Optional[EliminationConfig] = None) -> ReducedHamiltonian:
    return ReducedHamiltonian(base, config)
