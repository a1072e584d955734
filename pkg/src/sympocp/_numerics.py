"""Newton iteration and derivative approximations used by the solvers."""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .errors import ConvergenceError, RegularityError

FD_REL_STEP = 1e-6
COMPLEX_STEP = 1e-30


def inf_norm(r) -> float:
    r = np.asarray(r)
    if r.size == 0:
        return 0.0
    return float(np.max(np.abs(r)))


def fd_steps(x, rel=FD_REL_STEP):
    return rel * np.maximum(1.0, np.abs(np.real(x)))


def fd_jacobian(fun, x, rel=FD_REL_STEP):
    """Central finite-difference Jacobian of ``fun`` at ``x``, step ``rel*max(1,|x_i|)``."""
    x = np.asarray(x)
    steps = fd_steps(x, rel)
    cols = []
    for j in range(x.size):
        e = np.zeros(x.size, dtype=x.dtype)
        e[j] = steps[j]
        fp = np.atleast_1d(fun(x + e))
        fm = np.atleast_1d(fun(x - e))
        cols.append((fp - fm) / (2.0 * steps[j]))
    if not cols:
        return np.zeros((np.atleast_1d(fun(x)).size, 0))
    return np.stack(cols, axis=1)


def fd_gradient(fun, x, rel=FD_REL_STEP):
    """Central finite-difference gradient of a scalar function."""
    return fd_jacobian(lambda y: np.atleast_1d(fun(y)), x, rel)[0]


def complex_step_jacobian(fun, x, h=COMPLEX_STEP):
    """Jacobian by the complex-step method: ``Im f(x + i h e_j) / h``.

    Exact to rounding for functions that are real-analytic and written with
    complex-safe operations. Raises ``TypeError`` when ``fun`` drops the
    imaginary part (numpy's ComplexWarning is promoted to an error).
    """
    x = np.asarray(x, dtype=float)
    cols = []
    with warnings.catch_warnings():
        warnings.simplefilter("error", np.exceptions.ComplexWarning)
        for j in range(x.size):
            xc = x.astype(complex)
            xc[j] += 1j * h
            f = np.atleast_1d(fun(xc))
            if not np.iscomplexobj(f):
                raise TypeError("function output lost its imaginary part")
            cols.append(np.imag(f) / h)
    return np.stack(cols, axis=1)


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: list = field(default_factory=list)


def newton(
    residual,
    x0,
    *,
    tol=1e-12,
    max_iter=50,
    jac=None,
    fd_rel=FD_REL_STEP,
    max_halvings=30,
    lstsq=False,
    rcond=1e-10,
    polish=True,
    what="Newton solve",
):
    """Damped Newton iteration on ``residual(x) = 0``.

    The step is halved (up to ``max_halvings`` times) until the residual
    infinity norm decreases. A residual evaluation that raises
    :class:`~sympocp.errors.SympocpError` or returns non-finite values counts
    as an infinite residual. After convergence one extra "polish" step is
    taken and kept if it does not increase the residual, so that converged
    solutions are smooth functions of the problem data down to rounding.

    With ``lstsq=True`` the linear systems are solved in the minimum-norm
    least-squares sense (singular values below ``rcond`` times the largest
    are dropped), which tolerates rank-deficient Jacobians.
    """
    x = np.array(x0, dtype=np.result_type(np.asarray(x0), float)).reshape(-1)
    r = np.atleast_1d(residual(x))
    norm = inf_norm(r)
    history = [norm]
    if not np.isfinite(norm):
        raise ConvergenceError(f"{what}: residual not finite at the initial guess", norm, history)

    def solve(x, r):
        J = jac(x) if jac is not None else fd_jacobian(residual, x, fd_rel)
        J = np.atleast_2d(J)
        if lstsq:
            return np.linalg.lstsq(J, -r, rcond=rcond)[0]
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise RegularityError(f"{what}: singular Jacobian", J) from None
        return dx

    def trial(x_new):
        try:
            r_new = np.atleast_1d(residual(x_new))
        except (ArithmeticError, np.linalg.LinAlgError, ConvergenceError, RegularityError):
            return None, np.inf
        n_new = inf_norm(r_new)
        return r_new, (n_new if np.isfinite(n_new) else np.inf)

    it = 0
    while norm > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"{what}: no convergence in {max_iter} iterations (residual {norm:.3e})", norm, history
            )
        dx = solve(x, r)
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_new = x + lam * dx
            r_new, n_new = trial(x_new)
            if n_new < norm or n_new <= tol:
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"{what}: line search stalled (residual {norm:.3e})", norm, history)
        x, r, norm = x_new, r_new, n_new
        history.append(norm)
        it += 1

    if polish and norm > 0.0:
        try:
            x_new = x + solve(x, r)
        except RegularityError:
            x_new = None
        if x_new is not None:
            r_new, n_new = trial(x_new)
            if n_new <= norm:
                x, norm = x_new, n_new
                history.append(norm)
    return NewtonResult(x=x, residual=norm, iterations=it, history=history)
