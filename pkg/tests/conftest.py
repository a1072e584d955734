import numpy as np
import pytest

from sympocp.model import LQSpec
from sympocp.solvers import DiscreteOCP


def _v(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def hand_docp():
    """N=1: f = q + u, Lbar = (q^2 + u^2)/2, Sbar = q^2/2, q0 = 1."""
    return DiscreteOCP(
        N=1, n=1, m=1,
        f=lambda k, q, u: _v(q) + _v(u),
        f_q=lambda k, q, u: np.eye(1),
        f_u=lambda k, q, u: np.eye(1),
        L=lambda k, q, u: 0.5 * (_v(q)[0] ** 2 + _v(u)[0] ** 2),
        L_q=lambda k, q, u: _v(q),
        L_u=lambda k, q, u: _v(u),
        L_uu=lambda k, q, u: np.eye(1),
        S=lambda N, q: 0.5 * _v(q)[0] ** 2,
        S_q=lambda N, q: _v(q),
        q0=[1.0],
    )


def scalar_lq(N=None):
    return LQSpec(A=[[0.3]], B=[[1.0]], Q=[[1.0]], R=[[0.5]], Qf=[[2.0]], q0=[1.0], t0=0.0, T=1.0, N=N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled in by the acceptance tests, printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
