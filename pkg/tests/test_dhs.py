import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from sympocp.dhs import (LinearDHS, NonlinearDHS, dhs_regularity, linear_step_matrix, quadratic_dhs, step_linear,
                         step_nonlinear)
from sympocp.errors import ModelError, RegularityError, StepError
from sympocp.model import PhasePoint
from sympocp.verify import canonical_form, flow_jacobian, symplectic_defect
from sympocp._numerics import fd_gradient


def random_linear(rng, d, b_scale=0.5):
    A = rng.normal(size=(d, d))
    C = rng.normal(size=(d, d))
    B = rng.normal(size=(d, d))
    B *= b_scale * 0.99 / max(np.linalg.norm(B, 2), 1e-12)
    return LinearDHS(d, 0.5 * (A + A.T), B, 0.5 * (C + C.T))


def zero_H(d):
    return NonlinearDHS(d, lambda t, y, z: 0.0, lambda t, y, z: np.zeros(d), lambda t, y, z: np.zeros(d))


def test_linear_hand_example():
    y1, z1 = step_linear(LinearDHS(1, [[1.0]], [[0.0]], [[1.0]]), 0, [1.0], [0.0])
    assert_allclose([y1[0], z1[0]], [1.0, -1.0])


def test_linear_zero_system_is_identity():
    sys = LinearDHS(3, np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))
    y, z = step_linear(sys, 0, [1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert_allclose(y, [1, 2, 3]) and assert_allclose(z, [4, 5, 6])


def test_linear_step_matrix_hand_example():
    M = linear_step_matrix(LinearDHS(1, [[1.0]], [[0.0]], [[1.0]]), 0)
    assert_allclose(M, [[1.0, 1.0], [-1.0, 0.0]])
    assert np.linalg.det(M) == pytest.approx(1.0)


def test_linear_step_matrix_matches_step(rng):
    sys = random_linear(rng, 3)
    M = linear_step_matrix(sys, 0)
    y, z = rng.normal(size=3), rng.normal(size=3)
    assert_allclose(np.concatenate(step_linear(sys, 0, y, z)), M @ np.concatenate([y, z]), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(1, 5))
def test_linear_step_matrix_is_symplectic(seed, d):
    sys = random_linear(np.random.default_rng(seed), d)
    assert symplectic_defect(linear_step_matrix(sys, 0)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(1, 4))
def test_quadratic_nonlinear_step_matches_linear(seed, d):
    rng = np.random.default_rng(seed)
    sys = random_linear(rng, d)
    y, z = rng.normal(size=d), rng.normal(size=d)
    a = step_linear(sys, 0, y, z)
    b = step_nonlinear(quadratic_dhs(sys), 0, y, z)
    assert_allclose(np.concatenate(b), np.concatenate(a), atol=1e-10)


def test_time_dependent_coefficients():
    sys = LinearDHS(1, lambda t: np.array([[float(t)]]), lambda t: np.zeros((1, 1)), lambda t: np.eye(1))
    y1, z1 = step_linear(sys, 3, [1.0], [1.0])
    assert_allclose([y1[0], z1[0]], [2.0, 1.0 - 3.0 * 2.0])


def test_singular_I_minus_B():
    with pytest.raises(RegularityError):
        step_linear(LinearDHS(1, [[1.0]], [[1.0]], [[1.0]]), 0, [1.0], [0.0])
    with pytest.raises(RegularityError):
        LinearDHS(1, [[1.0]], [[1.0]], [[1.0]]).check()


def test_asymmetric_A_rejected():
    with pytest.raises(ModelError):
        LinearDHS(2, [[1.0, 2.0], [0.0, 1.0]], np.zeros((2, 2)), np.eye(2)).check()


def test_from_dict():
    sys = LinearDHS.from_dict({"type": "dhs-linear", "d": 1, "A": [[1]], "B": [[0]], "C": [[1]]})
    assert_allclose(np.concatenate(step_linear(sys, 0, [1.0], [0.0])), [1.0, -1.0])
    with pytest.raises(ModelError):
        LinearDHS.from_dict({"type": "dhs-linear", "d": 2, "A": [[1]], "B": [[0]], "C": [[1]]})
    with pytest.raises(ModelError):
        LinearDHS.from_dict({"type": "lq"})


def test_zero_hamiltonian_identity():
    y, z = step_nonlinear(zero_H(2), 0, [1.0, 2.0], [3.0, 4.0])
    assert_allclose(y, [1, 2]) and assert_allclose(z, [3, 4])
    M, det = dhs_regularity(zero_H(2), 0, [1.0, 2.0], [3.0, 4.0])
    assert_allclose(M, np.eye(2)) and det == 1.0


def test_half_square_hamiltonian():
    sys = NonlinearDHS(1, lambda t, y, z: 0.5 * (y[0] ** 2 + z[0] ** 2), lambda t, y, z: y, lambda t, y, z: z)
    y, z = 0.3, -1.1
    y1, z1 = step_nonlinear(sys, 0, [y], [z])
    assert_allclose([y1[0], z1[0]], [y + z, z - (y + z)], atol=1e-12)
    assert dhs_regularity(sys, 0, y1, [z])[1] == pytest.approx(1.0, abs=1e-9)


def test_bilinear_hamiltonian_is_degenerate():
    exact = NonlinearDHS(1, lambda t, y, z: y[0] * z[0], lambda t, y, z: z, lambda t, y, z: y,
                         H_yz=lambda t, y, z: np.eye(1))
    M, det = dhs_regularity(exact, 0, [0.7], [0.2])
    assert_allclose(M, [[0.0]]) and det == 0.0
    with pytest.raises(StepError) as info:
        step_nonlinear(exact, 0, [0.7], [0.2])
    assert isinstance(info.value, RegularityError)
    assert_allclose(info.value.matrix, [[0.0]])
    fd = NonlinearDHS(1, exact.H, exact.H_y, exact.H_z)
    assert abs(dhs_regularity(fd, 0, [0.7], [0.2])[1]) < 1e-10


def pendulum_like():
    # H = cos(y) + z^2/2 + 0.3 y z
    return NonlinearDHS(
        1,
        lambda t, y, z: np.cos(y[0]) + 0.5 * z[0] ** 2 + 0.3 * y[0] * z[0],
        lambda t, y, z: np.array([-np.sin(y[0]) + 0.3 * z[0]]),
        lambda t, y, z: np.array([z[0] + 0.3 * y[0]]),
    )


def test_gradient_consistency(rng):
    sys = pendulum_like()
    for _ in range(20):
        y, z = rng.normal(size=1), rng.normal(size=1)
        assert_allclose(sys.H_y(0, y, z), fd_gradient(lambda v: sys.H(0, v, z), y), atol=1e-5)
        assert_allclose(sys.H_z(0, y, z), fd_gradient(lambda v: sys.H(0, y, v), z), atol=1e-5)


def test_nonlinear_step_is_symplectic(rng):
    sys = pendulum_like()
    step = lambda x: PhasePoint(x.t + 1, *step_nonlinear(sys, 0, x.q, x.p))
    for _ in range(20):
        x = PhasePoint(0, rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1))
        y1, z1 = step(x).q, step(x).p
        assert_allclose(x.q, y1 - sys.H_z(0, y1, x.p), atol=1e-12)
        assert symplectic_defect(flow_jacobian(step, x)) <= 1e-5


def test_nonlinear_random_quadratic_fd_symplectic(rng):
    for _ in range(10):
        sys = random_linear(rng, 2)
        step = lambda x: PhasePoint(x.t + 1, *step_nonlinear(quadratic_dhs(sys), 0, x.q, x.p))
        x = PhasePoint(0, rng.normal(size=2), rng.normal(size=2))
        assert symplectic_defect(flow_jacobian(step, x)) <= 1e-5
        assert_allclose(flow_jacobian(step, x), linear_step_matrix(sys, 0), atol=1e-6)


def test_nonlinear_divergence_is_step_error():
    # H = z exp(y): y = y1 - exp(y1) has no solution for y > -1
    sys = NonlinearDHS(1, lambda t, y, z: z[0] * np.exp(y[0]), lambda t, y, z: z * np.exp(y),
                       lambda t, y, z: np.exp(y))
    with np.errstate(over="ignore"), pytest.raises(StepError):
        step_nonlinear(sys, 0, [2.0], [0.0])


def test_canonical_form_shape():
    J = canonical_form(4)
    assert_allclose(J.T, -J)
    assert_allclose(J @ J, -np.eye(4))
