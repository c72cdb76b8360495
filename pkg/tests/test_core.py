import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_forge.core import (ContractError, DomainError, ScalarField,
                                TimeDependentVectorField, VectorField, compose, fd_gradient,
                                fd_hessian, fd_jacobian, lie_bracket, lie_derivative_scalar,
                                symmetry_residual)
from poisson_forge.systems import SYSTEM_NAMES, make_system

coord = st.floats(-3, 3, allow_nan=False)


def test_gradient_of_quadratic():
    f = ScalarField(lambda x: x[0] ** 2 + x[1] ** 2)
    np.testing.assert_allclose(fd_gradient(f, [1.0, 2.0]), [2.0, 4.0], atol=1e-10)


def test_gradient_of_c2_matches_hand_derivative():
    C2 = ScalarField(lambda x: x[0] ** 2 * x[1] * math.sin(x[2]))
    np.testing.assert_allclose(fd_gradient(C2, [1.0, 1.0, math.pi / 2]), [2.0, 1.0, 0.0],
                               atol=1e-9)


def test_gradient_of_constant_is_zero():
    assert np.all(fd_gradient(ScalarField(lambda x: 4.2), [0.3, -1.0, 7.0]) == 0.0)


def test_gradient_rejects_nonpositive_step():
    with pytest.raises(ContractError):
        fd_gradient(ScalarField(lambda x: x[0]), [1.0], h=0.0)


def test_gradient_reports_domain_exit():
    f = ScalarField(lambda x: math.log(x[0]) if x[0] > 0 else float("nan"))
    with pytest.raises(DomainError):
        fd_gradient(f, [1e-9])


@pytest.mark.parametrize("x", [[0.3, -2.0], [5.0, 1.0]])
def test_hessian_of_product(x):
    np.testing.assert_allclose(fd_hessian(ScalarField(lambda y: y[0] * y[1]), x),
                               [[0.0, 1.0], [1.0, 0.0]], atol=1e-8)


def test_hessian_of_example1_first_invariant():
    C1 = ScalarField(lambda x: 0.5 * (x[0] ** 2 + x[1] ** 2))
    np.testing.assert_allclose(fd_hessian(C1, [0.7, 1.3, 2.0]), np.diag([1.0, 1.0, 0.0]),
                               atol=1e-8)


def test_hessian_of_linear_field_vanishes():
    H = fd_hessian(ScalarField(lambda x: 2 * x[0] - 3 * x[1] + x[2]), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(H, np.zeros((3, 3)), atol=1e-8)


def test_hessian_is_symmetric():
    f = ScalarField(lambda x: math.sin(x[0] * x[1]) + x[2] ** 3 * x[0])
    H = fd_hessian(f, [0.4, 1.1, -0.8])
    assert np.max(np.abs(H - H.T)) <= 1e-10


def test_lie_derivative_euler_energy_shell():
    eu = make_system("euler")
    assert abs(lie_derivative_scalar(eu.flow, eu.invariants["C2"], [0.2, 0.3, 0.9])) < 1e-14


def test_lie_derivative_example1_c1():
    ex = make_system("example1")
    assert abs(lie_derivative_scalar(ex.flow, ex.invariants["C1"], [1.0, 1.0, math.pi / 3])) < 1e-14


def test_lie_derivative_radial():
    f = VectorField(lambda x: x.copy(), 1)
    assert lie_derivative_scalar(f, ScalarField(lambda x: x[0] ** 2), [3.0]) == pytest.approx(18.0)


def test_lie_derivative_dimension_mismatch():
    f = VectorField(lambda x: x.copy(), 2)
    C = ScalarField(lambda x: x[0], lambda x: np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ContractError):
        lie_derivative_scalar(f, C, [1.0, 2.0])


def test_bracket_of_flow_and_scaling_symmetry():
    sysd = make_system("otwo_cartesian")
    x = np.array([1.0, 0.0, 0.0, 1.0])
    v = lie_bracket(sysd.flow, sysd.symmetries["eta2"].at(0.0), x)
    np.testing.assert_allclose(v, [0.0, -1.0, 1.0, 0.0], atol=1e-12)


def test_rotation_symmetry_commutes_with_flow():
    sysd = make_system("otwo_cartesian")
    eta1 = sysd.symmetries["eta1"].at(0.0)
    for x in sysd.sample(np.random.default_rng(3), 20):
        assert np.max(np.abs(lie_bracket(eta1, sysd.flow, x))) < 1e-12


def test_bracket_dimension_mismatch():
    with pytest.raises(ContractError):
        lie_bracket(VectorField(lambda x: x, 2), VectorField(lambda x: x, 3), [1.0, 2.0])


@pytest.mark.parametrize("t", [0.0, 0.7])
def test_symmetry_residuals(t):
    sysd = make_system("otwo_cartesian")
    f = sysd.flow
    for x in sysd.sample(np.random.default_rng(1), 10):
        assert symmetry_residual(sysd.symmetries["eta2"], f, x, t) < 1e-9
        assert symmetry_residual(sysd.symmetries["eta1"], f, x, t) < 1e-9
        assert symmetry_residual(TimeDependentVectorField.autonomous(f), f, x, t) < 1e-9


def test_symmetry_residual_without_closed_forms():
    # same scaling symmetry with every derivative left to finite differences
    sysd = make_system("otwo_cartesian")
    f = sysd.flow
    eta = TimeDependentVectorField(lambda x, t: x + t * f(x), 4)
    bare_f = VectorField(f.func, 4)
    assert symmetry_residual(eta, bare_f, np.array([0.4, -0.3, 1.2, 0.8]), 0.7) < 1e-8


def test_symmetry_residual_detects_non_symmetry():
    sysd = make_system("otwo_cartesian")
    bad = TimeDependentVectorField(lambda x, t: np.array([1.0, 0, 0, 0]), 4)
    assert symmetry_residual(bad, sysd.flow, np.array([1.0, 0.2, 0.3, 1.0])) > 0.1


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_registered_invariants_conserved(name):
    sysd = make_system(name)
    for x in sysd.sample(np.random.default_rng(11), 100):
        for C in sysd.invariants.values():
            assert abs(lie_derivative_scalar(sysd.flow, C, x)) < 1e-9


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_closed_form_gradients_match_differences(name):
    sysd = make_system(name)
    for x in sysd.sample(np.random.default_rng(5), 100):
        for C in sysd.invariants.values():
            assert np.max(np.abs(fd_gradient(C, x) - C.gradient(x))) < 1e-7


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_closed_form_jacobians_match_differences(name):
    sysd = make_system(name)
    for x in sysd.sample(np.random.default_rng(6), 20):
        assert np.max(np.abs(fd_jacobian(sysd.flow.func, x) - sysd.flow.jacobian(x))) < 1e-6


def _poly_fields():
    a = VectorField(lambda x: np.array([x[1] ** 2, x[0] * x[2], x[0] - x[1]]), 3)
    b = VectorField(lambda x: np.array([x[2], x[0] ** 2 * x[1], x[1] * x[2]]), 3)
    c = VectorField(lambda x: np.array([x[0] * x[1], 1.0 + x[2] ** 2, x[0] ** 3]), 3)
    return a, b, c


def _bracket_field(a, b):
    return VectorField(lambda x: lie_bracket(a, b, x), 3)


@settings(max_examples=30, deadline=None)
@given(st.tuples(coord, coord, coord))
def test_bracket_antisymmetry(x):
    a, b, _ = _poly_fields()
    assert np.array_equal(lie_bracket(a, b, x), -lie_bracket(b, a, x))


@settings(max_examples=10, deadline=None)
@given(st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)))
def test_bracket_jacobi_identity(x):
    a, b, c = _poly_fields()
    total = (lie_bracket(a, _bracket_field(b, c), x) + lie_bracket(b, _bracket_field(c, a), x)
             + lie_bracket(c, _bracket_field(a, b), x))
    assert np.max(np.abs(total)) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.tuples(coord, coord, coord))
def test_gradient_of_cubic_polynomial(x):
    f = ScalarField(lambda y: y[0] ** 3 - 2 * y[0] * y[1] * y[2] + y[2] ** 2)
    exact = [3 * x[0] ** 2 - 2 * x[1] * x[2], -2 * x[0] * x[2], -2 * x[0] * x[1] + 2 * x[2]]
    np.testing.assert_allclose(fd_gradient(f, x), exact, atol=1e-8)


def test_compose_chain_rule_against_differences():
    sysd = make_system("example1")
    C1, C2 = sysd.invariants["C1"], sysd.invariants["C2"]
    D = compose(lambda a, b: a * b, lambda a, b: np.array([b, a]),
                lambda a, b: np.array([[0.0, 1.0], [1.0, 0.0]]), C1, C2)
    x = np.array([0.9, 1.4, 0.6])
    np.testing.assert_allclose(D.gradient(x), fd_gradient(ScalarField(D.func), x), atol=1e-8)
    np.testing.assert_allclose(D.hessian(x), fd_hessian(ScalarField(D.func), x), atol=1e-6)
