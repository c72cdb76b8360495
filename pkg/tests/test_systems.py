import math

import numpy as np
import pytest

from poisson_forge.core import ContractError, DomainError, ScalarField
from poisson_forge.ode import IntegratorConfig, integrate
from poisson_forge.systems import (ParameterSet, SelfCheckError, SystemDef, cartesian_to_polar,
                                   cartesian_to_polar_jacobian, make_system, verify_invariants)


def test_euler_flow_value():
    eu = make_system("euler", ParameterSet(inertia=(1.0, 2.0, 3.0)))
    np.testing.assert_allclose(eu.flow([0.2, 0.3, 0.9]), [0.045, -0.12, 0.03], atol=1e-15)


def test_example1_lower_branch_flow():
    ex = make_system("example1", ParameterSet(sign_branch=-1))
    np.testing.assert_allclose(ex.flow([1.0, 1.0, math.pi / 2]), [0.0, 0.0, -1.0], atol=1e-15)


def test_cartesian_flow_value():
    np.testing.assert_allclose(make_system("otwo_cartesian").flow([1.0, 0.0, 0.0, 1.0]),
                               [0.0, 1.0, -1.0, 0.0])


def test_unknown_system():
    with pytest.raises(ContractError):
        make_system("lorenz")


@pytest.mark.parametrize("kw", [{"sign_branch": 0}, {"inertia": (1.0, -2.0, 3.0)},
                                {"poly_q": ()}])
def test_invalid_params(kw):
    with pytest.raises(ContractError):
        ParameterSet(**kw)


def test_aliases_resolve():
    assert make_system("EulerTop").name == "euler"
    assert make_system("ExampleI").name == "example1"
    assert make_system("BridgesExample").name == "bridges"


@pytest.mark.parametrize("s", [-1, 1])
def test_example1_branch_pairing(s):
    ex = make_system("example1", ParameterSet(sign_branch=s))
    assert max(verify_invariants(ex, 100).values()) < 1e-9


def test_verify_invariants_registered():
    assert max(verify_invariants(make_system("euler"), 50).values()) < 1e-12
    br = make_system("bridges", ParameterSet(poly_q=(1.0,)))
    assert max(verify_invariants(br, 50).values()) < 1e-12


def test_bridges_general_polynomial():
    br = make_system("bridges", ParameterSet(poly_q=(0.5, -1.0, 0.3)))
    assert max(verify_invariants(br, 50).values()) < 1e-9


def test_corrupted_invariant_negative_control():
    eu = make_system("euler")
    C1 = eu.invariants["C1"]
    bad = ScalarField(lambda x: C1(x) + x[0], name="C1+X1")
    assert verify_invariants(eu, 50, invariants={"bad": bad})["bad"] > 1e-3


def test_verify_invariants_needs_samples():
    with pytest.raises(ContractError):
        verify_invariants(make_system("euler"), 0)


def test_self_check_catches_wiring_bug(monkeypatch):
    import poisson_forge.systems as S
    good = S._euler

    def broken(params):
        sysd = good(params)
        C1 = sysd.invariants["C1"]
        inv = {"C1": ScalarField(lambda x: C1(x) + x[1], name="C1"), "C2": sysd.invariants["C2"]}
        return SystemDef(sysd.name, 3, sysd.flow, inv, {}, params, sysd.coords, sysd.box,
                         sysd.accept)

    monkeypatch.setattr(S, "_euler", broken)
    with pytest.raises(SelfCheckError):
        make_system("euler")


def test_deformations_along_symmetries():
    sysd = make_system("otwo_cartesian")
    C1, C2 = sysd.invariants["C1"], sysd.invariants["C2"]
    for t in (0.0, 0.5, 1.3):
        eta1, eta2 = sysd.symmetries["eta1"], sysd.symmetries["eta2"]
        for x in sysd.sample(np.random.default_rng(2), 20):
            assert C1.gradient(x) @ eta2(x, t) == pytest.approx(2 * C1(x), abs=1e-12)
            assert C2.gradient(x) @ eta2(x, t) == pytest.approx(3 * C2(x), abs=1e-12)
            assert abs(C1.gradient(x) @ eta1(x, t)) < 1e-12
            assert abs(C2.gradient(x) @ eta1(x, t)) < 1e-12


def test_polar_map_examples():
    np.testing.assert_allclose(cartesian_to_polar([1.0, 0.0, 0.0, 1.0]), [1.0, 1.0, -math.pi / 2])
    np.testing.assert_allclose(cartesian_to_polar([0.0, 1.0, 1.0, 0.0]), [1.0, 1.0, math.pi])


def test_polar_map_zero_radius():
    with pytest.raises(DomainError):
        cartesian_to_polar([0.0, 0.0, 1.0, 0.0])


def test_polar_jacobian_against_differences():
    from poisson_forge.core import fd_jacobian
    x = np.array([0.7, -0.4, 0.2, 1.1])
    np.testing.assert_allclose(cartesian_to_polar_jacobian(x),
                               fd_jacobian(lambda y: cartesian_to_polar(y), x), atol=1e-8)


def test_pushforward_matches_polar_flow():
    cart, polar = make_system("otwo_cartesian"), make_system("otwo_polar")
    for x in cart.sample(np.random.default_rng(4), 30):
        push = cartesian_to_polar_jacobian(x) @ cart.flow(x)
        assert np.max(np.abs(push - polar.flow(cartesian_to_polar(x)))) < 1e-8


def test_polar_trajectory_consistency():
    cart, polar = make_system("otwo_cartesian"), make_system("otwo_polar")
    traj = integrate(cart.flow, [1.0, 0.2, 0.3, 1.0], (0.0, 3.0),
                     cfg=IntegratorConfig(rtol=1e-10), t_eval=np.linspace(0, 3, 61))
    worst = 0.0
    for x in traj.states:
        push = cartesian_to_polar_jacobian(x) @ cart.flow(x)
        worst = max(worst, np.max(np.abs(push - polar.flow(cartesian_to_polar(x)))))
    assert worst < 1e-7


def test_samples_respect_boxes():
    ex = make_system("example1")
    pts = ex.sample(np.random.default_rng(0), 200)
    assert pts[:, :2].min() >= 0.2 and pts[:, :2].max() <= 2.0
    eu = make_system("euler")
    assert np.linalg.norm(eu.sample(np.random.default_rng(0), 200), axis=1).min() >= 0.05


def test_example1_singular_set_is_guarded():
    with pytest.raises(DomainError):
        make_system("example1").flow([1.0, 0.0, 0.3])


def test_inertia_ordering_only_enforced_on_request():
    p = ParameterSet(inertia=(3.0, 2.0, 1.0))
    make_system("euler", p)
    with pytest.raises(ContractError):
        p.require_ordered_inertia()
