"""Registry of the dynamical systems: flows, constants of motion, symmetries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from .core import (ContractError, DomainError, ScalarField, TimeDependentVectorField,
                   VectorField, as_state, lie_derivative_scalar)


class SelfCheckError(RuntimeError):
    """A freshly wired system failed its own conservation check."""


@dataclass(frozen=True)
class ParameterSet:
    sign_branch: int = -1
    poly_q: tuple[float, ...] = (1.0,)
    inertia: tuple[float, float, float] = (1.0, 2.0, 3.0)

    def __post_init__(self):
        if self.sign_branch not in (1, -1):
            raise ContractError("sign_branch must be +1 or -1")
        if len(self.poly_q) == 0:
            raise ContractError("poly_q needs at least one coefficient")
        if len(self.inertia) != 3 or min(self.inertia) <= 0:
            raise ContractError("inertia must be three strictly positive moments")

    @property
    def Q(self) -> Polynomial:
        return Polynomial(self.poly_q)

    def require_ordered_inertia(self) -> None:
        I1, I2, I3 = self.inertia
        if not I1 < I2 < I3:
            raise ContractError("closed form requires I1 < I2 < I3")


# Sampling boxes: (low, high) per coordinate; rejection predicates keep samples
# at least 0.1 away from singular sets.
BOXES: dict[str, tuple[tuple[float, float], ...]] = {
    "otwo_cartesian": ((-1.0, 1.0),) * 4,
    "otwo_polar": ((0.2, 2.0), (0.2, 2.0), (0.0, 2 * np.pi)),
    "example1": ((0.2, 2.0), (0.2, 2.0), (0.0, 2 * np.pi)),
    "bridges": ((-2.0, 2.0),) * 3,
    "euler": ((-1.0, 1.0),) * 3,
}


@dataclass(frozen=True)
class SystemDef:
    name: str
    dim: int
    flow: VectorField
    invariants: Mapping[str, ScalarField]
    symmetries: Mapping[str, TimeDependentVectorField]
    params: ParameterSet
    coords: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    accept: Callable[[np.ndarray], bool] = field(default=lambda x: True)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        out = []
        while len(out) < n:
            x = lo + (hi - lo) * rng.random(self.dim)
            if self.accept(x):
                out.append(x)
        return np.array(out).reshape(n, self.dim)


def _otwo_cartesian(params: ParameterSet) -> SystemDef:
    def f(x):
        X1, Y1, X2, Y2 = x
        return np.array([X1 * X2 + Y1 * Y2, X1 * Y2 - Y1 * X2, -X1**2 + Y1**2, -2 * X1 * Y1])

    def df(x):
        X1, Y1, X2, Y2 = x
        return np.array([[X2, Y2, X1, Y1],
                         [Y2, -X2, -Y1, X1],
                         [-2 * X1, 2 * Y1, 0.0, 0.0],
                         [-2 * Y1, -2 * X1, 0.0, 0.0]])

    flow = VectorField(f, 4, df, "f")

    C1 = ScalarField(lambda x: float(x @ x), lambda x: 2 * x, lambda x: 2 * np.eye(4), "C1")

    def c2(x):
        X1, Y1, X2, Y2 = x
        return 2 * X1 * Y1 * X2 - Y2 * (X1**2 - Y1**2)

    def c2_grad(x):
        X1, Y1, X2, Y2 = x
        return np.array([2 * Y1 * X2 - 2 * X1 * Y2, 2 * X1 * X2 + 2 * Y1 * Y2,
                         2 * X1 * Y1, -(X1**2 - Y1**2)])

    def c2_hess(x):
        X1, Y1, X2, Y2 = x
        return np.array([[-2 * Y2, 2 * X2, 2 * Y1, -2 * X1],
                         [2 * X2, 2 * Y2, 2 * X1, 2 * Y1],
                         [2 * Y1, 2 * X1, 0.0, 0.0],
                         [-2 * X1, 2 * Y1, 0.0, 0.0]])

    C2 = ScalarField(c2, c2_grad, c2_hess, "C2")

    rot = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -2], [0, 0, 2, 0]], dtype=float)
    eta1 = TimeDependentVectorField(lambda x, t: rot @ x, 4, lambda x, t: rot,
                                    lambda x, t: np.zeros(4), "eta1")
    # scaling symmetry written with explicit time so it solves the symmetry equation
    eta2 = TimeDependentVectorField(lambda x, t: x + t * f(x), 4,
                                    lambda x, t: np.eye(4) + t * df(x),
                                    lambda x, t: f(x), "eta2")
    return SystemDef("otwo_cartesian", 4, flow, {"C1": C1, "C2": C2},
                     {"eta1": eta1, "eta2": eta2}, params, ("X1", "Y1", "X2", "Y2"),
                     BOXES["otwo_cartesian"],
                     lambda x: np.hypot(x[0], x[1]) > 0.1 and np.hypot(x[2], x[3]) > 0.1)


def _planar_reduced(name: str, params: ParameterSet, coords: tuple[str, ...]) -> SystemDef:
    """Three-variable reduction shared by the polar form and Example I.

    The single sign ``s`` drives the second and third equations and the first
    constant of motion together; conservation fixes that pairing.
    """
    s = params.sign_branch

    def f(x):
        a, b, phi = x
        if b == 0:
            raise DomainError(f"{name}: flow is singular at {coords[1]} = 0")
        c, sn = np.cos(phi), np.sin(phi)
        return np.array([a * b * c, s * a * a * c, -(2 * b + s * a * a / b) * sn])

    def df(x):
        a, b, phi = x
        c, sn = np.cos(phi), np.sin(phi)
        return np.array([
            [b * c, a * c, -a * b * sn],
            [2 * s * a * c, 0.0, -s * a * a * sn],
            [-(2 * s * a / b) * sn, -(2 - s * a * a / b**2) * sn, -(2 * b + s * a * a / b) * c],
        ])

    C1 = ScalarField(lambda x: 0.5 * (x[0] ** 2 - s * x[1] ** 2),
                     lambda x: np.array([x[0], -s * x[1], 0.0]),
                     lambda x: np.diag([1.0, -float(s), 0.0]), "C1")

    def c2_grad(x):
        a, b, phi = x
        return np.array([2 * a * b * np.sin(phi), a * a * np.sin(phi), a * a * b * np.cos(phi)])

    def c2_hess(x):
        a, b, phi = x
        sn, c = np.sin(phi), np.cos(phi)
        return np.array([[2 * b * sn, 2 * a * sn, 2 * a * b * c],
                         [2 * a * sn, 0.0, a * a * c],
                         [2 * a * b * c, a * a * c, -a * a * b * sn]])

    C2 = ScalarField(lambda x: x[0] ** 2 * x[1] * np.sin(x[2]), c2_grad, c2_hess, "C2")
    flow = VectorField(f, 3, df, "f")
    return SystemDef(name, 3, flow, {"C1": C1, "C2": C2}, {}, params, coords, BOXES[name])


def _bridges(params: ParameterSet) -> SystemDef:
    Q = params.Q
    dQ = Q.deriv()
    P = Q.integ(lbnd=0.0)

    def f(x):
        X1, X2, X3 = x
        q = Q(X1)
        return np.array([2 * X3, 2 * q * X3, X2 + q * X1])

    def df(x):
        X1, X2, X3 = x
        return np.array([[0.0, 0.0, 2.0],
                         [2 * dQ(X1) * X3, 0.0, 2 * Q(X1)],
                         [Q(X1) + dQ(X1) * X1, 1.0, 0.0]])

    C1 = ScalarField(lambda x: x[2] ** 2 - x[0] * x[1],
                     lambda x: np.array([-x[1], -x[0], 2 * x[2]]),
                     lambda x: np.array([[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 2.0]]),
                     "C1")

    def c2_hess(x):
        H = np.zeros((3, 3))
        H[0, 0] = -dQ(x[0])
        return H

    C2 = ScalarField(lambda x: x[1] - P(x[0]),
                     lambda x: np.array([-Q(x[0]), 1.0, 0.0]), c2_hess, "C2")
    return SystemDef("bridges", 3, VectorField(f, 3, df, "f"), {"C1": C1, "C2": C2}, {},
                     params, ("X1", "X2", "X3"), BOXES["bridges"])


def cross_matrix(v: np.ndarray) -> np.ndarray:
    """Matrix of w -> v x w."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _euler(params: ParameterSet) -> SystemDef:
    inv_I = 1.0 / np.asarray(params.inertia, dtype=float)

    def f(L):
        return np.cross(inv_I * L, L)

    def df(L):
        return cross_matrix(inv_I * L) - cross_matrix(L) @ np.diag(inv_I)

    C1 = ScalarField(lambda L: 0.5 * float(np.sum(inv_I * L * L)), lambda L: inv_I * L,
                     lambda L: np.diag(inv_I), "C1")
    C2 = ScalarField(lambda L: float(L @ L), lambda L: 2 * L, lambda L: 2 * np.eye(3), "C2")
    return SystemDef("euler", 3, VectorField(f, 3, df, "f"), {"C1": C1, "C2": C2}, {},
                     params, ("L1", "L2", "L3"), BOXES["euler"],
                     lambda L: np.linalg.norm(L) >= 0.05)


_ALIASES = {
    "otwocartesian": "otwo_cartesian", "otwo": "otwo_cartesian", "otwo_cartesian": "otwo_cartesian",
    "otwopolar": "otwo_polar", "otwo_polar": "otwo_polar", "polar": "otwo_polar",
    "examplei": "example1", "example1": "example1", "example_i": "example1",
    "bridgesexample": "bridges", "bridges": "bridges", "example2": "bridges", "exampleii": "bridges",
    "eulertop": "euler", "euler": "euler", "euler_top": "euler",
}

SYSTEM_NAMES = ("otwo_cartesian", "otwo_polar", "example1", "bridges", "euler")


def canonical_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key in _ALIASES:
        return _ALIASES[key]
    key = key.replace("_", "")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ContractError(f"unknown system {name!r}; known: {', '.join(SYSTEM_NAMES)}")


def make_system(name: str, params: ParameterSet | None = None, *, self_check: bool = True,
                seed: int = 0) -> SystemDef:
    params = ParameterSet() if params is None else params
    key = canonical_name(name)
    if key == "otwo_cartesian":
        sys = _otwo_cartesian(params)
    elif key == "otwo_polar":
        sys = _planar_reduced("otwo_polar", params, ("r1", "r2", "Theta"))
    elif key == "example1":
        sys = _planar_reduced("example1", params, ("X1", "X2", "Phi"))
    elif key == "bridges":
        sys = _bridges(params)
    else:
        sys = _euler(params)
    if self_check:
        worst = verify_invariants(sys, 20, np.random.default_rng(seed))
        bad = {k: v for k, v in worst.items() if not v < 1e-9}
        if bad:
            raise SelfCheckError(f"{key}: invariants not conserved: {bad}")
    return sys


def verify_invariants(sys: SystemDef, n_samples: int, rng=None,
                      invariants: Mapping[str, ScalarField] | None = None) -> dict[str, float]:
    """Largest |grad C . f| over sampled states, per invariant."""
    if n_samples < 1:
        raise ContractError("n_samples must be at least 1")
    rng = np.random.default_rng(0) if rng is None else rng
    invariants = sys.invariants if invariants is None else invariants
    pts = sys.sample(rng, n_samples)
    return {name: max(abs(lie_derivative_scalar(sys.flow, C, x)) for x in pts)
            for name, C in invariants.items()}


def _wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - theta, 2 * np.pi))


def cartesian_to_polar(x4) -> np.ndarray:
    """(X1, Y1, X2, Y2) -> (r1, r2, Theta) with Theta = 2*arg Z1 - arg Z2."""
    X1, Y1, X2, Y2 = as_state(x4)
    r1, r2 = np.hypot(X1, Y1), np.hypot(X2, Y2)
    if r1 == 0 or r2 == 0:
        raise DomainError("polar chart needs both radii positive")
    theta = 2 * np.arctan2(Y1, X1) - np.arctan2(Y2, X2)
    return np.array([r1, r2, _wrap_angle(theta)])


def cartesian_to_polar_jacobian(x4) -> np.ndarray:
    X1, Y1, X2, Y2 = as_state(x4)
    r1sq, r2sq = X1 * X1 + Y1 * Y1, X2 * X2 + Y2 * Y2
    r1, r2 = np.sqrt(r1sq), np.sqrt(r2sq)
    return np.array([
        [X1 / r1, Y1 / r1, 0.0, 0.0],
        [0.0, 0.0, X2 / r2, Y2 / r2],
        [-2 * Y1 / r1sq, 2 * X1 / r1sq, Y2 / r2sq, -X2 / r2sq],
    ])
