"""Poisson structures: construction, brackets and identity checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (ContractError, ScalarField, TimeDependentVectorField, VectorField,
                   as_state, constant_scalar, fd_jacobian)
from .systems import SystemDef

DEFORMATION_THRESHOLD = 1e-8
RANK_RTOL = 1e-10


class DegenerateDeformationError(ValueError):
    """The deformation of H along the symmetry vanishes at the requested point."""


def levi_civita_matrix(v: np.ndarray) -> np.ndarray:
    """M[a, b] = eps_abc v_c (exactly antisymmetric)."""
    return np.array([[0.0, v[2], -v[1]], [-v[2], 0.0, v[0]], [v[1], -v[0], 0.0]])


@dataclass(frozen=True)
class PoissonStructure:
    dim: int
    matrix: Callable[[np.ndarray, float], np.ndarray]
    label: str = ""
    hamiltonian: Optional[ScalarField] = None
    casimirs: tuple[ScalarField, ...] = ()
    # derivative(x, t)[d, a, b] = d J^{ab} / d x^d
    derivative: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def J(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        if x.size != self.dim:
            raise ContractError(f"{self.label}: expected state of length {self.dim}")
        M = np.asarray(self.matrix(x, t), dtype=float)
        if not np.array_equal(M, -M.T):
            raise ContractError(f"{self.label}: structure matrix is not antisymmetric")
        return M

    def dJ(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        if self.derivative is not None:
            return np.asarray(self.derivative(x, t), dtype=float)
        # fd_jacobian appends the derivative axis last
        return np.moveaxis(fd_jacobian(lambda y: self.matrix(y, t), x), -1, 0)

    def with_hamiltonian(self, H: ScalarField) -> "PoissonStructure":
        return PoissonStructure(self.dim, self.matrix, self.label, H, self.casimirs,
                                self.derivative)


@dataclass(frozen=True)
class DeformationScalar:
    """K(x, t) = grad H . eta, the change of H along a symmetry."""

    H: ScalarField
    eta: TimeDependentVectorField

    def value(self, x, t: float = 0.0) -> float:
        x = as_state(x)
        return float(self.H.gradient(x) @ self.eta(x, t))

    def gradient(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        return self.H.hessian(x) @ self.eta(x, t) + self.eta.jacobian(x, t).T @ self.H.gradient(x)


def from_flow_symmetry(f: VectorField, eta, H: ScalarField, label: str = "",
                       threshold: float = DEFORMATION_THRESHOLD) -> PoissonStructure:
    """Rank-2 structure (f eta^T - eta f^T) / K with K = grad H . eta.

    ``J grad H = f`` holds identically whenever H is conserved by f.
    """
    if isinstance(eta, VectorField):
        eta = TimeDependentVectorField.autonomous(eta)
    if eta.dim != f.dim:
        raise ContractError("flow and symmetry dimensions differ")
    K = DeformationScalar(H, eta)

    def deformation(x, t):
        k = K.value(x, t)
        if not abs(k) > threshold:
            raise DegenerateDeformationError(f"|K| = {abs(k):.3g} below {threshold:g} at {x}")
        return k

    def matrix(x, t):
        fx, ex = f(x), eta(x, t)
        return (np.outer(fx, ex) - np.outer(ex, fx)) / deformation(x, t)

    def derivative(x, t):
        fx, ex, k = f(x), eta(x, t), deformation(x, t)
        Df, De = f.jacobian(x), eta.jacobian(x, t)
        dk = K.gradient(x, t)
        J = (np.outer(fx, ex) - np.outer(ex, fx)) / k
        # term[d, a, b] = d_d f^a eta^b + f^a d_d eta^b
        term = np.einsum("ad,b->dab", Df, ex) + np.einsum("a,bd->dab", fx, De)
        return (term - np.swapaxes(term, 1, 2)) / k - np.einsum("d,ab->dab", dk, J) / k

    return PoissonStructure(f.dim, matrix, label, H, (), derivative)


def from_casimir_3d(psi: ScalarField, mu=1.0, sign: int = 1, label: str = "",
                    hamiltonian: ScalarField | None = None) -> PoissonStructure:
    """J^{ab} = sign * mu(x) * eps_abc d psi / d x^c; psi is a Casimir by construction."""
    if sign not in (1, -1):
        raise ContractError("sign must be +1 or -1")
    if not isinstance(mu, ScalarField):
        mu = constant_scalar(float(mu), 3)

    def matrix(x, t):
        return levi_civita_matrix(sign * mu(x) * psi.gradient(x))

    def derivative(x, t):
        g, Hp = psi.gradient(x), psi.hessian(x)
        dv = sign * (np.outer(g, mu.gradient(x)) + mu(x) * Hp)  # dv[c, d]
        return np.stack([levi_civita_matrix(dv[:, d]) for d in range(3)])

    return PoissonStructure(3, matrix, label, hamiltonian, (psi,), derivative)


def bracket(P: PoissonStructure, F: ScalarField, G: ScalarField, x, t: float = 0.0) -> float:
    x = as_state(x)
    return float(F.gradient(x) @ P.J(x, t) @ G.gradient(x))


def jacobi_residual(P: PoissonStructure, x, t: float = 0.0) -> float:
    """max |J^{ad} d_d J^{bc} + J^{bd} d_d J^{ca} + J^{cd} d_d J^{ab}| over (a, b, c)."""
    J = P.J(x, t)
    T = np.einsum("ad,dbc->abc", J, P.dJ(x, t))
    R = T + np.einsum("bca->abc", T) + np.einsum("cab->abc", T)
    return float(np.max(np.abs(R)))


def hamilton_residual(P: PoissonStructure, H: ScalarField, f: VectorField, x,
                      t: float = 0.0) -> float:
    x = as_state(x)
    return float(np.max(np.abs(P.J(x, t) @ H.gradient(x) - f(x))))


def casimir_residual(P: PoissonStructure, psi: ScalarField, x, t: float = 0.0) -> float:
    x = as_state(x)
    return float(np.max(np.abs(P.J(x, t) @ psi.gradient(x))))


def antisymmetry_residual(P: PoissonStructure, x, t: float = 0.0) -> float:
    M = np.asarray(P.matrix(as_state(x), t), dtype=float)
    return float(np.max(np.abs(M + M.T)))


def rank_at(P: PoissonStructure, x, t: float = 0.0) -> int:
    s = np.linalg.svd(P.J(x, t), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def resolve_sign(psi: ScalarField, mu, H: ScalarField, f: VectorField,
                 points: np.ndarray, tol: float = 1e-9) -> int:
    """Pick the orientation of the Casimir-form matrix that reproduces the flow."""
    for sign in (1, -1):
        P = from_casimir_3d(psi, mu, sign)
        if all(hamilton_residual(P, H, f, x) < tol for x in points):
            return sign
    raise ContractError("neither orientation reproduces the flow with this Hamiltonian")


# --- registered structures -------------------------------------------------------

@dataclass(frozen=True)
class RegisteredStructure:
    """A structure paired with its Hamiltonian, Casimir and multiplier convention.

    ``multiplier_convention`` is +1 when critical points solve
    grad H - m grad Psi = 0 in the user's multiplier and -1 when they solve
    grad H + m grad Psi = 0.  ``reference_sign`` is the orientation of the
    published matrix; ``structure`` carries the orientation that zeroes the
    Hamilton residual.
    """

    label: str
    system: str
    structure: PoissonStructure
    hamiltonian: ScalarField
    casimir: Optional[ScalarField]
    sign: int = 1
    reference_sign: int = 1
    multiplier_convention: int = 1
    times: tuple[float, ...] = (0.0,)
    notes: str = ""
    scale: Optional[ScalarField] = field(default=None, repr=False)
    # sample filter keeping the deformation or scale away from zero
    accept: Callable[[np.ndarray], bool] = field(default=lambda x: True, repr=False)

    def sample(self, system: SystemDef, rng: np.random.Generator, n: int) -> np.ndarray:
        out = []
        while len(out) < n:
            x = system.sample(rng, 1)[0]
            if self.accept(x):
                out.append(x)
        return np.array(out)


STRUCTURES: dict[str, tuple[str, ...]] = {
    "otwo_cartesian": ("ansatz_c1", "ansatz_c2"),
    "example1": ("pois1", "pois2"),
    "bridges": ("pois12", "pois22"),
    "euler": ("euler1", "euler2"),
}


def _inverse_product_scale() -> ScalarField:
    # mu = 1 / (X1 X2)
    return ScalarField(lambda x: 1.0 / (x[0] * x[1]),
                       lambda x: np.array([-1.0 / (x[0] ** 2 * x[1]), -1.0 / (x[0] * x[1] ** 2), 0.0]),
                       None, "1/(X1*X2)")


def make_structure(system: SystemDef, label: str, *, seed: int = 0) -> RegisteredStructure:
    label = label.lower()
    allowed = STRUCTURES.get(system.name, ())
    if label not in allowed:
        raise ContractError(f"structure {label!r} is not registered for {system.name}; "
                            f"known: {', '.join(allowed) or 'none'}")
    C1, C2 = system.invariants["C1"], system.invariants["C2"]
    f = system.flow
    probe = system.sample(np.random.default_rng(seed), 5)

    if label in ("ansatz_c1", "ansatz_c2"):
        H = C1 if label == "ansatz_c1" else C2
        P = from_flow_symmetry(f, system.symmetries["eta2"], H, label)
        note = "K = 2 C1" if label == "ansatz_c1" else "K = 3 C2"
        return RegisteredStructure(label, system.name, P, H, None, times=(0.0, 0.5, 1.0),
                                   notes=note, accept=lambda x: abs(H(x)) > 0.05)

    if label in ("pois1", "pois2"):
        mu = _inverse_product_scale()
        H, psi, ref = (C1, C2, 1) if label == "pois1" else (C2, C1, -1)
    elif label in ("pois12", "pois22"):
        mu = constant_scalar(1.0, 3)
        H, psi, ref = (C1, C2, 1) if label == "pois12" else (C2, C1, 1)
    else:
        H, psi, ref = (C1, C2, 1) if label == "euler1" else (C2.scaled(0.5, "C2/2"), C1, 1)
        mu = constant_scalar(0.5 if label == "euler1" else 1.0, 3)

    sign = resolve_sign(psi, mu, H, f, probe)
    P = from_casimir_3d(psi, mu, sign, label, H)
    convention = -1 if label == "pois12" else 1
    return RegisteredStructure(label, system.name, P, H, psi, sign, ref, convention,
                               scale=mu)
