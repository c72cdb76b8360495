"""Critical points on Casimir-constrained energy surfaces and their spectral type.

Critical points solve grad H - m grad Psi = 0. Slopes of Psi and H along the
family of critical points are compared with the sign of the squared nonzero
eigenvalue, which is how the slope criterion is audited across structures.
"""
from __future__ import annotations

import cmath
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ContractError, ScalarField, VectorField, as_state
from .poisson import PoissonStructure, RegisteredStructure
from .systems import SystemDef

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50
CLASS_THRESHOLD = 1e-10
SINGULAR_COND = 1e13


class CriticalPointError(RuntimeError):
    """Newton iteration for a critical point failed."""


@dataclass(frozen=True)
class CriticalPoint:
    state: np.ndarray
    multiplier: float
    structure_label: str = ""
    residual: float = 0.0


@dataclass(frozen=True)
class StabilityReport:
    critical_point: CriticalPoint
    linearization: np.ndarray
    eigenvalues: np.ndarray
    mu_squared: float
    casimir_slope: float
    hamiltonian_slope: float
    classification: str

    def row(self) -> dict:
        return {"multiplier": self.critical_point.multiplier, "mu_squared": self.mu_squared,
                "casimir_slope": self.casimir_slope,
                "hamiltonian_slope": self.hamiltonian_slope,
                "classification": self.classification}


@dataclass(frozen=True)
class Verdict:
    relation: str            # "elliptic iff slope<0", "elliptic iff slope>0" or "mixed"
    consistent: bool
    agrees_with_slope_criterion: bool


def _gradient_residual(H, psi, m, x):
    return H.gradient(x) - m * psi.gradient(x)


def solve_critical(H: ScalarField, psi: ScalarField, multiplier: float, x0,
                   structure_label: str = "", tol: float = NEWTON_TOL,
                   max_iter: int = NEWTON_MAX_ITER) -> CriticalPoint:
    """Newton iteration on grad H - multiplier * grad Psi = 0 at fixed multiplier."""
    x = as_state(x0).copy()
    m = float(multiplier)
    r = _gradient_residual(H, psi, m, x)
    for _ in range(max_iter):
        A = H.hessian(x) - m * psi.hessian(x)
        cond = np.linalg.cond(A)
        if not cond < SINGULAR_COND:
            raise CriticalPointError(f"singular Newton matrix (condition {cond:.3g}) at {x}")
        x = x - np.linalg.solve(A, r)
        r_new = _gradient_residual(H, psi, m, x)
        done = np.max(np.abs(r_new)) < tol
        # keep polishing while the residual still drops by a useful factor
        if done and not np.max(np.abs(r_new)) < 0.5 * np.max(np.abs(r)):
            r = r_new
            break
        r = r_new
    res = float(np.max(np.abs(r)))
    if not res < tol:
        raise CriticalPointError(f"no convergence in {max_iter} iterations (residual {res:.3g})")
    return CriticalPoint(x, m, structure_label, res)


def critical_point_at(H: ScalarField, psi: ScalarField, state, multiplier: float,
                      structure_label: str = "", tol: float = 1e-9) -> CriticalPoint:
    """Validate a known critical point (for non-isolated families such as steady rotations)."""
    x = as_state(state)
    res = float(np.max(np.abs(_gradient_residual(H, psi, multiplier, x))))
    if not res < tol:
        raise CriticalPointError(f"state is not critical for multiplier {multiplier} ({res:.3g})")
    return CriticalPoint(x, float(multiplier), structure_label, res)


def linearize_flow(f: VectorField, x, tol: float = 1e-8) -> np.ndarray:
    x = as_state(x)
    size = float(np.max(np.abs(f(x))))
    if size > tol:
        warnings.warn(f"linearizing at a non-equilibrium point (|f| = {size:.3g})",
                      RuntimeWarning, stacklevel=2)
    return f.jacobian(x)


def linearize_poisson(P: PoissonStructure, H: ScalarField, psi: ScalarField,
                      cp: CriticalPoint) -> np.ndarray:
    """J(P_c) (D^2 H - m D^2 Psi), i.e. mu [grad Psi]_eps times the constrained Hessian.

    Since J grad Psi vanishes identically, this equals the flow Jacobian at P_c.
    """
    x = cp.state
    return P.J(x) @ (H.hessian(x) - cp.multiplier * psi.hessian(x))


def eigenvalues_3x3(A) -> np.ndarray:
    """Roots of the characteristic cubic, sorted by |Im|, then Re, then Im."""
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ContractError("expected a 3x3 matrix")
    tr = np.trace(A)
    minors = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
              + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
    det = np.linalg.det(A)
    # lambda^3 + a lambda^2 + b lambda + c
    a, b, c = -tr, minors, -det
    shift = -a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    scale = max(1.0, abs(a), abs(b) ** 0.5, abs(c) ** (1 / 3))
    if abs(p) <= 1e-14 * scale**2:
        t = -math.copysign(abs(q) ** (1.0 / 3.0), q)
        if abs(q) <= 1e-14 * scale**3:
            roots = [complex(shift)] * 3
        else:
            w = cmath.exp(2j * math.pi / 3)
            roots = [t + shift, t * w + shift, t * w * w + shift]
    else:
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        if disc <= 0.0:
            r = 2.0 * math.sqrt(-p / 3.0)
            arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
            phi = math.acos(arg) / 3.0
            roots = [complex(r * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift) for k in range(3)]
        else:
            sq = math.sqrt(disc)
            u = math.copysign(abs(-q / 2.0 + sq) ** (1 / 3), -q / 2.0 + sq)
            v = math.copysign(abs(-q / 2.0 - sq) ** (1 / 3), -q / 2.0 - sq)
            re = -(u + v) / 2.0 + shift
            im = math.sqrt(3.0) / 2.0 * (u - v)
            roots = [complex(u + v + shift), complex(re, im), complex(re, -im)]
    roots.sort(key=lambda z: (abs(z.imag), z.real, z.imag))
    return np.array(roots, dtype=complex)


def mu_squared(eigs: Sequence[complex]) -> float:
    """Square of the nonzero pair +/-mu, taking the smallest-modulus root as the zero one."""
    e = sorted(eigs, key=abs)
    return float((-(e[1] * e[2])).real)


def classify(mu2: float, threshold: float = CLASS_THRESHOLD) -> str:
    if mu2 < -threshold:
        return "elliptic"
    if mu2 > threshold:
        return "hyperbolic"
    return "degenerate"


def casimir_slope(H: ScalarField, psi: ScalarField, multiplier: float, x0,
                  delta: float | None = None, convention: int = 1) -> tuple[float, float]:
    """Central differences of Psi(P_c) and H(P_c) along the critical curve.

    ``convention`` = -1 means critical points solve grad H + multiplier grad Psi = 0.
    """
    delta = 1e-4 * max(1.0, abs(multiplier)) if delta is None else delta
    if not delta > 0:
        raise ContractError("delta must be positive")
    centre = solve_critical(H, psi, convention * multiplier, x0)
    hi = solve_critical(H, psi, convention * (multiplier + delta), centre.state)
    lo = solve_critical(H, psi, convention * (multiplier - delta), centre.state)
    dpsi = (psi(hi.state) - psi(lo.state)) / (2 * delta)
    dh = (H(hi.state) - H(lo.state)) / (2 * delta)
    return float(dpsi), float(dh)


def stability_at(system: SystemDef, reg: RegisteredStructure, multiplier: float, x0,
                 delta: float | None = None) -> StabilityReport:
    """Full report at one user-facing multiplier value."""
    if reg.casimir is None:
        raise ContractError(f"{reg.label} has no Casimir; slope audit needs one")
    H, psi = reg.hamiltonian, reg.casimir
    cp = solve_critical(H, psi, reg.multiplier_convention * multiplier, x0, reg.label)
    flow_size = float(np.max(np.abs(system.flow(cp.state))))
    if not flow_size < 1e-8:
        raise CriticalPointError(f"critical point is not an equilibrium (|f| = {flow_size:.3g})")
    A = linearize_poisson(reg.structure, H, psi, cp)
    eigs = eigenvalues_3x3(A)
    mu2 = mu_squared(eigs)
    dpsi, dh = casimir_slope(H, psi, multiplier, cp.state, delta, reg.multiplier_convention)
    cp_user = CriticalPoint(cp.state, float(multiplier), reg.label, cp.residual)
    return StabilityReport(cp_user, A, eigs, mu2, dpsi, dh, classify(mu2))


def _relation(report: StabilityReport) -> str:
    if report.classification == "degenerate" or report.casimir_slope == 0:
        return "undetermined"
    same = (report.mu_squared < 0) == (report.casimir_slope < 0)
    return "elliptic iff slope<0" if same else "elliptic iff slope>0"


def verdict(reports: Sequence[StabilityReport]) -> Verdict:
    relations = {_relation(r) for r in reports}
    if len(relations) == 1:
        rel = relations.pop()
        return Verdict(rel, True, rel == "elliptic iff slope<0")
    return Verdict("mixed", False, False)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("POISSON_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def bridges_report(system: SystemDef, reg: RegisteredStructure,
                   multiplier_grid: Sequence[float], guess=None,
                   delta: float | None = None) -> tuple[list[StabilityReport], Verdict]:
    """Sweep the multiplier grid and record the sign relation between mu^2 and slope."""
    guess = default_guess(reg) if guess is None else guess
    grid = [float(m) for m in multiplier_grid]

    def one(m):
        return stability_at(system, reg, m, guess(m), delta)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(one, grid))
    return reports, verdict(reports)


def default_guess(reg: RegisteredStructure):
    """Rough starting points for Newton; deliberately off the exact critical point."""
    label = reg.label
    if label == "pois1":
        return lambda m: np.array([0.8 / m, 0.4 / m, 1.5])
    if label == "pois2":
        return lambda m: np.array([0.8 * m, 0.4 * m, 1.5])
    if label == "pois12":
        return lambda m: np.array([1.1 * m + 0.1, -1.1 * m, 0.1])
    return lambda m: np.array([0.5, 0.5, 0.5])
