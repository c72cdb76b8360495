"""Scalar and vector fields on state space with finite-difference fallbacks.

Every field carries an optional closed-form derivative. When one is missing,
central differences with one Richardson extrapolation level are used instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

EPS = np.finfo(float).eps
_GRAD_STEP = EPS ** (1.0 / 3.0)
_HESS_STEP = EPS ** (1.0 / 6.0)


class ContractError(ValueError):
    """Arguments violate an operation's contract (e.g. dimension mismatch)."""


class DomainError(ValueError):
    """A field was evaluated outside the region where it is finite."""


def as_state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError(f"state must be a 1-D vector, got shape {x.shape}")
    return x


def default_steps(x: np.ndarray, base: float = _GRAD_STEP) -> np.ndarray:
    return base * np.maximum(1.0, np.abs(x))


@dataclass(frozen=True)
class ScalarField:
    func: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, x) -> float:
        return float(self.func(as_state(x)))

    def gradient(self, x) -> np.ndarray:
        x = as_state(x)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self, x)

    def hessian(self, x) -> np.ndarray:
        x = as_state(x)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        return fd_hessian(self, x)

    def scaled(self, factor: float, name: str | None = None) -> "ScalarField":
        grad = None if self.grad is None else (lambda x: factor * np.asarray(self.grad(x)))
        hess = None if self.hess is None else (lambda x: factor * np.asarray(self.hess(x)))
        return ScalarField(lambda x: factor * self.func(x), grad, hess,
                           name or f"{factor:g}*{self.name}")


@dataclass(frozen=True)
class VectorField:
    func: Callable[[np.ndarray], np.ndarray]
    dim: int
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        x = as_state(x)
        _check_dim(self.dim, x)
        return np.asarray(self.func(x), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        x = as_state(x)
        _check_dim(self.dim, x)
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        return fd_jacobian(self.func, x)


@dataclass(frozen=True)
class TimeDependentVectorField:
    """Vector field eta(x, t); ``partial_t`` and ``jac`` fall back to differences."""

    func: Callable[[np.ndarray, float], np.ndarray]
    dim: int
    jac: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    dt: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = ""

    @classmethod
    def autonomous(cls, field: VectorField) -> "TimeDependentVectorField":
        return cls(lambda x, t: field.func(x), field.dim,
                   None if field.jac is None else (lambda x, t: field.jac(x)),
                   lambda x, t: np.zeros(field.dim), field.name)

    def __call__(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        _check_dim(self.dim, x)
        return np.asarray(self.func(x, t), dtype=float)

    def jacobian(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        if self.jac is not None:
            return np.asarray(self.jac(x, t), dtype=float)
        return fd_jacobian(lambda y: self.func(y, t), x)

    def partial_t(self, x, t: float = 0.0) -> np.ndarray:
        x = as_state(x)
        if self.dt is not None:
            return np.asarray(self.dt(x, t), dtype=float)
        h = _GRAD_STEP * max(1.0, abs(t))
        return _richardson(lambda s: np.asarray(self.func(x, t + s), dtype=float), h)

    def at(self, t: float) -> VectorField:
        """Freeze time, returning an ordinary vector field."""
        jac = None if self.jac is None else (lambda x: self.jac(x, t))
        return VectorField(lambda x: self.func(x, t), self.dim, jac, f"{self.name}@t={t:g}")


def _check_dim(dim: int, x: np.ndarray) -> None:
    if x.shape[0] != dim:
        raise ContractError(f"expected state of length {dim}, got {x.shape[0]}")


def _richardson(diff: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    # diff(s) evaluates the function at offset s; returns the extrapolated derivative
    def central(step):
        lo, hi = diff(-step), diff(step)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("non-finite value inside finite-difference stencil")
        return (hi - lo) / (2.0 * step)

    d1 = central(h)
    d2 = central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def _call(field, x):
    return field(x) if isinstance(field, (ScalarField, VectorField)) else field(x)


def fd_gradient(field, x, h=None) -> np.ndarray:
    """Central-difference gradient with one Richardson level (error O(h^4))."""
    x = as_state(x)
    steps = default_steps(x) if h is None else np.broadcast_to(np.asarray(h, float), x.shape)
    if np.any(steps <= 0):
        raise ContractError("finite-difference step must be positive")
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = 1.0
        out[i] = _richardson(lambda s: np.float64(_call(field, x + s * e)), steps[i])
    return out


def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], x, h=None) -> np.ndarray:
    """Jacobian d func_i / d x_j of an array-valued function (any output shape).

    The derivative axis is appended last.
    """
    x = as_state(x)
    steps = default_steps(x) if h is None else np.broadcast_to(np.asarray(h, float), x.shape)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = 1.0
        cols.append(_richardson(lambda s: np.asarray(func(x + s * e), dtype=float), steps[j]))
    return np.stack(cols, axis=-1)


def fd_hessian(field, x, h=None) -> np.ndarray:
    """Symmetrized Hessian.

    With a closed-form gradient available the gradient is differenced once;
    otherwise second differences of the values are extrapolated.
    """
    x = as_state(x)
    if isinstance(field, ScalarField) and field.grad is not None:
        H = fd_jacobian(field.grad, x, h)
        return 0.5 * (H + H.T)
    steps = default_steps(x, _HESS_STEP) if h is None else np.broadcast_to(np.asarray(h, float), x.shape)
    f = lambda y: np.float64(_call(field, y))

    def second(hv):
        n = x.size
        H = np.empty((n, n))
        f0 = f(x)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = hv[i]
            vals = (f(x + ei), f(x - ei))
            if not np.all(np.isfinite(vals + (f0,))):
                raise DomainError("non-finite value inside finite-difference stencil")
            H[i, i] = (vals[0] - 2.0 * f0 + vals[1]) / hv[i] ** 2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = hv[j]
                quad = (f(x + ei + ej), f(x + ei - ej), f(x - ei + ej), f(x - ei - ej))
                if not np.all(np.isfinite(quad)):
                    raise DomainError("non-finite value inside finite-difference stencil")
                H[i, j] = H[j, i] = (quad[0] - quad[1] - quad[2] + quad[3]) / (4.0 * hv[i] * hv[j])
        return H

    H = (4.0 * second(0.5 * steps) - second(steps)) / 3.0
    return 0.5 * (H + H.T)


def lie_derivative_scalar(f: VectorField, C: ScalarField, x) -> float:
    """Derivative of C along the flow f at x, i.e. grad C . f."""
    x = as_state(x)
    fx = f(x)
    g = C.gradient(x)
    if g.shape != fx.shape:
        raise ContractError(f"gradient length {g.size} does not match field length {fx.size}")
    return float(g @ fx)


def lie_bracket(a: VectorField, b: VectorField, x) -> np.ndarray:
    """[a, b] = (a . grad) b - (b . grad) a."""
    x = as_state(x)
    if a.dim != b.dim:
        raise ContractError(f"fields have dimensions {a.dim} and {b.dim}")
    return b.jacobian(x) @ a(x) - a.jacobian(x) @ b(x)


def symmetry_residual(eta: TimeDependentVectorField, f: VectorField, x, t: float = 0.0) -> float:
    """Max-norm of d(eta)/dt + [f, eta]; zero when eta maps solutions to solutions."""
    x = as_state(x)
    if eta.dim != f.dim:
        raise ContractError(f"fields have dimensions {eta.dim} and {f.dim}")
    r = eta.partial_t(x, t) + lie_bracket(f, eta.at(t), x)
    return float(np.max(np.abs(r)))


def compose(outer: Callable[[float, float], float],
            outer_grad: Callable[[float, float], np.ndarray],
            outer_hess: Callable[[float, float], np.ndarray],
            first: ScalarField, second: ScalarField, name: str = "") -> ScalarField:
    """D(C1(x), C2(x)) with chain-rule gradient and Hessian."""

    def grad(x):
        d = outer_grad(first(x), second(x))
        return d[0] * first.gradient(x) + d[1] * second.gradient(x)

    def hess(x):
        c = (first(x), second(x))
        d = outer_grad(*c)
        dd = outer_hess(*c)
        g = np.stack([first.gradient(x), second.gradient(x)])
        return (d[0] * first.hessian(x) + d[1] * second.hessian(x)
                + g.T @ np.asarray(dd) @ g)

    return ScalarField(lambda x: outer(first(x), second(x)), grad, hess, name)


def constant_scalar(value: float, dim: int, name: str = "") -> ScalarField:
    return ScalarField(lambda x: value, lambda x: np.zeros(dim),
                       lambda x: np.zeros((dim, dim)), name or f"{value:g}")
