"""Hamilton-Jacobi reduction on Casimir level sets.

A Poisson map sends canonical coordinates (q, p) on a level set Psi = c to
the full state. The reduced Hamiltonian H(q, p; c) is separable in the sense
S = W(q) - E t, so on each branch q(t) follows from the quadrature
t - t0 = int dq / |dH/dp|.  Solutions are lifted back through the map.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.optimize import brentq

from .core import ContractError, ScalarField, VectorField, fd_gradient
from .elliptic import complete_K, inverse_amplitude, jacobi_sn_cn_dn
from .ode import IntegratorConfig, Trajectory, integrate
from .poisson import PoissonStructure, RegisteredStructure, bracket, make_structure
from .systems import ParameterSet, SelfCheckError, SystemDef, canonical_name, make_system


class OffShellError(ValueError):
    """(q, E, level) admits no real momentum on the requested branch."""


class BranchError(ValueError):
    """The quadrature interval crosses a turning point or forbidden region."""


class FlightTimeError(RuntimeError):
    """The time-of-flight quadrature did not converge (e.g. separatrix endpoint)."""


@dataclass(frozen=True)
class PoissonMap:
    name: str
    forward: Callable[[float, float, float], np.ndarray]
    inverse: Callable[[np.ndarray], tuple[float, float, float]]
    domain: Callable[[float, float, float], bool]
    casimir: ScalarField
    draw: Callable[[np.random.Generator], tuple[float, float, float]]

    def q_field(self) -> ScalarField:
        return ScalarField(lambda x: self.inverse(x)[0], name=f"q[{self.name}]")

    def p_field(self) -> ScalarField:
        return ScalarField(lambda x: self.inverse(x)[1], name=f"p[{self.name}]")


@dataclass(frozen=True)
class ReducedSystem:
    name: str
    hamiltonian: Callable[[float, float, float], float]
    dH_dq: Callable[[float, float, float], float]
    dH_dp: Callable[[float, float, float], float]
    # on-shell momentum for a branch sign; raises OffShellError
    momentum: Callable[[float, float, float, int], float]
    # on-shell (dq/dt)^2 as a function of q; negative where motion is forbidden
    speed2: Callable[[float, float, float], float]
    # positive where a momentum value p is reachable on the energy surface
    p_allowed: Optional[Callable[[float, float, float], float]] = None

    def canonical_field(self, level: float) -> VectorField:
        return VectorField(lambda y: np.array([self.dH_dp(y[0], y[1], level),
                                               -self.dH_dq(y[0], y[1], level)]), 2,
                           name=f"{self.name} canonical")


@dataclass(frozen=True)
class HJChart:
    system: SystemDef
    structure: RegisteredStructure
    pmap: PoissonMap
    reduced: ReducedSystem


@dataclass
class HJSolution:
    energy_constant: float
    level: float
    branch: int
    times: np.ndarray
    qp: np.ndarray
    states: np.ndarray
    chart: HJChart = field(repr=False)
    trajectory: Trajectory = field(repr=False)
    energy_drift: float = 0.0
    level_drift: float = 0.0
    flight_check: Optional[float] = None

    @property
    def truncated(self) -> bool:
        return self.trajectory.truncated

    def q_of_t(self, t: float) -> float:
        return float(self.trajectory.dense(t)[0])

    def lifted(self, t: float) -> np.ndarray:
        q, p = self.trajectory.dense(t)
        return self.chart.pmap.forward(q, p, self.level)

    def q_extrema_times(self) -> list[float]:
        """Times where dq/dt changes sign, refined on the dense interpolant."""
        rs, c = self.chart.reduced, self.level
        qdot = lambda t: rs.dH_dp(*self.trajectory.dense(t), c)
        vals = np.array([rs.dH_dp(q, p, c) for q, p in self.qp])
        out = []
        for i in range(len(vals) - 1):
            if vals[i] == 0.0:
                out.append(float(self.times[i]))
            elif vals[i] * vals[i + 1] < 0:
                out.append(brentq(qdot, self.times[i], self.times[i + 1], xtol=1e-14, rtol=1e-15))
        return out


# --- charts ----------------------------------------------------------------------

def _example1_chart(system: SystemDef, reg: RegisteredStructure) -> tuple[PoissonMap, ReducedSystem]:
    s = system.params.sign_branch

    def x2sq(q, c):
        return s * (q * q - 2.0 * c)

    def forward(q, p, c):
        return np.array([q, math.sqrt(x2sq(q, c)), p / q])

    def inverse(x):
        X1, X2, phi = x
        return X1, X1 * phi, 0.5 * (X1 * X1 - s * X2 * X2)

    def domain(q, p, c):
        return q >= 0.05 and x2sq(q, c) > 0.0

    def draw(rng):
        if s == -1:
            c = rng.uniform(0.5, 2.0)
            q = rng.uniform(0.2, 0.9 * math.sqrt(2 * c))
        else:
            c = rng.uniform(-2.0, -0.5)
            q = rng.uniform(0.2, 2.0)
        return q, q * rng.uniform(0.2, 2 * math.pi - 0.2), c

    def H(q, p, c):
        return q * q * math.sqrt(x2sq(q, c)) * math.sin(p / q)

    def dH_dp(q, p, c):
        return q * math.sqrt(x2sq(q, c)) * math.cos(p / q)

    def dH_dq(q, p, c):
        b = math.sqrt(x2sq(q, c))
        phi = p / q
        return math.sin(phi) * (2 * q * b + s * q**3 / b) - p * b * math.cos(phi)

    def momentum(q, E, c, branch):
        b2 = x2sq(q, c)
        if not b2 > 0 or q <= 0:
            raise OffShellError(f"q={q} is outside the chart for level {c}")
        v = E / (q * q * math.sqrt(b2))
        if abs(v) > 1.0:
            raise OffShellError(f"no real momentum: |E| exceeds q^2 X2 at q={q}")
        phi = math.asin(v) if branch > 0 else math.pi - math.asin(v)
        return q * phi

    def speed2(q, E, c):
        return q * q * x2sq(q, c) - (E / q) ** 2

    pmap = PoissonMap("mapExI", forward, inverse, domain, system.invariants["C1"], draw)
    return pmap, ReducedSystem("example1/pois2", H, dH_dq, dH_dp, momentum, speed2)


def _bridges_a_chart(system: SystemDef, reg) -> tuple[PoissonMap, ReducedSystem]:
    Q = system.params.Q
    P = Q.integ(lbnd=0.0)

    def forward(q, p, c):
        return np.array([q, c + P(q), p])

    def inverse(x):
        return x[0], x[2], x[1] - P(x[0])

    def draw(rng):
        return tuple(rng.uniform(-2.0, 2.0, 3))

    def H(q, p, c):
        return p * p - q * (c + P(q))

    def momentum(q, E, c, branch):
        v = E + q * (c + P(q))
        if v < 0:
            raise OffShellError(f"no real momentum at q={q}")
        return math.copysign(math.sqrt(v), branch)

    pmap = PoissonMap("mapExII_a", forward, inverse, lambda q, p, c: True,
                      system.invariants["C2"], draw)
    rs = ReducedSystem("bridges/pois12", H, lambda q, p, c: -(c + P(q)) - q * Q(q),
                       lambda q, p, c: 2.0 * p, momentum,
                       lambda q, E, c: 4.0 * (E + q * (c + P(q))))
    return pmap, rs


def _bridges_b_chart(system: SystemDef, reg) -> tuple[PoissonMap, ReducedSystem]:
    Q = system.params.Q
    P = Q.integ(lbnd=0.0)

    # X1 = e^{-q}, X3 = -p keeps {q, p} = +1; X2 carries the level c = C1
    def forward(q, p, c):
        return np.array([math.exp(-q), math.exp(q) * (p * p - c), -p])

    def inverse(x):
        X1, X2, X3 = x
        return -math.log(X1), -X3, X3 * X3 - X1 * X2

    def draw(rng):
        return rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)

    def H(q, p, c):
        return math.exp(q) * (p * p - c) - P(math.exp(-q))

    def dH_dq(q, p, c):
        return math.exp(q) * (p * p - c) + Q(math.exp(-q)) * math.exp(-q)

    def p_squared(q, E, c):
        return c + math.exp(-q) * (E + P(math.exp(-q)))

    def momentum(q, E, c, branch):
        v = p_squared(q, E, c)
        if v < 0:
            raise OffShellError(f"no real momentum at q={q}")
        return math.copysign(math.sqrt(v), branch)

    pmap = PoissonMap("mapExII_b", forward, inverse, lambda q, p, c: math.isfinite(math.exp(q)),
                      system.invariants["C1"], draw)
    rs = ReducedSystem("bridges/pois22", H, dH_dq, lambda q, p, c: 2.0 * p * math.exp(q),
                       momentum, lambda q, E, c: 4.0 * math.exp(2 * q) * p_squared(q, E, c))
    return pmap, rs


def _euler_weights(system: SystemDef, label: str) -> tuple[float, float, float]:
    """(w1, w2, w3) with H = (lam - p^2)(w1 cos^2 q + w2 sin^2 q) + w3 p^2."""
    I1, I2, I3 = system.params.inertia
    if label == "euler1":
        return 1 / (2 * I1), 1 / (2 * I2), 1 / (2 * I3)
    return 1 / (2 * I2 * I3), 1 / (2 * I1 * I3), 1 / (2 * I1 * I2)


def _euler_chart(system: SystemDef, reg: RegisteredStructure) -> tuple[PoissonMap, ReducedSystem]:
    I1, I2, I3 = system.params.inertia
    w1, w2, w3 = _euler_weights(system, reg.label)

    if reg.label == "euler1":
        a1, a2, a3 = 1.0, 1.0, 1.0
        casimir = system.invariants["C2"]
        level_of = lambda L: float(L @ L)
        name = "mapEuler_a"
    else:
        # L2 enters with a minus sign so that {q, p} = +1 for the sign-corrected structure
        a1, a2, a3 = 1 / math.sqrt(I2 * I3), -1 / math.sqrt(I1 * I3), 1 / math.sqrt(I1 * I2)
        C1 = system.invariants["C1"]
        casimir = C1.scaled(2 * I1 * I2 * I3, "2*I1*I2*I3*C1")
        level_of = lambda L: 2 * I1 * I2 * I3 * C1(L)
        name = "mapEuler_b"

    def forward(q, p, lam):
        rho = math.sqrt(lam - p * p)
        return np.array([a1 * rho * math.cos(q), a2 * rho * math.sin(q), a3 * p])

    def inverse(L):
        return math.atan2(L[1] / a2, L[0] / a1), L[2] / a3, level_of(np.asarray(L))

    def draw(rng):
        lam = rng.uniform(0.5, 2.0)
        return (rng.uniform(-math.pi + 0.2, math.pi - 0.2),
                rng.uniform(-0.9, 0.9) * math.sqrt(lam), lam)

    g = lambda q: w1 * math.cos(q) ** 2 + w2 * math.sin(q) ** 2

    def H(q, p, lam):
        return (lam - p * p) * g(q) + w3 * p * p

    def p_squared(q, E, lam):
        return (E - lam * g(q)) / (w3 - g(q))

    def momentum(q, E, lam, branch):
        v = p_squared(q, E, lam)
        if not 0.0 <= v < lam:
            raise OffShellError(f"no real momentum at q={q} (p^2 = {v:.6g}, level {lam})")
        return math.copysign(math.sqrt(v), branch)

    def speed2(q, E, lam):
        return p_squared(q, E, lam) * (2 * (w3 - g(q))) ** 2

    def p_allowed(p, E, lam):
        # cos^2 q solving H = E at this p must lie in [0, 1]
        c2 = ((E - w3 * p * p) / (lam - p * p) - w2) / (w1 - w2)
        return min(c2, 1.0 - c2)

    pmap = PoissonMap(name, forward, inverse, lambda q, p, lam: lam - p * p > 0.0, casimir, draw)
    rs = ReducedSystem(f"euler/{reg.label}", H,
                       lambda q, p, lam: (lam - p * p) * (w2 - w1) * math.sin(2 * q),
                       lambda q, p, lam: 2 * p * (w3 - g(q)), momentum, speed2, p_allowed)
    return pmap, rs


_CHARTS = {
    ("example1", "pois2"): _example1_chart,
    ("bridges", "pois12"): _bridges_a_chart,
    ("bridges", "pois22"): _bridges_b_chart,
    ("euler", "euler1"): _euler_chart,
    ("euler", "euler2"): _euler_chart,
}


def make_chart(system, structure: str, params: ParameterSet | None = None,
               check_points: int = 10, seed: int = 0) -> HJChart:
    """Wire (system, structure, map, reduced Hamiltonian); verify H agrees on the chart."""
    if not isinstance(system, SystemDef):
        system = make_system(system, params)
    key = (system.name, structure.lower())
    if key not in _CHARTS:
        raise ContractError(f"no Poisson map registered for {key}; known: {sorted(_CHARTS)}")
    reg = make_structure(system, key[1])
    pmap, rs = _CHARTS[key](system, reg)
    rng = np.random.default_rng(seed)
    for _ in range(check_points):
        q, p, c = pmap.draw(rng)
        if not pmap.domain(q, p, c):
            continue
        full = reg.hamiltonian(pmap.forward(q, p, c))
        red = rs.hamiltonian(q, p, c)
        if not abs(full - red) < 1e-10 * max(1.0, abs(full)):
            raise SelfCheckError(f"{key}: reduced Hamiltonian disagrees ({full} vs {red})")
    return HJChart(system, reg, pmap, rs)


def reduced_hamiltonian(system, structure: str, params: ParameterSet | None = None) -> ReducedSystem:
    return make_chart(system, structure, params).reduced


@dataclass(frozen=True)
class BracketCheck:
    residual: float
    evaluated: int
    skipped: int


def pullback_bracket_residual(pmap: PoissonMap, P: PoissonStructure, samples: int,
                              seed: int = 0) -> BracketCheck:
    """max |{q o inv, p o inv}_P - 1| over chart samples."""
    rng = np.random.default_rng(seed)
    qf, pf = pmap.q_field(), pmap.p_field()
    worst, done, skipped = 0.0, 0, 0
    for _ in range(samples):
        q, p, c = pmap.draw(rng)
        if not pmap.domain(q, p, c):
            skipped += 1
            continue
        x = pmap.forward(q, p, c)
        worst = max(worst, abs(bracket(P, qf, pf, x) - 1.0))
        done += 1
    return BracketCheck(worst, done, skipped)


# --- quadrature ------------------------------------------------------------------

def turning_points(rs: ReducedSystem, E: float, level: float, window: tuple[float, float],
                   variable: str = "q", n_grid: int = 4000) -> list[float]:
    """Roots of the on-shell speed (variable "q") or of momentum reachability ("p")."""
    if variable == "q":
        g = lambda v: rs.speed2(v, E, level)
    elif variable == "p" and rs.p_allowed is not None:
        g = lambda v: rs.p_allowed(v, E, level)
    else:
        raise ContractError(f"turning points in {variable!r} are not available for {rs.name}")
    grid = np.linspace(window[0], window[1], n_grid + 1)
    with np.errstate(all="ignore"):
        vals = np.array([g(v) for v in grid])
    roots = []
    for i in range(n_grid):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(roots)


def time_of_flight(rs: ReducedSystem, q0: float, q1: float, E: float, level: float,
                   tol: float = 1e-10) -> float:
    """int dq / |dq/dt| between q0 and q1 on one monotone branch.

    Each half of the interval is integrated from its endpoint with q = end + s^2,
    which removes inverse-square-root singularities at turning points.
    """
    if q0 == q1:
        return 0.0
    a, b = min(q0, q1), max(q0, q1)
    inner = np.linspace(a, b, 1001)[1:-1]
    if np.any(np.array([rs.speed2(v, E, level) for v in inner]) < 0):
        raise BranchError(f"[{a}, {b}] contains a turning point or forbidden region")
    mid = 0.5 * (a + b)
    tiny = np.finfo(float).tiny

    def piece(end, towards):
        sgn = 1.0 if towards > end else -1.0
        upper = math.sqrt(abs(towards - end))

        def integrand(s):
            return 2.0 * s / math.sqrt(max(rs.speed2(end + sgn * s * s, E, level), tiny))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _quad.IntegrationWarning)
            val, err, info = _quad.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=tol,
                                        limit=500, full_output=1)[:3]
        if not (math.isfinite(val) and err <= max(100 * tol * abs(val), 1e-300)):
            raise FlightTimeError(f"quadrature did not converge near q={end} "
                                  f"(estimate {val:.6g}, error {err:.3g})")
        return val

    return piece(a, mid) + piece(b, mid)


def hj_trajectory(chart: HJChart, E: float, level: float, q_init: float, branch: int,
                  t_grid: Sequence[float], cfg: IntegratorConfig | None = None) -> HJSolution:
    """Integrate the reduced canonical equations from an on-shell start and lift them."""
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-13) if cfg is None else cfg
    rs, pmap = chart.reduced, chart.pmap
    p0 = rs.momentum(q_init, E, level, branch)
    if not pmap.domain(q_init, p0, level):
        raise OffShellError(f"initial point (q={q_init}, p={p0}) lies outside {pmap.name}")
    t_grid = np.asarray(t_grid, dtype=float)
    traj = integrate(rs.canonical_field(level), [q_init, p0], (t_grid[0], t_grid[-1]),
                     cfg=cfg, t_eval=t_grid)
    qp = traj.states
    states = np.array([pmap.forward(q, p, level) for q, p in qp])
    e_drift = max(abs(rs.hamiltonian(q, p, level) - E) for q, p in qp)
    l_drift = max(abs(pmap.casimir(x) - level) for x in states)
    sol = HJSolution(float(E), float(level), int(branch), traj.times, qp, states, chart, traj,
                     float(e_drift), float(l_drift))
    ext = sol.q_extrema_times()
    if len(ext) >= 2:
        worst = 0.0
        for ta, tb in zip(ext[:-1], ext[1:]):
            qa, qb = sol.q_of_t(ta), sol.q_of_t(tb)
            tof = time_of_flight(rs, qa, qb, E, level)
            worst = max(worst, abs(tof - (tb - ta)) / (tb - ta))
        sol.flight_check = worst
    return sol


def initial_condition(chart: HJChart, state) -> tuple[float, float, float, int]:
    """(E, level, q, branch) of the reduced problem through a full state."""
    q, p, c = chart.pmap.inverse(np.asarray(state, dtype=float))
    E = chart.reduced.hamiltonian(q, p, c)
    return E, c, q, 1 if p >= 0 else -1


# --- closed forms ----------------------------------------------------------------

@dataclass(frozen=True)
class EulerParameters:
    amplitudes: tuple[float, float, float]
    rate: float
    m: float
    relabel: bool
    orientation: float


def euler_parameters(inertia, E: float, lam: float) -> EulerParameters:
    """Amplitudes, frequency and modulus fixed by C1 = E, C2 = lam and the flow.

    For 2 E I2 < lam <= 2 E I3 the motion circulates about axis 3; below 2 E I2
    axes 1 and 3 are swapped and the same formulas apply to the relabelled body.
    """
    ParameterSet(inertia=tuple(inertia)).require_ordered_inertia()
    I = np.asarray(inertia, dtype=float)
    lo, mid, hi = 2 * E * I[0], 2 * E * I[1], 2 * E * I[2]
    if not lo < lam <= hi:
        raise ContractError(f"need 2 E I1 < lam <= 2 E I3, got lam={lam} with E={E}")
    if lam == mid:
        raise ContractError("lam = 2 E I2 is the separatrix (modulus 1)")
    relabel = lam < mid
    J1, J2, J3 = I[::-1] if relabel else I
    A = math.sqrt(J1 * (2 * E * J3 - lam) / (J3 - J1))
    B = math.sqrt(J2 * (2 * E * J3 - lam) / (J3 - J2))
    C = math.sqrt(J3 * (lam - 2 * E * J1) / (J3 - J1))
    rate = math.sqrt((J3 - J2) * (lam - 2 * E * J1) / (J1 * J2 * J3))
    m = (J2 - J1) * (2 * E * J3 - lam) / ((J3 - J2) * (lam - 2 * E * J1))
    if not 0.0 <= m < 1.0:
        raise ContractError(f"modulus m={m} out of range")
    # the odd relabelling reverses both the flow and the sign of J3 - J2, so L2 keeps its sign
    return EulerParameters((A, B, C), rate, m, relabel, -1.0)


def euler_state(par: EulerParameters, tau: float, axis_sign: float = 1.0) -> np.ndarray:
    sn, cn, dn = jacobi_sn_cn_dn(tau, par.m)
    A, B, C = par.amplitudes
    L = np.array([A * cn, par.orientation * axis_sign * B * sn, axis_sign * C * dn])
    return L[::-1] if par.relabel else L


def euler_closed_form(inertia, E: float, lam: float, t0: float, t_grid: Sequence[float],
                      axis_sign: float = 1.0) -> Trajectory:
    """Closed-form free rigid body with C1 = E, C2 = lam; sn vanishes at t = t0."""
    par = euler_parameters(inertia, E, lam)
    t_grid = np.asarray(t_grid, dtype=float)
    states = np.array([euler_state(par, par.rate * (t - t0), axis_sign) for t in t_grid])
    inv_I = 1.0 / np.asarray(inertia, dtype=float)
    drifts = {"C1": np.abs(0.5 * np.sum(inv_I * states**2, axis=1) - E),
              "C2": np.abs(np.sum(states**2, axis=1) - lam)}
    return Trajectory(t_grid, states, drifts)


def euler_phase(inertia, L0) -> tuple[float, float, float, float]:
    """(E, lam, t0, axis_sign) making the closed form pass through L0 at t = 0."""
    L0 = np.asarray(L0, dtype=float)
    I = np.asarray(inertia, dtype=float)
    E = 0.5 * float(np.sum(L0**2 / I))
    lam = float(L0 @ L0)
    par = euler_parameters(inertia, E, lam)
    Lp = L0[::-1] if par.relabel else L0
    axis_sign = 1.0 if Lp[2] >= 0 else -1.0
    A, B, _ = par.amplitudes
    if A == 0.0 or B == 0.0:
        return E, lam, 0.0, axis_sign
    cn = Lp[0] / A
    sn = Lp[1] / (par.orientation * axis_sign * B)
    u0 = inverse_amplitude(math.atan2(sn, cn), par.m)
    return E, lam, -u0 / par.rate, axis_sign


def euler_period(inertia, E: float, lam: float) -> float:
    par = euler_parameters(inertia, E, lam)
    return 4.0 * complete_K(par.m) / par.rate


def euler_structure2_constants(inertia, E: float, lam: float) -> tuple[float, float]:
    """Map (E, lam) of the first reduction to (E, lam) of the second: E' = lam/2, lam' = 2 I1 I2 I3 E."""
    I1, I2, I3 = inertia
    return 0.5 * lam, 2.0 * I1 * I2 * I3 * E


def ex2_closed_form(level: float, E: float, B: float, t0: float,
                    t_grid: Sequence[float]) -> Trajectory:
    """Q(s) = 1 solution on the level X2 - X1 = level with X3^2 - X1 X2 = E.

    With w = B exp(2 (t - t0)) and k^2 = E - level^2/4:
    X1 = w/2 - level/2 - k^2/(2w), X2 = X1 + level, X3 = w/2 + k^2/(2w).
    """
    k2 = E - 0.25 * level * level
    if k2 < 0:
        raise ContractError(f"need E - level^2/4 >= 0, got {k2}")
    if not B > 0:
        raise ContractError("B must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    w = B * np.exp(2.0 * (t_grid - t0))
    X1 = 0.5 * w - 0.5 * level - k2 / (2.0 * w)
    X3 = 0.5 * w + k2 / (2.0 * w)
    states = np.column_stack([X1, X1 + level, X3])
    drifts = {"C1": np.abs(X3**2 - X1 * (X1 + level) - E),
              "C2": np.abs((X1 + level) - X1 - level)}
    return Trajectory(t_grid, states, drifts)


def ex2_flight_time(level: float, E: float, q0: float, q1: float) -> float:
    """Logarithmic closed form of the Q(s) = 1 flight time (k^2 > 0, increasing branch)."""
    k2 = E - 0.25 * level * level
    w = lambda q: 0.5 * ((2 * q + level) + math.sqrt((2 * q + level) ** 2 + 4 * k2))
    return 0.5 * math.log(w(q1) / w(q0))
