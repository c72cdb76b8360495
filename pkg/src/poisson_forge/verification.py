"""Report builders shared by the command line and the acceptance suite.

Everything here only calls module operations and collects their outputs
into plain dicts; no new mathematics lives in this file.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import ScalarField
from .hj import (HJChart, euler_closed_form, euler_period, euler_phase,
                 euler_structure2_constants, hj_trajectory, initial_condition, make_chart)
from .ode import IntegratorConfig, Trajectory, integrate
from .poisson import (STRUCTURES, antisymmetry_residual, casimir_residual, hamilton_residual,
                      jacobi_residual, make_structure, rank_at)
from .stability import bridges_report, critical_point_at, linearize_flow, linearize_poisson
from .systems import (ParameterSet, SystemDef, cartesian_to_polar, cartesian_to_polar_jacobian,
                      make_system)


@dataclass(frozen=True)
class Thresholds:
    jacobi: float = 1e-8
    hamilton: float = 1e-9
    casimir: float = 1e-12

    @classmethod
    def uniform(cls, tol: float | None) -> "Thresholds":
        return cls() if tol is None else cls(tol, tol, tol)


def structure_checks(system: SystemDef, label: str, n_samples: int = 100, seed: int = 0,
                     thresholds: Thresholds = Thresholds(), corrupt_H: bool = False) -> dict:
    """Residual maxima over seeded samples, per evaluation time."""
    reg = make_structure(system, label, seed=seed)
    H = reg.hamiltonian.scaled(2.0, "2H") if corrupt_H else reg.hamiltonian
    pts = reg.sample(system, np.random.default_rng(seed), n_samples)
    per_time = []
    for t in reg.times:
        anti = max(antisymmetry_residual(reg.structure, x, t) for x in pts)
        jac = max(jacobi_residual(reg.structure, x, t) for x in pts)
        ham = max(hamilton_residual(reg.structure, H, system.flow, x, t) for x in pts)
        cas = (max(casimir_residual(reg.structure, reg.casimir, x, t) for x in pts)
               if reg.casimir is not None else None)
        ranks = sorted({rank_at(reg.structure, x, t) for x in pts})
        per_time.append({"t": t, "antisymmetry": anti, "jacobi": jac, "hamilton": ham,
                         "casimir": cas, "ranks": ranks})
    failures = []
    for row in per_time:
        if row["antisymmetry"] != 0.0:
            failures.append(f"{label} t={row['t']}: antisymmetry {row['antisymmetry']:.3g}")
        if not row["jacobi"] < thresholds.jacobi:
            failures.append(f"{label} t={row['t']}: jacobi {row['jacobi']:.3g}")
        if not row["hamilton"] < thresholds.hamilton:
            failures.append(f"{label} t={row['t']}: hamilton {row['hamilton']:.3g}")
        if row["casimir"] is not None and not row["casimir"] < thresholds.casimir:
            failures.append(f"{label} t={row['t']}: casimir {row['casimir']:.3g}")
    return {"system": system.name, "structure": label, "samples": n_samples, "seed": seed,
            "sign": reg.sign, "reference_sign": reg.reference_sign,
            "sign_fixed": reg.sign != reg.reference_sign, "corrupt_H": corrupt_H,
            "thresholds": asdict(thresholds), "per_time": per_time,
            "passed": not failures, "failures": failures}


def verify_report(systems: dict[str, SystemDef], labels: dict[str, list[str]], n_samples: int,
                  seed: int, thresholds: Thresholds, corrupt_H: bool = False) -> dict:
    results = []
    for name, sysd in systems.items():
        for label in labels[name]:
            results.append(structure_checks(sysd, label, n_samples, seed, thresholds, corrupt_H))
    invariants = {name: sysd_inv for name, sysd_inv in
                  ((n, _invariant_residuals(s, seed)) for n, s in systems.items())}
    failures = [f for r in results for f in r["failures"]]
    return {"structures": results, "invariant_residuals": invariants,
            "passed": not failures, "failures": failures}


def _invariant_residuals(sysd: SystemDef, seed: int) -> dict:
    from .systems import verify_invariants
    return verify_invariants(sysd, 100, np.random.default_rng(seed))


# --- stability -----------------------------------------------------------------

DEFAULT_GRIDS = {"pois1": (0.5, 1.0, 2.0), "pois2": (0.5, 1.0, 2.0),
                 "pois12": (0.5, 1.0, 2.0), "pois22": (0.5, 1.0, 2.0)}


def stability_table(system: SystemDef, label: str, grid) -> dict:
    reg = make_structure(system, label)
    reports, verdict = bridges_report(system, reg, grid)
    rows = []
    for r in reports:
        row = r.row()
        row["state"] = [float(v) for v in r.critical_point.state]
        row["eigenvalues"] = [[float(z.real), float(z.imag)] for z in r.eigenvalues]
        rows.append(row)
    return {"system": system.name, "structure": label, "rows": rows,
            "relation": verdict.relation, "consistent": verdict.consistent,
            "agrees_with_slope_criterion": verdict.agrees_with_slope_criterion}


def stability_audit(tables: list[dict]) -> dict:
    relations = [t["relation"] for t in tables]
    opposite = (len(relations) == 2 and all(t["consistent"] for t in tables)
                and relations[0] != relations[1] and "mixed" not in relations)
    return {"relations": relations, "opposite": opposite}


def euler_equilibrium_comparison(system: SystemDef, axis: int = 1,
                                 magnitude: float = 1.0) -> dict:
    """Linearizations of both rigid body structures at the steady rotation about one axis."""
    I = system.params.inertia
    x = np.zeros(3)
    x[axis] = magnitude
    A_flow = linearize_flow(system.flow, x)
    out = {"state": x.tolist()}
    for label, m in (("euler1", 1.0 / (2.0 * I[axis])), ("euler2", I[axis])):
        reg = make_structure(system, label)
        cp = critical_point_at(reg.hamiltonian, reg.casimir, x, m, label)
        A = linearize_poisson(reg.structure, reg.hamiltonian, reg.casimir, cp)
        out[label] = float(np.max(np.abs(A - A_flow)))
    return out


# --- trajectories ----------------------------------------------------------------

def simulate(system: SystemDef, x0, t_span, n_points: int, cfg: IntegratorConfig) -> Trajectory:
    t_eval = np.linspace(t_span[0], t_span[1], n_points)
    return integrate(system.flow, x0, tuple(t_span), system.invariants, cfg, t_eval)


def polar_pair(x0, t_span, n_points: int, cfg: IntegratorConfig,
               params: ParameterSet | None = None) -> tuple[Trajectory, Trajectory, float]:
    """4D trajectory, its polar image, and the polar-equation residual along it."""
    params = ParameterSet(sign_branch=-1) if params is None else params
    cart = make_system("otwo_cartesian", params)
    polar = make_system("otwo_polar", params)
    traj = simulate(cart, x0, t_span, n_points, cfg)
    mapped = np.array([cartesian_to_polar(x) for x in traj.states])
    residual = 0.0
    for x4, y in zip(traj.states, mapped):
        push = cartesian_to_polar_jacobian(x4) @ cart.flow(x4)
        residual = max(residual, float(np.max(np.abs(push - polar.flow(y)))))
    drifts = {k: np.abs(np.array([C(y) for y in mapped]) - C(mapped[0]))
              for k, C in polar.invariants.items()}
    return traj, Trajectory(traj.times, mapped, drifts, traj.truncated, traj.message), residual


def hj_comparison(chart: HJChart, state, t_grid, cfg: IntegratorConfig | None = None) -> dict:
    """Lifted reduced solution against direct integration from the same state."""
    E, level, q, branch = initial_condition(chart, state)
    sol = hj_trajectory(chart, E, level, q, branch, t_grid)
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-13) if cfg is None else cfg
    direct = integrate(chart.system.flow, chart.pmap.forward(*sol.qp[0], level),
                       (t_grid[0], t_grid[-1]), chart.system.invariants, cfg, t_grid)
    n = min(len(direct.times), len(sol.times))
    dev = float(np.max(np.abs(direct.states[:n] - sol.states[:n])))
    flow_res = max(float(np.max(np.abs(chart.system.flow(x) - _lift_rate(chart, qp, level))))
                   for x, qp in zip(sol.states, sol.qp))
    return {"system": chart.system.name, "structure": chart.structure.label,
            "map": chart.pmap.name, "E": E, "level": level, "q_init": q, "branch": branch,
            "max_deviation": dev, "energy_drift": sol.energy_drift,
            "level_drift": sol.level_drift, "flight_check": sol.flight_check,
            "flow_residual": flow_res, "truncated": sol.truncated or direct.truncated,
            "solution": sol}


def _lift_rate(chart: HJChart, qp, level: float, h: float = 1e-6) -> np.ndarray:
    # d/dt forward(q(t), p(t)) by the chain rule with central differences in (q, p)
    q, p = qp
    rs, fwd = chart.reduced, chart.pmap.forward
    qd, pd = rs.dH_dp(q, p, level), -rs.dH_dq(q, p, level)
    dq = (fwd(q + h, p, level) - fwd(q - h, p, level)) / (2 * h)
    dp = (fwd(q, p + h, level) - fwd(q, p - h, level)) / (2 * h)
    return dq * qd + dp * pd


def euler_cross_structure(system: SystemDef, L0, t_grid) -> dict:
    """Both rigid body reductions and the closed form from the same initial state."""
    I = system.params.inertia
    sols = {}
    for label in ("euler1", "euler2"):
        chart = make_chart(system, label)
        sols[label] = hj_comparison(chart, L0, t_grid)
    E, lam, t0, axis_sign = euler_phase(I, L0)
    closed = euler_closed_form(I, E, lam, t0, t_grid, axis_sign)
    e1, e2 = sols["euler1"], sols["euler2"]
    E2, lam2 = euler_structure2_constants(I, E, lam)
    return {"E": E, "lambda": lam, "period": euler_period(I, E, lam),
            "structure2_constants_expected": [E2, lam2],
            "structure2_constants_measured": [e2["E"], e2["level"]],
            "constants_mismatch": max(abs(E2 - e2["E"]), abs(lam2 - e2["level"])),
            "cross_structure_deviation": float(np.max(np.abs(
                e1["solution"].states - e2["solution"].states))),
            "closed_form_deviation": float(np.max(np.abs(closed.states - e1["solution"].states))),
            "euler1": {k: v for k, v in e1.items() if k != "solution"},
            "euler2": {k: v for k, v in e2.items() if k != "solution"},
            "solutions": sols, "closed_form": closed}


def available_labels(system_name: str) -> list[str]:
    return list(STRUCTURES.get(system_name, ()))
