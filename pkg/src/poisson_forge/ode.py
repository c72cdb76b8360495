"""Adaptive Dormand-Prince 5(4) integration with invariant drift tracking."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import ContractError, DomainError, VectorField, as_state

# Dormand-Prince coefficients (first same as last)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + theta h) = y + h * K^T P [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_BETA = 0.04            # PI controller memory exponent
_ALPHA = 0.2 - 0.75 * _BETA
_MIN_FACTOR, _MAX_FACTOR = 0.2, 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    dense_output: bool = False
    first_step: Optional[float] = None
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ContractError("rtol and atol must be positive")
        if not self.max_step > 0:
            raise ContractError("max_step must be positive")


@dataclass
class _Segment:
    t: float
    h: float
    y: np.ndarray
    Q: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        theta = (t - self.t) / self.h
        return self.y + self.h * (self.Q @ (theta ** np.arange(1, 5)))


@dataclass
class DenseSolution:
    segments: list

    def __call__(self, t: float) -> np.ndarray:
        if not self.segments:
            raise ContractError("empty dense solution")
        starts = np.array([s.t for s in self.segments])
        if self.segments[0].h > 0:
            i = int(np.searchsorted(starts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-starts, -t, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return self.segments[i](t)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    drifts: dict = field(default_factory=dict)
    truncated: bool = False
    message: str = ""
    dense: Optional[DenseSolution] = None
    n_steps: int = 0
    n_rejected: int = 0

    def max_drift(self) -> dict:
        return {k: float(np.max(v)) if len(v) else 0.0 for k, v in self.drifts.items()}


def _rms_norm(err, scale):
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0, d1 = _rms_norm(y0, scale), _rms_norm(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = fun(y1)
    d2 = _rms_norm(f1 - f0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(f, x0, t_span: tuple[float, float], invariants=(),
              cfg: IntegratorConfig | None = None, t_eval: Sequence[float] | None = None) -> Trajectory:
    """Integrate dx/dt = f(x) over t_span.

    ``invariants`` is a sequence of ScalarField (or a name -> field mapping);
    their drift |C(x(t)) - C(x0)| is recorded at every output time. With
    ``t_eval`` the output is sampled from the dense interpolant.
    """
    cfg = IntegratorConfig() if cfg is None else cfg
    raw = f if not isinstance(f, VectorField) else f.__call__

    def fun(x):
        try:
            return np.asarray(raw(x), dtype=float)
        except DomainError:
            return np.full(x.shape, np.nan)
    y = as_state(x0).copy()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        raise ContractError("t_span must have nonzero length")
    direction = 1.0 if t1 > t0 else -1.0
    if isinstance(invariants, Mapping):
        named = dict(invariants)
    else:
        named = {(C.name or f"C{i + 1}"): C for i, C in enumerate(invariants)}

    fy = np.asarray(fun(y), dtype=float)
    if not np.all(np.isfinite(fy)):
        raise ContractError("flow is not finite at the initial state")
    h = cfg.first_step or _initial_step(fun, t0, y, fy, direction, cfg.rtol, cfg.atol)
    h = min(h, cfg.max_step, abs(t1 - t0))
    t = t0
    times, states, segments = [t0], [y.copy()], []
    err_prev = 1e-4
    n_steps = n_rejected = 0
    truncated, message = False, ""
    want_dense = cfg.dense_output or t_eval is not None
    K = np.empty((7, y.size))

    while direction * (t1 - t) > 0:
        if n_steps >= cfg.max_steps:
            truncated, message = True, f"step budget of {cfg.max_steps} exhausted at t={t:.17g}"
            break
        min_step = 10 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < min_step:
            truncated, message = True, f"step size underflow at t={t:.17g}"
            break
        step = direction * min(h, abs(t1 - t))
        K[0] = fy
        ok = True
        for s in range(1, 6):
            K[s] = fun(y + step * (np.asarray(_A[s]) @ K[:s]))
            if not np.all(np.isfinite(K[s])):
                ok = False
                break
        if ok:
            y_new = y + step * (_B[:6] @ K[:6])
            K[6] = fun(y_new)
            ok = bool(np.all(np.isfinite(K[6])))
        if not ok:
            # stage left the domain of the flow
            h *= 0.25
            n_rejected += 1
            continue
        scale = cfg.atol + np.maximum(np.abs(y), np.abs(y_new)) * cfg.rtol
        err = _rms_norm(step * (_E @ K), scale)
        if err <= 1.0:
            if want_dense:
                segments.append(_Segment(t, step, y.copy(), K.T @ _P))
            t = t + step if direction * (t1 - (t + step)) > 0 else t1
            y, fy = y_new, K[6].copy()
            n_steps += 1
            times.append(t)
            states.append(y.copy())
            factor = _SAFETY * err ** -_ALPHA * err_prev ** _BETA if err > 0 else _MAX_FACTOR
            h = min(abs(step) * min(_MAX_FACTOR, max(_MIN_FACTOR, factor)), cfg.max_step)
            err_prev = max(err, 1e-4)
        else:
            n_rejected += 1
            h = abs(step) * max(_MIN_FACTOR, _SAFETY * err ** -_ALPHA)

    dense = DenseSolution(segments) if want_dense else None
    if t_eval is not None:
        te = np.asarray(t_eval, dtype=float)
        reached = te[direction * (te - t) <= 0] if truncated else te
        out_t = reached
        out_y = np.array([dense(tt) if tt != t0 else states[0] for tt in reached]).reshape(-1, y.size)
    else:
        out_t, out_y = np.array(times), np.array(states)
    x_start = states[0]
    drifts = {name: np.abs(np.array([C(s) for s in out_y]) - C(x_start)) for name, C in named.items()}
    return Trajectory(out_t, out_y, drifts, truncated, message, dense, n_steps, n_rejected)


def trajectory_csv(traj: Trajectory, invariant_names: Sequence[str] | None = None,
                   dim: int | None = None) -> str:
    """CSV text with header t,x1..xN,<invariant drift columns>; 17 significant digits."""
    names = list(traj.drifts) if invariant_names is None else list(invariant_names)
    n = traj.states.shape[1] if traj.states.size else (dim or 0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + names)
    for i, tt in enumerate(traj.times):
        row = [tt, *traj.states[i]] + [traj.drifts[k][i] for k in names]
        w.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


def header_only_csv(dim: int, invariant_names: Sequence[str]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerow(
        ["t"] + [f"x{i + 1}" for i in range(dim)] + list(invariant_names))
    return buf.getvalue()
