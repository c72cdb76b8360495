"""Command line front end: verify | stability | simulate | hj | errata.

Exit codes: 0 pass, 1 verification failure, 2 configuration error,
3 numerical failure (non-convergence or truncation).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .core import ContractError, DomainError
from .errata import all_entries
from .hj import BranchError, FlightTimeError, OffShellError, make_chart
from .ode import IntegratorConfig, Trajectory, header_only_csv, trajectory_csv
from .poisson import DegenerateDeformationError
from .stability import CriticalPointError
from .systems import SYSTEM_NAMES, ParameterSet, SelfCheckError, canonical_name, make_system
from . import verification as V

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_NUM = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "system": {"type": "string"},
        "structure": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sign_branch": {"enum": [-1, 1]},
                "poly_q": {"type": "array", "items": _NUM, "minItems": 1},
                "inertia": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            },
        },
        "multipliers": {"type": "array", "items": _NUM, "minItems": 1},
        "x0": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 4},
        "t_span": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "n_points": {"type": "integer", "minimum": 2},
        "rtol": {"type": "number", "exclusiveMinimum": 0},
        "atol": {"type": "number", "exclusiveMinimum": 0},
        "polar_pair": {"type": "boolean"},
        "E": _NUM,
        "level": _NUM,
        "q_init": _NUM,
        "branch": {"enum": [-1, 1]},
        "compare_structures": {"type": "boolean"},
        "out": {"type": "string"},
    },
}

DEFAULT_X0 = {"euler": [0.2, 0.3, 0.9], "example1": [0.8, 1.2, 1.0],
              "bridges": [0.3, -0.7, 1.1], "otwo_cartesian": [1.0, 0.2, 0.3, 1.0],
              "otwo_polar": [1.0, 1.0, 0.5]}
DEFAULT_SPAN = {"euler": [0.0, 50.0], "example1": [0.0, 10.0], "bridges": [0.0, 1.0],
                "otwo_cartesian": [0.0, 5.0], "otwo_polar": [0.0, 5.0]}
DEFAULT_POINTS = 5001


class ConfigError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v).__name__}")


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.config_json:
        try:
            cfg.update(json.loads(args.config_json))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"inline config is not JSON: {exc}") from exc
    for key in ("system", "structure", "seed", "tol", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise ConfigError(f"{where}: {exc.message}") from exc
    return cfg


def _params(cfg) -> ParameterSet:
    p = cfg.get("params", {})
    kw = {}
    if "sign_branch" in p:
        kw["sign_branch"] = p["sign_branch"]
    if "poly_q" in p:
        kw["poly_q"] = tuple(p["poly_q"])
    if "inertia" in p:
        kw["inertia"] = tuple(p["inertia"])
    return ParameterSet(**kw)


def _system_name(cfg, default: str | None = None) -> str:
    name = cfg.get("system", default)
    if name is None:
        raise ConfigError("a system is required")
    return canonical_name(name)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="")


def _sidecar(path: str | None, suffix: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


_SIGN_ERRATA = {"euler2": "euler_structure2_sign", "pois12": "bridges_structure1_orientation"}


# --- commands ------------------------------------------------------------------

def cmd_verify(cfg, args) -> int:
    params = _params(cfg)
    seed = cfg.get("seed", 0)
    names = [_system_name(cfg)] if "system" in cfg else [s for s in SYSTEM_NAMES
                                                        if V.available_labels(s)]
    systems = {n: make_system(n, params, seed=seed) for n in names}
    labels = {}
    for n in names:
        known = V.available_labels(n)
        if "structure" in cfg:
            if cfg["structure"].lower() not in known:
                raise ConfigError(f"structure {cfg['structure']!r} not registered for {n}")
            labels[n] = [cfg["structure"].lower()]
        else:
            labels[n] = known
    report = V.verify_report(systems, labels, cfg.get("samples", 100), seed,
                             V.Thresholds.uniform(cfg.get("tol")), args.corrupt_H)
    report.update({"schema_version": SCHEMA_VERSION, "command": "verify", "seed": seed})
    fixed = {_SIGN_ERRATA[r["structure"]] for r in report["structures"]
             if r["sign_fixed"] and r["structure"] in _SIGN_ERRATA}
    report["errata_notes"] = ([e.as_dict() for e in all_entries(seed) if e.key in fixed]
                              if fixed else [])
    _emit(_dumps(report), cfg.get("out"))
    if not report["passed"]:
        for f in report["failures"]:
            print(f"FAIL {f}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _stability_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["structure", "multiplier", "mu_squared", "casimir_slope", "hamiltonian_slope",
                "classification"])
    for r in table["rows"]:
        w.writerow([table["structure"]] + [format(float(r[k]), ".17g") for k in
                    ("multiplier", "mu_squared", "casimir_slope", "hamiltonian_slope")]
                   + [r["classification"]])
    return buf.getvalue()


def cmd_stability(cfg, args) -> int:
    name = _system_name(cfg, "example1")
    sysd = make_system(name, _params(cfg), seed=cfg.get("seed", 0))
    known = [l for l in V.available_labels(name) if l in V.DEFAULT_GRIDS]
    if not known:
        raise ConfigError(f"no stability audit registered for {name}")
    labels = [cfg["structure"].lower()] if "structure" in cfg else known
    for l in labels:
        if l not in known:
            raise ConfigError(f"structure {l!r} has no stability audit for {name}")
    tables = [V.stability_table(sysd, l, cfg.get("multipliers", V.DEFAULT_GRIDS[l]))
              for l in labels]
    report = {"schema_version": SCHEMA_VERSION, "command": "stability", "system": name,
              "tables": tables}
    if len(tables) == 2:
        report["audit"] = V.stability_audit(tables)
    text = "".join(_stability_csv(t) if i == 0 else _stability_csv(t).split("\r\n", 1)[1]
                   for i, t in enumerate(tables))
    out = cfg.get("out")
    if out is not None:
        _emit(text, out)
        _emit(_dumps(report), _sidecar(out, ".json"))
    elif args.json:
        _emit(_dumps(report), None)
    else:
        _emit(text, None)
    return EXIT_OK


def _integrator(cfg) -> IntegratorConfig:
    rtol = cfg.get("rtol", cfg.get("tol", 1e-10))
    return IntegratorConfig(rtol=rtol, atol=cfg.get("atol", min(1e-12, rtol * 1e-2)))


def cmd_simulate(cfg, args) -> int:
    name = _system_name(cfg, "euler")
    params = _params(cfg)
    sysd = make_system(name, params, seed=cfg.get("seed", 0))
    x0 = cfg.get("x0", DEFAULT_X0[name])
    if len(x0) != sysd.dim:
        raise ConfigError(f"x0 must have {sysd.dim} entries for {name}")
    span = cfg.get("t_span", DEFAULT_SPAN[name])
    n = cfg.get("n_points", DEFAULT_POINTS)
    names = list(sysd.invariants)
    out = cfg.get("out")
    pair = cfg.get("polar_pair", False)
    if pair and name != "otwo_cartesian":
        raise ConfigError("polar_pair needs system otwo_cartesian")
    if span[0] == span[1]:
        _emit(header_only_csv(sysd.dim, names), out)
        if pair:
            _emit(header_only_csv(3, names), _sidecar(out, "_polar.csv"))
        return EXIT_OK
    icfg = _integrator(cfg)
    if pair:
        traj, polar, residual = V.polar_pair(x0, span, n, icfg, params)
        summary = {"schema_version": SCHEMA_VERSION, "command": "simulate", "system": name,
                   "polar_residual": residual, "rows": len(traj.times),
                   "max_drift": traj.max_drift(), "polar_max_drift": polar.max_drift(),
                   "truncated": traj.truncated, "message": traj.message}
        if out is None:
            _emit(trajectory_csv(traj, names) + "\r\n" + trajectory_csv(polar, names), None)
        else:
            _emit(trajectory_csv(traj, names), out)
            _emit(trajectory_csv(polar, names), _sidecar(out, "_polar.csv"))
            _emit(_dumps(summary), _sidecar(out, ".json"))
    else:
        traj = V.simulate(sysd, x0, span, n, icfg)
        summary = {"schema_version": SCHEMA_VERSION, "command": "simulate", "system": name,
                   "rows": len(traj.times), "max_drift": traj.max_drift(),
                   "truncated": traj.truncated, "message": traj.message}
        _emit(trajectory_csv(traj, names), out)
        if out is not None:
            _emit(_dumps(summary), _sidecar(out, ".json"))
    if args.json and out is None:
        sys.stderr.write(_dumps(summary))
    if traj.truncated:
        print(f"truncated: {traj.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _hj_start(cfg, chart):
    """Initial full state from either x0 or (E, level, q_init, branch)."""
    if "x0" in cfg:
        return np.asarray(cfg["x0"], dtype=float)
    if not any(k in cfg for k in ("E", "level", "q_init")):
        return np.asarray(DEFAULT_X0[chart.system.name], dtype=float)
    missing = [k for k in ("E", "level", "q_init") if k not in cfg]
    if missing:
        raise ConfigError(f"hj needs x0 or E, level and q_init (missing {', '.join(missing)})")
    E, level, q = cfg["E"], cfg["level"], cfg["q_init"]
    p = chart.reduced.momentum(q, E, level, cfg.get("branch", 1))
    if not chart.pmap.domain(q, p, level):
        raise OffShellError(f"(q={q}, p={p}) is outside the {chart.pmap.name} chart")
    return chart.pmap.forward(q, p, level)


def cmd_hj(cfg, args) -> int:
    name = _system_name(cfg, "example1")
    params = _params(cfg)
    sysd = make_system(name, params, seed=cfg.get("seed", 0))
    default_structure = {"example1": "pois2", "bridges": "pois12", "euler": "euler1"}
    label = cfg.get("structure", default_structure.get(name, "")).lower()
    chart = make_chart(sysd, label)
    span = cfg.get("t_span", DEFAULT_SPAN[name])
    n = cfg.get("n_points", 1001)
    t_grid = np.linspace(span[0], span[1], n)
    state = _hj_start(cfg, chart)
    tol = cfg.get("tol", 1e-6)
    out = cfg.get("out")
    if name == "euler" and cfg.get("compare_structures", False):
        res = V.euler_cross_structure(sysd, state, t_grid)
        sol = res["solutions"][label]["solution"]
        summary = {k: v for k, v in res.items() if k not in ("solutions", "closed_form")}
        deviation = max(res["cross_structure_deviation"], res[label]["max_deviation"])
        truncated = res["euler1"]["truncated"] or res["euler2"]["truncated"]
    else:
        res = V.hj_comparison(chart, state, t_grid)
        sol = res.pop("solution")
        summary = res
        deviation, truncated = res["max_deviation"], res["truncated"]
    summary = dict(summary, schema_version=SCHEMA_VERSION, command="hj", tol=tol,
                   passed=bool(deviation < tol))
    drifts = {k: np.abs(np.array([C(x) for x in sol.states]) - C(sol.states[0]))
              for k, C in sysd.invariants.items()}
    csv_text = trajectory_csv(Trajectory(sol.times, sol.states, drifts), list(drifts))
    if out is not None:
        _emit(csv_text, out)
        _emit(_dumps(summary), _sidecar(out, ".json"))
    else:
        _emit(_dumps(summary) if args.json else csv_text, None)
    if truncated:
        return EXIT_NUMERIC
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_errata(cfg, args) -> int:
    entries = [e.as_dict() for e in all_entries(cfg.get("seed", 0))]
    report = {"schema_version": SCHEMA_VERSION, "command": "errata", "entries": entries,
              "all_confirmed": all(e["confirmed"] for e in entries)}
    _emit(_dumps(report), cfg.get("out"))
    return EXIT_OK if report["all_confirmed"] else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "stability": cmd_stability, "simulate": cmd_simulate,
            "hj": cmd_hj, "errata": cmd_errata}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poisson-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--config-json", metavar="JSON", help="inline JSON configuration")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--json", action="store_true", help="JSON on stdout")
        p.add_argument("--system")
        p.add_argument("--structure")
        if name == "verify":
            p.add_argument("--corrupt-H", dest="corrupt_H", action="store_true",
                           help="double the Hamiltonian (negative control)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "corrupt_H"):
        args.corrupt_H = False
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ContractError, OffShellError, BranchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CriticalPointError, FlightTimeError, DomainError, DegenerateDeformationError,
            SelfCheckError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
