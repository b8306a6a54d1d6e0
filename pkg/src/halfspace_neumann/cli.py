"""Command-line driver: run a scenario file and write fields, traces and a JSON summary.

    halfspace-neumann run scenario.yaml --output-dir out --override grid.nx=16
    halfspace-neumann --list-tasks

Exit codes: 0 success, 1 a task failed (raised, or the solve did not converge),
2 configuration error.
"""

import argparse
import copy
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import grid as _grid
from .analysis import (check_homogeneity, check_positivity, check_radial_monotonicity,
                       check_rotational_symmetry, energy_check, fit_decay, halfball_probe,
                       testfunction_probe)
from .lorentz import lorentz_norm, x_norm
from .model import BoundaryDataFamily, ProblemSpec, critical_curves, derive_exponents
from .potentials import OperatorConfig, calibrated_constants, linear_part, neumann_potential, \
    verify_linear_bounds
from .solver import SolverConfig, picard_solve, threshold_search

SCHEMA_VERSION = 1
log = logging.getLogger("halfspace_neumann")

TASKS = {
    "solve": "Picard solve; writes the solution field and the iteration trace",
    "norms": "solution-space norm components of the solution and the data norm",
    "properties": "positivity, rotational symmetry, radial monotonicity, homogeneity",
    "decay": "fitted decay slopes of sup |u| and sup |grad u| in t",
    "energy": "energy-inequality ratios (m = 1 + 4/n or (n+3)/(n-1))",
    "probe-testfunction": "test-function growth exponent for the data family",
    "probe-halfball": "half-ball growth exponent of the solution",
    "threshold": "amplitude bracket of the convergence threshold",
    "linear-bounds": "empirical constants of the linear Neumann-operator estimates",
    "critical-curves": "table of critical exponents m_c and M_c",
}

DEFAULTS = {
    "problem": {"n": 3, "m": 3, "a": 1.0, "b": 1.0},
    "grid": {"L": 4.0, "nx": 32, "T": 2.0, "nt": 8},
    "data": {"kind": "gaussian", "amplitude": 0.25, "width": 1.0},
    "operator": {"path": "fft", "padding": 2, "extension": 1, "tail": False},
    "solver": {"tol": 1e-6, "max_iter": 100, "divergence_factor": 1e6},
    "tasks": ["solve"],
    "options": {},
    "output": {"field_format": "binary"},
}


class ConfigError(ValueError):
    pass


class TaskFailure(RuntimeError):
    """A task ran to completion but a hard check failed; ``result`` is still reported."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


# -------------------------------------------------------------------- config

def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {path + k!r}")
        if isinstance(base[k], dict) and k not in ("data", "options"):
            if not isinstance(v, dict):
                raise ConfigError(f"{path + k!r} must be a mapping")
            out[k] = _merge(base[k], v, path + k + ".")
        elif k == "data":
            if not isinstance(v, dict):
                raise ConfigError("'data' must be a mapping")
            out[k] = dict(v)
        else:
            out[k] = v
    return out


def apply_override(cfg, item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {item!r}: {exc}") from exc
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"unknown override key {key!r}")
        node = node[p]
    if parts[0] not in ("data", "options") and parts[-1] not in node:
        raise ConfigError(f"unknown override key {key!r}")
    node[parts[-1]] = value


def load_config(path, overrides=()):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"{path}: invalid YAML{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    for item in overrides:
        apply_override(cfg, item)
    return cfg


class Scenario:
    """Validated objects built from a config mapping."""

    def __init__(self, cfg):
        self.cfg = cfg
        try:
            self.spec = ProblemSpec(**cfg["problem"])
            self.grid = _grid.GridSpec(self.spec.n, **cfg["grid"])
            self.family = BoundaryDataFamily.from_dict(cfg["data"])
            op = dict(cfg["operator"])
            self.extension = int(op.pop("extension", 1))
            self.tail = bool(op.pop("tail", False))
            self.op = OperatorConfig(**op)
            self.solver = SolverConfig(**cfg["solver"])
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from exc
        tasks = cfg["tasks"]
        if isinstance(tasks, str):
            tasks = [tasks]
        bad = [t for t in tasks if t not in TASKS]
        if bad:
            raise ConfigError(f"unknown task(s) {bad}; see --list-tasks")
        self.tasks = list(tasks)
        if cfg["output"]["field_format"] not in ("binary", "csv"):
            raise ConfigError("output.field_format must be 'binary' or 'csv'")
        self.consts = calibrated_constants(self.spec.n)
        self._solution = None

    def data_field(self):
        return self.family.sample(self.grid)

    def linear(self):
        return linear_part(self.family, self.grid, self.consts, self.op, self.extension, self.tail)

    def solution(self):
        if self._solution is None:
            f = self.family.sample(self.grid.extended(self.extension))
            lin = self.linear()
            self._solution = picard_solve(f, self.spec, self.grid, self.consts, self.op,
                                          self.solver, linear=lin) + (lin,)
        return self._solution


# --------------------------------------------------------------------- tasks

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def task_solve(sc, out):
    u, tr, _ = sc.solution()
    _grid.save_field(u, out / "solution", sc.cfg["output"]["field_format"])
    (out / "trace.csv").write_text(tr.to_csv())
    res = tr.summary()
    if tr.verdict != "converged":
        raise TaskFailure(f"Picard iteration did not converge (verdict {tr.verdict})", res)
    return res


def task_norms(sc, out):
    u, _, _ = sc.solution()
    ex = derive_exponents(sc.spec)
    rep = x_norm(u, q=float(ex.q)).to_dict()
    f = sc.data_field()
    rep["data_weak_norm"] = lorentz_norm(f, float(ex.p_data))
    rep["data_exponent"] = str(ex.p_data)
    (out / "norms.json").write_text(json.dumps(_clean(rep), indent=2, sort_keys=True) + "\n")
    return rep


def _rotations(n):
    rots = []
    c, s = np.cos(np.pi / 6), np.sin(np.pi / 6)
    R = np.eye(n)
    R[:2, :2] = [[c, -s], [s, c]]
    rots.append(R)
    P = np.eye(n)[[1, 0] + list(range(2, n))]
    rots.append(P)
    F = np.eye(n)
    F[0, 0] = -1
    rots.append(F)
    return rots


def task_properties(sc, out):
    u, _, lin = sc.solution()
    reports = [check_positivity(u, sc.data_field())]
    if sc.family.is_radial:
        reports.append(check_rotational_symmetry(u, _rotations(sc.grid.n), baseline=lin))
        reports.append(check_radial_monotonicity(u, lin))
    if sc.family.kind == "pure-homogeneous":
        reports.append(check_homogeneity(u, sc.spec))
    res = {r.name: r.to_dict() for r in reports}
    (out / "properties.json").write_text(json.dumps(_clean(res), indent=2, sort_keys=True) + "\n")
    bad = [r.name for r in reports if r.passed is False]
    if bad:
        raise TaskFailure(f"property check(s) failed: {', '.join(bad)}", res)
    return res


def task_decay(sc, out):
    u, _, _ = sc.solution()
    return {f"kappa{k}": fit_decay(u, sc.spec, k).to_dict() for k in (0, 1)}


def task_energy(sc, out):
    u, _, _ = sc.solution()
    return energy_check(u, sc.family.sample(sc.grid), sc.spec).to_dict()


def task_probe_testfunction(sc, out):
    R = sc.cfg["options"].get("probe_R", np.logspace(6, 10, 9).tolist())
    rep = testfunction_probe(sc.family, sc.spec, R).to_dict()
    (out / "probe_testfunction.json").write_text(json.dumps(_clean(rep), indent=2,
                                                            sort_keys=True) + "\n")
    return rep


def task_probe_halfball(sc, out):
    size = min(sc.grid.L, sc.grid.T)
    R = sc.cfg["options"].get("halfball_R", np.linspace(0.375 * size, 0.94 * size, 10).tolist())
    # below m_c the solution norm is undefined (q <= 1), so probe the positive field N f
    linear = sc.cfg["options"].get("halfball_linear", False) or \
        not derive_exponents(sc.spec).supercritical
    field = (neumann_potential(sc.data_field(), sc.grid, sc.consts, sc.op) if linear
             else sc.solution()[0])
    rep = halfball_probe(field, sc.spec, R).to_dict()
    rep["field"] = "linear" if linear else "solution"
    (out / "probe_halfball.json").write_text(json.dumps(_clean(rep), indent=2,
                                                        sort_keys=True) + "\n")
    return rep


def task_threshold(sc, out):
    res = threshold_search(sc.family, sc.spec, sc.grid, sc.consts, sc.op, sc.solver,
                           start=sc.cfg["options"].get("threshold_start", 1.0))
    return res.to_dict()


def task_linear_bounds(sc, out):
    rows = verify_linear_bounds([sc.data_field()], sc.consts,
                                p=sc.cfg["options"].get("bounds_p"), cfg=sc.op)
    return [r.to_dict() for r in rows]


def task_critical_curves(sc, out):
    n_max = int(sc.cfg["options"].get("n_max", 10))
    rows = critical_curves(range(2, n_max + 1))
    with open(out / "critical_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "m_c", "M_c"])
        for n, mc, Mc in rows:
            w.writerow([n, str(mc), str(Mc)])
    return [{"n": n, "m_c": str(mc), "M_c": str(Mc)} for n, mc, Mc in rows]


RUNNERS = {
    "solve": task_solve, "norms": task_norms, "properties": task_properties,
    "decay": task_decay, "energy": task_energy, "probe-testfunction": task_probe_testfunction,
    "probe-halfball": task_probe_halfball, "threshold": task_threshold,
    "linear-bounds": task_linear_bounds, "critical-curves": task_critical_curves,
}


def run_scenario(sc, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": SCHEMA_VERSION, "scenario": sc.cfg,
               "constants": sc.consts.to_dict(),
               "exponents": derive_exponents(sc.spec).to_dict(), "tasks": {}}
    failed = False
    for name in sc.tasks:
        log.info("running task %s", name)
        try:
            result = {"status": "ok", "result": RUNNERS[name](sc, out)}
        except TaskFailure as exc:
            log.error("task %s failed: %s", name, exc)
            result = {"status": "failed", "error": str(exc), "result": exc.result}
            failed = True
        except Exception as exc:  # reported in the summary, turned into exit code 1
            log.error("task %s failed: %s", name, exc)
            result = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            failed = True
        summary["tasks"][name] = result
    (out / "constants.json").write_text(json.dumps(_clean(sc.consts.to_dict()), indent=2,
                                                   sort_keys=True) + "\n")
    (out / "summary.json").write_text(json.dumps(_clean(summary), indent=2, sort_keys=True)
                                      + "\n")
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="halfspace-neumann", description=__doc__.splitlines()[0])
    p.add_argument("--list-tasks", action="store_true", help="list available tasks and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config", help="YAML scenario file")
    r.add_argument("--output-dir", default="output")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-key override, repeatable (e.g. grid.nx=16)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.list_tasks:
        for name, desc in TASKS.items():
            print(f"{name:20s} {desc}")
        return 0
    if args.command != "run":
        build_parser().print_usage(sys.stderr)
        return 2
    try:
        sc = Scenario(load_config(args.config, args.override))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_scenario(sc, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
