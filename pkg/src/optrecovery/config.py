"""JSON problem configuration and the per-kind problem builders used by the CLI.

A configuration file fully describes one run::

    {
      "problem": "identity",
      "domain": {"kind": "interval", "bounds": [0, 1]},
      "classes": [
        {"modulus": {"kind": "power", "c": 1, "alpha": 1},
         "points": [0.25, 0.75], "errors": 0, "variant": "plain",
         "measurements": "z.csv"}
      ],
      "norm": {"Y": "L1", "psi": "l1"},
      "resolution": 400,
      "seed": 0,
      "trials": 200,
      "params": {}
    }

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domains import Box, Circle, Disk, Domain, Interval, SpacetimeBox, domain_from_config
from .errors import ConfigurationError, UnsupportedError
from .modulus import ModulusSpec
from .operators import (ErrorReport, FixedTime, OperatorMatrix, PsiNorm, SinglePoint, identity_problem,
                        optimal_error, recovered_solution)
from .recovery import InfoSpec, RecoveryMethod

PROBLEMS = ("identity", "volterra", "fredholm", "ode", "poisson-disk", "heat", "wave")

_SAFE_NAMES = {name: getattr(np, name) for name in
               ("exp", "log", "sin", "cos", "tan", "sqrt", "abs", "minimum", "maximum", "where", "pi")}


@dataclass
class ClassBlock:
    method: RecoveryMethod
    data: np.ndarray | None = None


@dataclass
class InitialBlock:
    """Initial value of an ODE system: known up to per-component errors."""

    errors: np.ndarray
    data: np.ndarray | None = None


@dataclass
class ProblemConfig:
    problem: str
    classes: list
    norm: str = "L1"
    psi: PsiNorm = field(default_factory=PsiNorm)
    resolution: int = 400
    seed: int = 0
    trials: int = 200
    params: dict = field(default_factory=dict)
    domain: Domain | None = None

    @property
    def methods(self) -> list[RecoveryMethod]:
        return [c.method for c in self.classes if isinstance(c, ClassBlock)]

    def data(self) -> list[np.ndarray]:
        out = []
        for k, c in enumerate(self.classes):
            if c.data is None:
                raise ConfigurationError(f"class {k} has no measurements (give 'data' or 'measurements')")
            out.append(c.data)
        return out


# ---------------------------------------------------------------------------
# parsing


def read_measurements(path: Path, n: int) -> np.ndarray:
    """Read a ``index,z`` CSV (0-based indices in sample-point order)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["index", "z"]:
            raise ConfigurationError(f"{path}: measurement CSV must have header 'index,z'")
        rows = list(reader)
    z = np.full(n, np.nan)
    for row in rows:
        try:
            i = int(row["index"])
            val = float(row["z"])
        except (TypeError, ValueError):
            raise ConfigurationError(f"{path}: malformed row {row}") from None
        if not 0 <= i < n or not math.isnan(z[i]):
            raise ConfigurationError(f"{path}: index {i} out of range or repeated")
        z[i] = val
    if np.any(np.isnan(z)):
        raise ConfigurationError(f"{path}: expected {n} measurements, got {len(rows)}")
    return z


def _points(raw, dim):
    pts = np.asarray(raw, dtype=float)
    if pts.ndim == 1 and dim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ConfigurationError(f"points must be a list of {dim}-coordinate points")
    return pts


def _data(block, n, base):
    if "data" in block and "measurements" in block:
        raise ConfigurationError("give either 'data' or 'measurements', not both")
    if "data" in block:
        z = np.asarray(block["data"], dtype=float).ravel()
        if z.shape != (n,):
            raise ConfigurationError(f"'data' must have {n} entries")
        return z
    if "measurements" in block:
        return read_measurements(base / block["measurements"], n)
    return None


def _class_block(block, default_domain, base):
    if not isinstance(block, dict):
        raise ConfigurationError("each class must be an object")
    if "modulus" not in block or "points" not in block:
        raise ConfigurationError("class blocks need 'modulus' and 'points'")
    dom = domain_from_config(block["domain"]) if "domain" in block else default_domain
    if dom is None:
        raise ConfigurationError("class has no domain and no top-level domain is given")
    pts = _points(block["points"], dom.dim)
    info = InfoSpec(pts, block.get("errors", 0.0))
    method = RecoveryMethod(ModulusSpec.from_config(block["modulus"]), info, dom, block.get("variant", "plain"))
    return ClassBlock(method, _data(block, info.n, base))


def _initial_block(block, base):
    errors = np.asarray(block.get("errors", 0.0), dtype=float).ravel()
    data = None
    if "data" in block:
        data = np.asarray(block["data"], dtype=float).ravel()
    elif "measurements" in block:
        data = read_measurements(base / block["measurements"], errors.size)
    return InitialBlock(errors, data)


def expected_arity(problem: str, params: dict, classes_raw: list) -> int:
    if problem in ("identity", "volterra", "fredholm"):
        return 1
    if problem in ("poisson-disk", "heat"):
        return 2
    if problem == "wave":
        d = params.get("d")
        if d is None:
            raise ConfigurationError("wave problems need params.d")
        if d not in (1, 2, 3):
            raise UnsupportedError(f"wave equation is implemented for d in (1, 2, 3), got {d}")
        return 3 if d == 1 else 2
    if problem == "ode":
        S = params.get("S")
        if S is None:
            raise ConfigurationError("ode problems need params.S")
        return len(S) + 1
    raise ConfigurationError(f"unknown problem kind {problem!r}; expected one of {PROBLEMS}")


def parse_config(raw: dict, base: Path = Path(".")) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a JSON object")
    problem = raw.get("problem")
    if problem not in PROBLEMS:
        raise ConfigurationError(f"'problem' must be one of {PROBLEMS}, got {problem!r}")
    params = raw.get("params", {}) or {}
    classes_raw = raw.get("classes")
    if not isinstance(classes_raw, list) or not classes_raw:
        raise ConfigurationError("'classes' must be a non-empty list")
    arity = expected_arity(problem, params, classes_raw)
    if len(classes_raw) != arity:
        raise ConfigurationError(f"problem {problem!r} needs {arity} class blocks, got {len(classes_raw)}")
    domain = domain_from_config(raw["domain"]) if "domain" in raw else None
    classes = []
    for k, block in enumerate(classes_raw):
        if problem == "ode" and k == 0:
            classes.append(_initial_block(block, base))
            continue
        dom = domain
        if problem == "poisson-disk" and k == 1 and isinstance(domain, Disk) and "domain" not in block:
            dom = domain.boundary()
        classes.append(_class_block(block, dom, base))
    norm_block = raw.get("norm", {}) or {}
    norm = norm_block.get("Y", "L1")
    if norm not in ("L1", "sup"):
        raise ConfigurationError(f"norm.Y must be 'L1' or 'sup', got {norm!r}")
    try:
        resolution = int(raw.get("resolution", 400))
        seed = int(raw.get("seed", 0))
        trials = int(raw.get("trials", 200))
    except (TypeError, ValueError):
        raise ConfigurationError("resolution, seed and trials must be integers") from None
    return ProblemConfig(problem, classes, norm, PsiNorm.from_config(norm_block.get("psi", "l1")),
                         resolution, seed, trials, params, domain)


def load_config(path) -> ProblemConfig:
    path = Path(path)
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path.parent)


# ---------------------------------------------------------------------------
# problem builders


def kernel_from_config(spec):
    """Kernel ``k(t, s)`` from a number or ``{"kind": "constant"|"expression", ...}``."""
    if isinstance(spec, (int, float)):
        return float(spec)
    if not isinstance(spec, dict):
        raise ConfigurationError("params.kernel must be a number or an object")
    kind = spec.get("kind")
    if kind == "constant":
        return float(spec.get("value", 0.0))
    if kind == "expression":
        expr = spec.get("expr")
        if not isinstance(expr, str):
            raise ConfigurationError("expression kernels need an 'expr' string in t and s")
        try:
            code = compile(expr, "<kernel>", "eval")
        except SyntaxError as exc:
            raise ConfigurationError(f"bad kernel expression: {exc}") from None
        allowed = set(_SAFE_NAMES) | {"t", "s"}
        if not set(code.co_names) <= allowed:
            raise ConfigurationError(f"kernel expression may only use {sorted(allowed)}")
        return lambda t, s: eval(code, {"__builtins__": {}}, {**_SAFE_NAMES, "t": t, "s": s})
    raise ConfigurationError(f"unknown kernel kind {kind!r}")


def _interval(cfg: ProblemConfig) -> Interval:
    dom = cfg.domain
    if not isinstance(dom, Interval):
        raise ConfigurationError(f"{cfg.problem} problems need an interval domain")
    return dom


def resolvent_table(cfg: ProblemConfig):
    from .equations import fredholm_resolvent, volterra_resolvent

    dom = _interval(cfg)
    k = kernel_from_config(cfg.params.get("kernel", 0.0))
    n = int(cfg.params.get("table_intervals", 200))
    build = volterra_resolvent if cfg.problem == "volterra" else fredholm_resolvent
    return build(k, dom.a, dom.b, n=n)


def _heat_output(cfg: ProblemConfig, d: int):
    from .equations.heat import output_space_box

    case = cfg.params.get("case", "fixed-time")
    if case == "fixed-time":
        t0 = float(cfg.params["t0"])
        boxes = [c.method.domain for c in cfg.classes]
        return FixedTime(output_space_box(d, boxes, t0), t0)
    if case == "single-point":
        return SinglePoint(np.append(np.asarray(cfg.params["u0"], dtype=float), float(cfg.params["t0"])))
    raise UnsupportedError(f"heat case {case!r} has no discretised operator (its output ray is unbounded)")


def _heat_dim(cfg: ProblemConfig) -> int:
    m1, m2 = cfg.methods
    if not isinstance(m1.domain, SpacetimeBox) or not isinstance(m2.domain, Box):
        raise ConfigurationError("heat classes live on a spacetime-box and a box")
    return m2.domain.dim


def operator_matrix(cfg: ProblemConfig) -> OperatorMatrix:
    """The discretisable operator matrix of a problem (used by ``verify``)."""
    from .equations import heat_operator, poisson_operator, resolvent_operator

    if cfg.problem == "identity":
        return identity_problem(cfg.methods[0].domain)
    if cfg.problem in ("volterra", "fredholm"):
        return resolvent_operator(resolvent_table(cfg))
    if cfg.problem == "poisson-disk":
        return poisson_operator(_disk(cfg))
    if cfg.problem == "heat":
        d = _heat_dim(cfg)
        return heat_operator(d, _heat_output(cfg, d))
    raise UnsupportedError(f"{cfg.problem} problems have no operator-matrix form for verification")


def _disk(cfg: ProblemConfig) -> Disk:
    dom = cfg.methods[0].domain
    if not isinstance(dom, Disk) or not isinstance(cfg.methods[1].domain, Circle):
        raise ConfigurationError("poisson-disk needs a disk class and a circle class")
    return dom


def compute_error(cfg: ProblemConfig) -> ErrorReport:
    """Optimal-error report for the configured problem."""
    from .equations import heat_optimal_error, ode_optimal_error, poisson_disk_error, wave_fixed_time_error

    p, res = cfg.problem, cfg.resolution
    if p in ("identity", "volterra", "fredholm", "poisson-disk") or (p == "heat" and cfg.norm == "sup"):
        rep = optimal_error(operator_matrix(cfg), cfg.methods, cfg.norm, cfg.psi, res, problem=p)
        if p == "poisson-disk" and cfg.norm == "L1":
            shortcut = poisson_disk_error(_disk(cfg), *cfg.methods, resolution=min(res, 64), cross_check=False)
            rep.extras["shortcut_form"] = shortcut.value
        return rep
    if p == "ode":
        dom = _interval(cfg)
        return ode_optimal_error(cfg.params["S"], cfg.classes[0].errors, cfg.methods, dom.a, dom.b,
                                 cfg.norm, cfg.psi, res)
    if cfg.norm != "L1":
        raise UnsupportedError(f"{p} errors are implemented for Y = L1 only")
    if p == "heat":
        d = _heat_dim(cfg)
        m1, m2 = cfg.methods
        prm = cfg.params
        return heat_optimal_error(prm.get("case", "fixed-time"), d, m1, m2, t0=prm.get("t0"),
                                  u0=prm.get("u0"), resolution=min(res, 200 if d == 1 else 60))
    return wave_fixed_time_error(int(cfg.params["d"]), float(cfg.params["t0"]), cfg.methods, res)


def solve(cfg: ProblemConfig):
    """Recovered solution of the configured problem as ``(header, rows)`` plus its error report."""
    from .equations import (heat_solution, ode_recovery, poisson_disk_solution, solve_second_kind,
                            wave_solution_and_error)

    p, res = cfg.problem, cfg.resolution
    data = cfg.data()
    if p == "identity":
        m = cfg.methods[0]
        grid = m.domain.build_grid(res)
        values = recovered_solution(identity_problem(m.domain), [m], data, grid.nodes)[0]
        return _table(grid.nodes, values), compute_error(cfg)
    if p in ("volterra", "fredholm"):
        m = cfg.methods[0]
        table = resolvent_table(cfg)
        nodes = table.nodes
        lz = lambda t: np.atleast_1d(m.recover(data[0], np.asarray(t, dtype=float)[:, None]))
        values = solve_second_kind(p, table, lz, nodes)
        return _table(nodes[:, None], values), compute_error(cfg)
    if p == "ode":
        dom = _interval(cfg)
        init = cfg.classes[0]
        ts = np.asarray(cfg.params.get("t_out", np.linspace(dom.a, dom.b, 11)), dtype=float)
        out = ode_recovery(cfg.params["S"], init.data, init.errors, cfg.methods, data[1:], ts, dom.a, dom.b,
                           cfg.norm, cfg.psi, res)
        d = out.values.shape[1]
        header = ["x0"] + [f"value{i}" for i in range(d)]
        return (header, [[t, *row] for t, row in zip(ts, out.values)]), out.report
    if p == "poisson-disk":
        disk = _disk(cfg)
        pts = disk.build_grid(min(res, 24)).nodes
        values = poisson_disk_solution(disk, cfg.methods, data, pts, min(res, 32))
        return _table(pts, values), compute_error(cfg)
    if p == "heat":
        d = _heat_dim(cfg)
        t0 = float(cfg.params["t0"])
        space = cfg.methods[1].domain
        nodes = space.build_grid(min(res, 41 if d == 1 else 9)).nodes
        pts = np.column_stack([nodes, np.full(nodes.shape[0], t0)])
        values = heat_solution(d, cfg.methods, data, pts, min(res, 40 if d == 1 else 10))
        return _table(pts, values), compute_error(cfg)
    d = int(cfg.params["d"])
    t0 = float(cfg.params["t0"])
    dom = cfg.methods[-1].domain
    box = Box(np.asarray(dom.lo) - t0, np.asarray(dom.hi) + t0) if isinstance(dom, Box) else dom
    nodes = box.build_grid(min(res, 41 if d == 1 else 7)).nodes
    values, rep = wave_solution_and_error(d, cfg.methods, data, nodes, t0, nq=32 if d == 1 else 16,
                                          resolution=res)
    pts = np.column_stack([nodes, np.full(nodes.shape[0], t0)])
    return _table(pts, values), rep


def _table(points, values):
    points = np.atleast_2d(points)
    header = [f"x{i}" for i in range(points.shape[1])] + ["value"]
    return header, [[*p, v] for p, v in zip(points, np.atleast_1d(values))]
