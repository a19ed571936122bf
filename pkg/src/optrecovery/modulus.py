"""Moduli of continuity.

A modulus of continuity is a continuous, nondecreasing, subadditive function
``omega: [0, inf) -> [0, inf)`` with ``omega(0) = 0``.  It bounds the
increments of the functions being recovered,
``|x(t) - x(s)| <= omega(rho(t, s))``.

Four encodings are supported:

``power``
    ``c * t**alpha`` with ``c > 0`` and ``0 < alpha <= 1`` (Hoelder/Lipschitz).
``capped-linear``
    ``min(c * t, cap)``.
``piecewise-linear-concave``
    linear interpolation of concave knots starting at ``(0, 0)``; continued
    with the last slope beyond the final knot.
``table``
    arbitrary sampled values with linear interpolation and a flat
    continuation.  Nothing is enforced at construction, use
    :func:`validate_modulus` to check the axioms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

KINDS = ("power", "capped-linear", "piecewise-linear-concave", "table")

AXIOM_TOL = 1e-12


@dataclass(frozen=True)
class ModulusSpec:
    kind: str
    c: float = 1.0
    alpha: float = 1.0
    cap: float | None = None
    knots: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown modulus kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "power":
            if not self.c > 0:
                raise ConfigurationError(f"power modulus needs c > 0, got {self.c}")
            if not 0 < self.alpha <= 1:
                raise ConfigurationError(f"power modulus needs 0 < alpha <= 1, got {self.alpha}")
        elif self.kind == "capped-linear":
            if not self.c > 0:
                raise ConfigurationError(f"capped-linear modulus needs c > 0, got {self.c}")
            if self.cap is None or not self.cap > 0:
                raise ConfigurationError(f"capped-linear modulus needs cap > 0, got {self.cap}")
        else:
            knots = tuple((float(t), float(v)) for t, v in self.knots)
            object.__setattr__(self, "knots", knots)
            if len(knots) < 2:
                raise ConfigurationError(f"{self.kind} modulus needs at least two knots")
            ts = np.array([k[0] for k in knots])
            vs = np.array([k[1] for k in knots])
            if ts[0] != 0.0:
                raise ConfigurationError("first knot must sit at t = 0")
            if np.any(np.diff(ts) <= 0):
                raise ConfigurationError("knot abscissae must be strictly increasing")
            if np.any(vs < 0):
                raise ConfigurationError("modulus values must be nonnegative")
            if self.kind == "piecewise-linear-concave":
                if vs[0] != 0.0:
                    raise ConfigurationError("piecewise-linear-concave modulus must start at (0, 0)")
                slopes = np.diff(vs) / np.diff(ts)
                if np.any(slopes < 0):
                    raise ConfigurationError("piecewise-linear-concave knots must be nondecreasing")
                if np.any(np.diff(slopes) > AXIOM_TOL * max(1.0, slopes.max())):
                    raise ConfigurationError("piecewise-linear-concave knots must have nonincreasing slopes")

    # -- constructors -----------------------------------------------------

    @classmethod
    def power(cls, c: float = 1.0, alpha: float = 1.0) -> "ModulusSpec":
        return cls("power", c=float(c), alpha=float(alpha))

    @classmethod
    def lipschitz(cls, c: float = 1.0) -> "ModulusSpec":
        return cls("power", c=float(c), alpha=1.0)

    @classmethod
    def capped_linear(cls, c: float, cap: float) -> "ModulusSpec":
        return cls("capped-linear", c=float(c), cap=float(cap))

    @classmethod
    def piecewise(cls, knots) -> "ModulusSpec":
        return cls("piecewise-linear-concave", knots=tuple(map(tuple, knots)))

    @classmethod
    def table(cls, samples) -> "ModulusSpec":
        return cls("table", knots=tuple(map(tuple, samples)))

    @classmethod
    def from_config(cls, block: dict) -> "ModulusSpec":
        """Build from a config fragment with keys kind, c, alpha, cap, knots, samples."""
        try:
            kind = block["kind"]
        except (KeyError, TypeError):
            raise ConfigurationError("modulus block needs a 'kind' key") from None
        if kind == "power":
            return cls.power(block.get("c", 1.0), block.get("alpha", 1.0))
        if kind == "capped-linear":
            return cls.capped_linear(block.get("c", 1.0), block.get("cap"))
        if kind == "piecewise-linear-concave":
            return cls.piecewise(block.get("knots", ()))
        if kind == "table":
            return cls.table(block.get("samples", ()))
        raise ConfigurationError(f"unknown modulus kind {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "power":
            return {"kind": self.kind, "c": self.c, "alpha": self.alpha}
        if self.kind == "capped-linear":
            return {"kind": self.kind, "c": self.c, "cap": self.cap}
        key = "samples" if self.kind == "table" else "knots"
        return {"kind": self.kind, key: [list(k) for k in self.knots]}

    # -- evaluation -------------------------------------------------------

    def __call__(self, t):
        return eval_modulus(self, t)


def eval_modulus(m: ModulusSpec, t):
    """Evaluate ``omega(t)`` elementwise; ``t`` may be a scalar or an array."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise DomainError("modulus of continuity is only defined for t >= 0")
    if m.kind == "power":
        if m.alpha == 1.0:
            out = m.c * t_arr
        else:
            out = m.c * np.power(t_arr, m.alpha)
    elif m.kind == "capped-linear":
        out = np.minimum(m.c * t_arr, m.cap)
    else:
        ts = np.array([k[0] for k in m.knots])
        vs = np.array([k[1] for k in m.knots])
        out = np.interp(t_arr, ts, vs)
        if m.kind == "piecewise-linear-concave":
            slope = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
            beyond = t_arr > ts[-1]
            out = np.where(beyond, vs[-1] + slope * (t_arr - ts[-1]), out)
    if np.ndim(t) == 0:
        return float(out)
    return out


@dataclass
class AxiomViolation:
    axiom: str
    t1: float
    t2: float
    lhs: float
    rhs: float

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs


@dataclass
class ValidationReport:
    grid_size: int
    t_max: float
    violations: list[AxiomViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def witness(self, axiom: str) -> AxiomViolation | None:
        for v in self.violations:
            if v.axiom == axiom:
                return v
        return None


def validate_modulus(m: ModulusSpec, grid_size: int = 256, t_max: float = 1.0,
                     tol: float = AXIOM_TOL) -> ValidationReport:
    """Sampled check of the modulus axioms on ``linspace(0, t_max, grid_size)``.

    Subadditivity is tested on every pair ``(t_i, t_j)`` whose sum
    ``t_{i+j}`` is still on the grid, so no extrapolation is involved.  For
    each failed axiom the report keeps the pair with the largest excess.
    """
    if grid_size < 2:
        raise ConfigurationError("grid_size must be at least 2")
    if not t_max > 0:
        raise ConfigurationError("t_max must be positive")
    ts = np.linspace(0.0, t_max, grid_size)
    w = np.asarray(eval_modulus(m, ts))
    report = ValidationReport(grid_size=grid_size, t_max=t_max)

    if abs(w[0]) > tol:
        report.violations.append(AxiomViolation("zero", 0.0, 0.0, float(w[0]), 0.0))

    drops = w[:-1] - w[1:]
    k = int(np.argmax(drops))
    if drops[k] > tol:
        report.violations.append(
            AxiomViolation("monotone", float(ts[k]), float(ts[k + 1]), float(w[k]), float(w[k + 1])))

    if np.any(w < -tol):
        k = int(np.argmin(w))
        report.violations.append(AxiomViolation("nonnegative", float(ts[k]), float(ts[k]), 0.0, float(w[k])))

    i, j = np.triu_indices(grid_size)
    keep = i + j < grid_size
    i, j = i[keep], j[keep]
    excess = w[i + j] - (w[i] + w[j])
    k = int(np.argmax(excess))
    if excess[k] > tol:
        report.violations.append(AxiomViolation(
            "subadditive", float(ts[i[k]]), float(ts[j[k]]), float(w[i[k] + j[k]]), float(w[i[k]] + w[j[k]])))
    return report
