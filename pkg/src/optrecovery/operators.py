"""Positive integral operators, operator matrices and the optimal-error engine.

An operator matrix ``A = (A_ij)`` maps columns of functions ``x_j`` (each
living on its own domain M'_j) to rows ``y_i = sum_j sigma_j A_ij x_j`` on
output spaces ``N_i``.  When every ``A_ij`` is positive and each column is
recovered by its optimal piecewise-constant method ``L_j`` with extremal
function ``phi_j``, the method ``A sigma L`` is optimal and its error is
``psi(||sum_j A_ij phi_j||_{Y_i})``, independent of the signs ``sigma``.

Only ``Y = L1(N, nu)`` and the sup-norm over the output grid are supported.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domains import Domain, QuadratureGrid, midpoints
from .errors import (ConfigurationError, InputError, NumericalError, PositivityError,
                     UnsupportedError)
from .recovery import RecoveryMethod

NORMS = ("L1", "sup")
POSITIVITY_TOL = 1e-14
_CHUNK = 2_000_000  # kernel entries evaluated per block


# ---------------------------------------------------------------------------
# psi norms


@dataclass(frozen=True)
class PsiNorm:
    kind: str = "l1"
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("l1", "l2", "linf", "weighted-l1"):
            raise ConfigurationError(f"unknown psi norm {self.kind!r}")
        if self.kind == "weighted-l1":
            w = tuple(float(x) for x in self.weights)
            if not w or any(x <= 0 for x in w):
                raise ConfigurationError("weighted-l1 needs positive weights")
            object.__setattr__(self, "weights", w)

    def __call__(self, v) -> float:
        return psi_norm(v, self)

    def describe(self) -> str:
        if self.kind == "weighted-l1":
            return "weighted-l1(" + ";".join(repr(w) for w in self.weights) + ")"
        return self.kind

    @classmethod
    def from_config(cls, block) -> "PsiNorm":
        if isinstance(block, str):
            return cls(block)
        return cls(block.get("kind", "l1"), tuple(block.get("weights", ())))


def psi_norm(v, psi: PsiNorm) -> float:
    v = np.abs(np.atleast_1d(np.asarray(v, dtype=float)))
    if psi.kind == "l1":
        return float(v.sum())
    if psi.kind == "l2":
        return float(math.sqrt(float(v @ v)))
    if psi.kind == "linf":
        return float(v.max())
    w = np.asarray(psi.weights)
    if w.shape != v.shape:
        raise InputError(f"weighted-l1 has {w.size} weights for a vector of length {v.size}")
    return float(w @ v)


# ---------------------------------------------------------------------------
# output spaces


class OutputSpace:
    """Where the rows of an operator matrix are measured."""

    dim: int

    def grid(self, resolution: int) -> QuadratureGrid:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


class FullDomain(OutputSpace):
    def __init__(self, domain: Domain):
        self.domain = domain
        self.dim = domain.dim

    def grid(self, resolution):
        return self.domain.build_grid(resolution)

    def describe(self):
        return f"domain:{self.domain.kind}"


class FixedTime(OutputSpace):
    """Hyperplane ``space x {t0}`` with d-dimensional Lebesgue measure."""

    def __init__(self, space: Domain, t0: float):
        if not t0 > 0:
            raise ConfigurationError("fixed-time slice needs t0 > 0")
        self.space = space
        self.t0 = float(t0)
        self.dim = space.dim + 1

    def grid(self, resolution):
        g = self.space.build_grid(resolution)
        nodes = np.column_stack([g.nodes, np.full(g.size, self.t0)])
        return QuadratureGrid(nodes, g.weights, g.shape)

    def describe(self):
        return f"fixed-time:t0={self.t0!r}"


class FixedPointRay(OutputSpace):
    """Ray ``{u0} x (0, t_max]`` with 1-D Lebesgue measure in time."""

    def __init__(self, u0, t_max: float):
        self.u0 = np.atleast_1d(np.asarray(u0, dtype=float))
        if not t_max > 0:
            raise ConfigurationError("fixed-point ray needs t_max > 0")
        self.t_max = float(t_max)
        self.dim = self.u0.size + 1

    def grid(self, resolution):
        ts = midpoints(0.0, self.t_max, resolution)
        nodes = np.column_stack([np.tile(self.u0, (ts.size, 1)), ts])
        return QuadratureGrid(nodes, np.full(ts.size, self.t_max / ts.size))

    def describe(self):
        return f"fixed-point-ray:u0={self.u0.tolist()}"


class SinglePoint(OutputSpace):
    """A single output point carrying unit mass."""

    def __init__(self, point):
        self.point = np.atleast_1d(np.asarray(point, dtype=float))
        self.dim = self.point.size

    def grid(self, resolution):
        return QuadratureGrid(self.point[None, :], np.ones(1))

    def describe(self):
        return f"point:{self.point.tolist()}"


# ---------------------------------------------------------------------------
# operators


class Identity:
    """Identity summand; kept symbolic to avoid delta kernels."""

    def __repr__(self):
        return "Identity()"


@dataclass
class KernelOp:
    """Integral operator ``(T x)(s) = int K(s, t) x(t) dmu(t)``.

    ``kernel(s, t)`` receives output points ``s`` of shape ``(P, dim_out)`` and
    input points ``t`` of shape ``(Q, dim_in)`` and returns a ``(P, Q)`` array.
    ``output_integral(t)``, when supplied, returns ``int_N K(y, t) dnu(y)`` for
    input points of shape ``(Q, dim_in)``.
    """

    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]
    output_integral: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "kernel"

    def matrix(self, s, t) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, dtype=float))
        t = np.atleast_2d(np.asarray(t, dtype=float))
        k = np.asarray(self.kernel(s, t), dtype=float)
        if k.shape != (s.shape[0], t.shape[0]):
            raise InputError(f"kernel {self.name} returned shape {k.shape}, "
                             f"expected {(s.shape[0], t.shape[0])}")
        if not np.all(np.isfinite(k)):
            p, q = np.argwhere(~np.isfinite(k))[0]
            raise NumericalError(f"kernel {self.name} is not finite at s={s[p].tolist()}, t={t[q].tolist()}")
        return k

    def check_positive(self, k: np.ndarray, s, t):
        if k.size and k.min() < -POSITIVITY_TOL:
            p, q = np.unravel_index(np.argmin(k), k.shape)
            raise PositivityError(
                f"kernel {self.name} is negative ({k[p, q]:.3e}) at s={np.atleast_2d(s)[p].tolist()}, "
                f"t={np.atleast_2d(t)[q].tolist()}; the optimality result needs a positive operator")

    def apply(self, grid: QuadratureGrid, x, s) -> np.ndarray:
        """Quadrature value of ``int K(s, t) x(t) dmu(t)`` at each output point."""
        x = np.asarray(x, dtype=float)
        if x.shape != (grid.size,):
            raise InputError(f"expected {grid.size} samples, got shape {x.shape}")
        s = np.atleast_2d(np.asarray(s, dtype=float))
        wx = grid.weights * x
        out = np.empty(s.shape[0])
        for lo, hi in _blocks(s.shape[0], grid.size):
            out[lo:hi] = self.matrix(s[lo:hi], grid.nodes) @ wx
        return out

    def quadrature_output_integral(self, out_grid: QuadratureGrid, t, check_positive=False) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        out = np.zeros(t.shape[0])
        for lo, hi in _blocks(out_grid.size, t.shape[0]):
            k = self.matrix(out_grid.nodes[lo:hi], t)
            if check_positive:
                self.check_positive(k, out_grid.nodes[lo:hi], t)
            out += out_grid.weights[lo:hi] @ k
        return out

    def column_integral(self, out_grid: QuadratureGrid, t, check_positive=False) -> np.ndarray:
        """``int_N K(y, t) dnu(y)``: analytic when available, else by quadrature."""
        if self.output_integral is not None:
            if check_positive:
                m = min(out_grid.size, 64)
                idx = np.linspace(0, out_grid.size - 1, m).astype(int)
                k = self.matrix(out_grid.nodes[idx], t)
                self.check_positive(k, out_grid.nodes[idx], t)
            return np.asarray(self.output_integral(np.atleast_2d(t)), dtype=float)
        return self.quadrature_output_integral(out_grid, t, check_positive)

    def check_output_integral(self, out_grid: QuadratureGrid, t, rtol=1e-6) -> float:
        """Largest relative gap between the analytic and quadrature column integrals."""
        if self.output_integral is None:
            raise ConfigurationError(f"kernel {self.name} has no analytic output integral")
        exact = np.asarray(self.output_integral(np.atleast_2d(t)), dtype=float)
        quad = self.quadrature_output_integral(out_grid, t)
        gap = np.max(np.abs(exact - quad) / np.maximum(np.abs(exact), 1e-300))
        return float(gap)


def _blocks(rows: int, cols: int):
    step = max(1, _CHUNK // max(cols, 1))
    for lo in range(0, rows, step):
        yield lo, min(rows, lo + step)


class OpSum:
    """Sum of operator terms (e.g. identity plus an integral operator)."""

    def __init__(self, *terms):
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, OpSum) else [t])
        if not flat:
            raise ConfigurationError("empty operator sum")
        self.terms = tuple(flat)

    def __repr__(self):
        return " + ".join(map(repr, self.terms))


def _terms(entry):
    if entry is None:
        return ()
    if isinstance(entry, OpSum):
        return entry.terms
    if isinstance(entry, (Identity, KernelOp)):
        return (entry,)
    raise ConfigurationError(f"unsupported operator entry {entry!r}")


class OperatorMatrix:
    """An ``l x m`` matrix of positive operators with column signs.

    ``entries[i][j]`` is ``None`` (zero operator), :class:`Identity`,
    :class:`KernelOp` or an :class:`OpSum` of those.  ``outputs[i]`` is the
    output space of row ``i``.
    """

    def __init__(self, entries, outputs: Sequence[OutputSpace], signs=None):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise ConfigurationError("operator matrix must be at least 1 x 1")
        m = len(rows[0])
        if any(len(r) != m for r in rows):
            raise ConfigurationError("ragged operator matrix")
        for r in rows:
            for e in r:
                _terms(e)
        if len(outputs) != len(rows):
            raise ConfigurationError(f"{len(rows)} rows but {len(outputs)} output spaces")
        self.entries = rows
        self.outputs = list(outputs)
        self.signs = self._check_signs(signs, m)

    @staticmethod
    def _check_signs(signs, m):
        if signs is None:
            return (1,) * m
        signs = tuple(int(s) for s in signs)
        if len(signs) != m or any(s not in (-1, 1) for s in signs):
            raise ConfigurationError(f"signs must be {m} values in {{-1, +1}}")
        return signs

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def with_signs(self, signs) -> "OperatorMatrix":
        return OperatorMatrix(self.entries, self.outputs, signs)

    @classmethod
    def single(cls, entry, output: OutputSpace) -> "OperatorMatrix":
        return cls([[entry]], [output])


# ---------------------------------------------------------------------------
# error reports


@dataclass
class ErrorReport:
    value: float
    method: str
    norm: str
    psi: str
    resolution: int | None = None
    est_quad_err: float = 0.0
    problem: str = ""
    n: str = ""
    e_summary: str = ""
    extras: dict = field(default_factory=dict)

    HEADER = ("problem", "n", "e_summary", "Y", "psi", "value", "est_quad_err")

    def __post_init__(self):
        if not self.value >= 0:
            raise NumericalError(f"optimal error must be nonnegative, got {self.value}")

    def row(self):
        return (self.problem, self.n, self.e_summary, self.norm, self.psi,
                repr(float(self.value)), repr(float(self.est_quad_err)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        w.writerow(self.row())
        return buf.getvalue()


def describe_methods(methods: Sequence[RecoveryMethod]):
    n = ";".join(str(m.n) for m in methods)
    e = ";".join(f"max={float(np.max(m.errors))!r}" for m in methods)
    return n, e


# ---------------------------------------------------------------------------
# engine


def _check_norm(norm):
    if norm not in NORMS:
        raise UnsupportedError(f"output norm must be one of {NORMS}, got {norm!r}")


def _same_nodes(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and np.allclose(a, b, rtol=0, atol=1e-12)


def apply_entry(entry, grid: QuadratureGrid, x, out_grid: QuadratureGrid,
                check_positive=False) -> np.ndarray:
    """Apply one matrix entry to samples ``x`` on ``grid``; values on ``out_grid``."""
    y = np.zeros(out_grid.size)
    for term in _terms(entry):
        if isinstance(term, Identity):
            if not _same_nodes(grid.nodes, out_grid.nodes):
                raise InputError("identity entries need the output grid to coincide with the input grid")
            y += x
        else:
            if check_positive:
                m = min(out_grid.size, 64)
                idx = np.linspace(0, out_grid.size - 1, m).astype(int)
                term.check_positive(term.matrix(out_grid.nodes[idx], grid.nodes),
                                    out_grid.nodes[idx], grid.nodes)
            y += term.apply(grid, x, out_grid.nodes)
    return y


def _input_grids(methods, resolution):
    return [m.domain.build_grid(resolution) for m in methods]


def _output_grids(mat, resolution):
    return [out.grid(resolution) for out in mat.outputs]


def _check_columns(mat, methods):
    if len(methods) != mat.shape[1]:
        raise InputError(f"operator matrix has {mat.shape[1]} columns but {len(methods)} methods were given")


def apply_matrix(mat: OperatorMatrix, grids, columns, out_grids, signs=None,
                 check_positive=False) -> list[np.ndarray]:
    """Rows ``sum_j sign_j A_ij x_j`` for sampled columns, on the output grids."""
    signs = mat.signs if signs is None else signs
    rows = []
    for i, out_grid in enumerate(out_grids):
        y = np.zeros(out_grid.size)
        for j, entry in enumerate(mat.entries[i]):
            if entry is None:
                continue
            y += signs[j] * apply_entry(entry, grids[j], columns[j], out_grid, check_positive)
        rows.append(y)
    return rows


def rows_norm(rows, out_grids, norm: str, psi: PsiNorm) -> float:
    _check_norm(norm)
    if norm == "L1":
        v = [g.integrate(np.abs(y)) for y, g in zip(rows, out_grids)]
    else:
        v = [float(np.max(np.abs(y))) for y in rows]
    return psi_norm(v, psi)


def recovered_solution(mat: OperatorMatrix, methods: Sequence[RecoveryMethod], data, s,
                       resolution: int = 400) -> np.ndarray:
    """Evaluate the optimal method ``A sigma L z`` at output points ``s``.

    Identity summands are evaluated exactly (``L z`` is known everywhere);
    integral summands use the quadrature grid of each column's domain at the
    given resolution.  Returns an array of shape ``(l, P)``.
    """
    _check_columns(mat, methods)
    if len(data) != len(methods):
        raise InputError(f"{len(methods)} methods but {len(data)} data vectors")
    s = np.atleast_2d(np.asarray(s, dtype=float))
    l, m = mat.shape
    out = np.zeros((l, s.shape[0]))
    grids = {}
    for j, (method, z) in enumerate(zip(methods, data)):
        lz_grid = None
        for i in range(l):
            for term in _terms(mat.entries[i][j]):
                if isinstance(term, Identity):
                    val = np.atleast_1d(method.recover(z, s))
                else:
                    if lz_grid is None:
                        grids[j] = method.domain.build_grid(resolution)
                        lz_grid = method.recovered_values(z, grids[j])
                    val = term.apply(grids[j], lz_grid, s)
                out[i] += mat.signs[j] * val
    return out


def _fubini_rows(mat, methods, grids, out_grids, check_positive=True):
    l, m = mat.shape
    v = np.zeros(l)
    for j, (method, grid) in enumerate(zip(methods, grids)):
        ph = np.atleast_1d(method.phi(grid.nodes))
        for i in range(l):
            for term in _terms(mat.entries[i][j]):
                if isinstance(term, Identity):
                    v[i] += grid.integrate(ph)
                else:
                    c = term.column_integral(out_grids[i], grid.nodes, check_positive)
                    if np.any(c < -POSITIVITY_TOL):
                        raise PositivityError(f"kernel {term.name} has a negative column integral")
                    v[i] += grid.integrate(ph * c)
    return v


def _sup_rows(mat, methods, grids, out_grids, check_positive=True):
    l, m = mat.shape
    v = np.zeros(l)
    for i in range(l):
        y = np.zeros(out_grids[i].size)
        for j, (method, grid) in enumerate(zip(methods, grids)):
            for term in _terms(mat.entries[i][j]):
                if isinstance(term, Identity):
                    y += np.atleast_1d(method.phi(out_grids[i].nodes))
                else:
                    ph = np.atleast_1d(method.phi(grid.nodes))
                    if check_positive:
                        apply_entry(term, grid, ph, out_grids[i], check_positive=True)
                    y += term.apply(grid, ph, out_grids[i].nodes)
        v[i] = float(np.max(np.abs(y)))
    return v


def _error_value(mat, methods, norm, psi, resolution, out_resolution):
    grids = _input_grids(methods, resolution)
    out_grids = _output_grids(mat, out_resolution or resolution)
    if norm == "L1":
        v = _fubini_rows(mat, methods, grids, out_grids)
    else:
        v = _sup_rows(mat, methods, grids, out_grids)
    return psi_norm(v, psi)


def optimal_error(mat: OperatorMatrix, methods: Sequence[RecoveryMethod], norm: str = "L1",
                  psi: PsiNorm | None = None, resolution: int = 400, out_resolution: int | None = None,
                  estimate: bool = True, problem: str = "") -> ErrorReport:
    """Optimal recovery error ``psi(||sum_j A_ij phi_j||_{Y_i})``.

    For ``norm="L1"`` the row norms are computed in iterated form,
    ``int phi_j(t) int_N K_ij(y, t) dnu(y) dmu(t)``, using analytic column
    integrals where a kernel provides them.  The estimated quadrature error
    is the change in value against a grid of half the resolution.  The signs
    of ``mat`` do not enter.
    """
    _check_norm(norm)
    _check_columns(mat, methods)
    psi = psi or PsiNorm("l1")
    value = _error_value(mat, methods, norm, psi, resolution, out_resolution)
    est = 0.0
    if estimate:
        coarse = max(2, resolution // 2)
        coarse_out = max(2, (out_resolution or resolution) // 2)
        est = abs(value - _error_value(mat, methods, norm, psi, coarse, coarse_out))
    n, e = describe_methods(methods)
    return ErrorReport(value=value, method="A*sigma*L", norm=norm, psi=psi.describe(),
                       resolution=resolution, est_quad_err=est, problem=problem, n=n, e_summary=e)


def direct_error(mat: OperatorMatrix, methods: Sequence[RecoveryMethod], norm: str = "L1",
                 psi: PsiNorm | None = None, resolution: int = 400,
                 out_resolution: int | None = None) -> float:
    """``||A phi||`` by applying the operators on the output grid, without Fubini."""
    _check_columns(mat, methods)
    psi = psi or PsiNorm("l1")
    grids = _input_grids(methods, resolution)
    out_grids = _output_grids(mat, out_resolution or resolution)
    cols = [np.atleast_1d(m.phi(g.nodes)) for m, g in zip(methods, grids)]
    rows = apply_matrix(mat, grids, cols, out_grids, signs=(1,) * mat.shape[1], check_positive=True)
    return rows_norm(rows, out_grids, norm, psi)


def recovery_residual(mat: OperatorMatrix, methods, grids, out_grids, x_columns, data,
                      norm="L1", psi=None, method=None) -> float:
    """``||A sigma x - Phi z||`` for sampled columns ``x_columns`` and data ``data``.

    ``method(j, z)`` returns the recovered column on ``grids[j]``; by default
    the optimal piecewise-constant method is used.
    """
    psi = psi or PsiNorm("l1")
    diffs = []
    for j, (m, g, x, z) in enumerate(zip(methods, grids, x_columns, data)):
        rec = m.recovered_values(z, g) if method is None else method(j, z)
        diffs.append(np.asarray(x, dtype=float) - rec)
    rows = apply_matrix(mat, grids, diffs, out_grids)
    return rows_norm(rows, out_grids, norm, psi)


def identity_problem(domain: Domain) -> OperatorMatrix:
    return OperatorMatrix.single(Identity(), FullDomain(domain))
