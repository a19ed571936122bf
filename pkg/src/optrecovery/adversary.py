"""Feasible envelopes, random feasible functions and empirical optimality checks.

All randomness of the package lives here.  Every trial draws from its own
generator seeded by ``(seed, trial)`` so runs are reproducible and trials
can be evaluated independently.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import griddata

from .domains import QuadratureGrid
from .errors import InconsistentDataError, InputError
from .operators import (OperatorMatrix, PsiNorm, apply_matrix, optimal_error, recovery_residual,
                        rows_norm)
from .recovery import RecoveryMethod

CONSISTENCY_TOL = 1e-12
SHARPNESS_RTOL = 1e-9


# ---------------------------------------------------------------------------
# constraints and McShane-type extensions


@dataclass
class _Constraints:
    """Interval constraints ``lo_k <= x(p_k) <= hi_k`` at anchor points."""

    method: RecoveryMethod
    points: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def omega_dist(self, t):
        dom = self.method.domain
        return np.asarray(self.method.modulus(dom.distance(np.atleast_2d(t)[:, None, :], self.points)))

    def boundary_term(self, t):
        if self.method.variant != "tilde":
            return np.full(np.atleast_2d(t).shape[0], np.inf)
        return self.method._boundary_term(np.atleast_2d(t))

    def upper(self, t):
        u = (self.hi + self.omega_dist(t)).min(axis=-1, initial=np.inf)
        return np.minimum(u, self.boundary_term(t))

    def lower(self, t):
        lw = (self.lo - self.omega_dist(t)).max(axis=-1, initial=-np.inf)
        return np.maximum(lw, -self.boundary_term(t))

    def add(self, point, value):
        self.points = np.vstack([self.points, point])
        self.lo = np.append(self.lo, value)
        self.hi = np.append(self.hi, value)

    def fix(self, k, value):
        self.lo[k] = self.hi[k] = value


def _data_constraints(method: RecoveryMethod, z) -> _Constraints:
    z = np.asarray(z, dtype=float).ravel()
    if z.shape != (method.n,):
        raise InputError(f"expected {method.n} data values, got {z.shape[0]}")
    e = method.errors
    return _Constraints(method, method.points.copy(), z - e, z + e)


@dataclass
class FeasibleEnvelope:
    """Pointwise bounds of all class members consistent with the data."""

    grid: QuadratureGrid
    upper: np.ndarray
    lower: np.ndarray
    z: np.ndarray

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.upper + self.lower)


def envelope(method: RecoveryMethod, z, grid: QuadratureGrid) -> FeasibleEnvelope:
    """Brute-force envelope ``min_j(z_j + e_j + omega(rho(t, q_j)))`` / ``max_j(z_j - e_j - ...)``.

    Raises :class:`InconsistentDataError` when the data admit no feasible
    function; consistency is checked on the grid and at the sample points.
    """
    con = _data_constraints(method, z)
    up = con.upper(grid.nodes)
    lw = con.lower(grid.nodes)
    uq = con.upper(method.points)
    lq = con.lower(method.points)
    gap = max(float(np.max(lw - up)), float(np.max(lq - uq)))
    if gap > CONSISTENCY_TOL:
        raise InconsistentDataError(
            f"data admit no feasible function: lower envelope exceeds upper by {gap:.3e}")
    return FeasibleEnvelope(grid, up, lw, np.asarray(z, dtype=float).ravel())


def _tightened(con: _Constraints, k: int):
    """Attainable value range at anchor ``k`` under all other constraints."""
    p = con.points[k:k + 1]
    return max(con.lo[k], float(con.lower(p)[0])), min(con.hi[k], float(con.upper(p)[0]))


def sample_feasible(method: RecoveryMethod, z, grid: QuadratureGrid, seed=0,
                    extra_points: int | None = None, rng=None) -> np.ndarray:
    """A random class member ``x`` with ``|x(q_j) - z_j| <= e_j``, sampled on ``grid``.

    Construction: the sample values are fixed one by one (random order) at
    random attainable values; a few random grid nodes receive random
    attainable values too; the result is a random convex combination of the
    upper and lower McShane extensions of the augmented constraints, so it
    interpolates every fixed value and stays in the class.  About one draw in
    five is pushed to an extension itself (lambda in {0, 1}).
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    con = _data_constraints(method, z)
    envelope(method, z, QuadratureGrid(method.points, np.ones(method.n)))
    for k in rng.permutation(method.n):
        lo, hi = _tightened(con, k)
        if lo > hi + CONSISTENCY_TOL:
            raise InconsistentDataError("data admit no feasible function")
        con.fix(k, lo + (max(hi, lo) - lo) * rng.random())
    n_extra = int(rng.integers(0, 8)) if extra_points is None else extra_points
    for node in rng.choice(grid.size, size=min(n_extra, grid.size), replace=False):
        p = grid.nodes[node:node + 1]
        lo, hi = float(con.lower(p)[0]), float(con.upper(p)[0])
        con.add(p, lo + max(hi - lo, 0.0) * rng.random())
    u = rng.random()
    lam = 1.0 if u < 0.1 else 0.0 if u < 0.2 else rng.random()
    return lam * con.upper(grid.nodes) + (1 - lam) * con.lower(grid.nodes)


def random_data(method: RecoveryMethod, rng, scale: float = 1.0) -> np.ndarray:
    """Consistent data: samples of a random class member plus noise inside the error box.

    The member's values at the sample points are drawn one at a time from
    the range still attainable given the earlier draws (the first draw is
    limited to ``[-scale, scale]``).
    """
    dim = method.points.shape[1]
    con = _Constraints(method, np.empty((0, dim)), np.empty(0), np.empty(0))
    values = np.empty(method.n)
    for k in rng.permutation(method.n):
        p = method.points[k:k + 1]
        lo = max(float(con.lower(p)[0]), -scale)
        hi = min(float(con.upper(p)[0]), scale)
        if lo > hi:
            lo, hi = float(con.lower(p)[0]), float(con.upper(p)[0])
        values[k] = lo + (hi - lo) * rng.random()
        con.add(p, values[k])
    return values + method.errors * rng.uniform(-1, 1, method.n)


def holder_violation(method: RecoveryMethod, grid: QuadratureGrid, x) -> float:
    """Largest ``|x(t) - x(t')| - omega(rho(t, t'))`` over all pairs of grid nodes."""
    x = np.asarray(x, dtype=float)
    worst = -np.inf
    step = max(1, 4_000_000 // grid.size)
    for lo in range(0, grid.size, step):
        block = grid.nodes[lo:lo + step]
        w = np.asarray(method.modulus(method.domain.distance(block[:, None, :], grid.nodes)))
        worst = max(worst, float(np.max(np.abs(x[lo:lo + step, None] - x[None, :]) - w)))
    return worst


# ---------------------------------------------------------------------------
# rival methods


def linear_interpolation_rival(method: RecoveryMethod, z, grid: QuadratureGrid) -> np.ndarray:
    """Piecewise-linear interpolation of the data (nearest value outside the hull)."""
    z = np.asarray(z, dtype=float)
    q = method.points
    if q.shape[1] == 1:
        order = np.argsort(q[:, 0])
        return np.interp(grid.nodes[:, 0], q[order, 0], z[order])
    if method.n < q.shape[1] + 1:
        return nearest_sample_rival(method, z, grid)
    try:
        out = griddata(q, z, grid.nodes, method="linear")
    except Exception:
        return nearest_sample_rival(method, z, grid)
    miss = np.isnan(out)
    if miss.any():
        out[miss] = nearest_sample_rival(method, z, grid)[miss]
    return out


def nearest_sample_rival(method: RecoveryMethod, z, grid: QuadratureGrid) -> np.ndarray:
    """Plain nearest-neighbour Voronoi recovery that ignores the error bounds."""
    d = method.domain.distance(grid.nodes[:, None, :], method.points)
    return np.asarray(z, dtype=float)[np.argmin(d, axis=-1)]


RIVALS = {
    "linear-interpolation": linear_interpolation_rival,
    "nearest-sample": nearest_sample_rival,
}


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationRow:
    trial: int
    clause: str
    value: float
    bound: float
    passed: bool


@dataclass
class VerificationReport:
    optimal_error: float
    tolerance: float
    direct_error: float = 0.0
    rows: list[VerificationRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r.passed]

    def clause_passed(self, clause: str) -> bool:
        return all(r.passed for r in self.rows if r.clause.startswith(clause))

    HEADER = ("trial", "clause", "value", "bound", "pass")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow((r.trial, r.clause, repr(float(r.value)), repr(float(r.bound)), int(r.passed)))
        return buf.getvalue()


def verify_optimality(mat: OperatorMatrix, methods: Sequence[RecoveryMethod], norm: str = "L1",
                      psi: PsiNorm | None = None, trials: int = 200, seed: int = 0,
                      resolution: int = 200, out_resolution: int | None = None,
                      tol: float = 1e-6, rivals: Sequence[str] = tuple(RIVALS)) -> VerificationReport:
    """Empirical check of upper bound, sharpness and lower bound.

    Clause ``a``: for sampled feasible ``(x, z)`` the optimal method errs by at
    most the optimal error.  Clause ``b``: the pair ``(sigma phi, 0)`` attains
    ``||A phi||`` discretised on the same grids, to ``1e-9`` relative.
    Clause ``c:<rival>``: each rival's worst sampled error (the witness
    pairs ``(+-sigma phi, 0)`` included) is at least the optimal error.  The
    tolerance of ``a`` and ``c`` is ``tol`` plus the estimated quadrature
    error plus the gap between the iterated and the direct discretisation
    of ``||A phi||``.
    """
    psi = psi or PsiNorm("l1")
    rep = optimal_error(mat, methods, norm, psi, resolution, out_resolution)
    grids = [m.domain.build_grid(resolution) for m in methods]
    out_grids = [o.grid(out_resolution or resolution) for o in mat.outputs]
    signs = mat.signs
    phis = [np.atleast_1d(m.phi(g.nodes)) for m, g in zip(methods, grids)]
    witness = [s * p for s, p in zip(signs, phis)]
    zeros = [np.zeros(m.n) for m in methods]

    direct = rows_norm(apply_matrix(mat, grids, phis, out_grids, signs=(1,) * len(methods),
                                    check_positive=True), out_grids, norm, psi)
    attained = recovery_residual(mat, methods, grids, out_grids, witness, zeros, norm, psi)
    tolerance = tol + rep.est_quad_err + abs(direct - rep.value)
    report = VerificationReport(rep.value, tolerance, direct)
    report.rows.append(VerificationRow(-1, "b", attained, direct,
                                       abs(attained - direct) <= SHARPNESS_RTOL * max(1.0, direct)))

    rival_worst = {}
    for name in rivals:
        fn = RIVALS[name]
        rec = lambda j, z, fn=fn: fn(methods[j], z, grids[j])
        worst = max(recovery_residual(mat, methods, grids, out_grids, witness, zeros, norm, psi, rec),
                    recovery_residual(mat, methods, grids, out_grids, [-w for w in witness], zeros,
                                      norm, psi, rec))
        rival_worst[name] = (worst, rec)

    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        data = [random_data(m, rng) for m in methods]
        xs = [sample_feasible(m, z, g, rng=rng) for m, z, g in zip(methods, data, grids)]
        err = recovery_residual(mat, methods, grids, out_grids, xs, data, norm, psi)
        report.rows.append(VerificationRow(trial, "a", err, rep.value, err <= rep.value + tolerance))
        for name, (worst, rec) in rival_worst.items():
            e_r = recovery_residual(mat, methods, grids, out_grids, xs, data, norm, psi, rec)
            rival_worst[name] = (max(worst, e_r), rec)

    for name, (worst, _) in rival_worst.items():
        report.rows.append(VerificationRow(-1, f"c:{name}", worst, rep.value, worst >= rep.value - tolerance))
    return report


def grid_minimax_oracle(method: RecoveryMethod, resolution: int) -> float:
    """``int (upper - lower) / 2`` at zero data: the discrete minimax error of the identity in L1."""
    grid = method.domain.build_grid(resolution)
    env = envelope(method, np.zeros(method.n), grid)
    return grid.integrate(env.half_width)
