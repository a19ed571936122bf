"""Majorants, generalized Voronoi cells and piecewise-constant recovery.

For samples ``z_j ~ x(q_j)`` known up to ``|x(q_j) - z_j| <= e_j`` the
pointwise worst-case half-width of the feasible set is

    tau(t) = min_j (e_j + omega(rho(t, q_j)))          for t in M'
    tau(t) = 0                                         for t outside M'

and, for functions vanishing on the boundary of M',

    tau_tilde(t) = min(tau(t), omega(rho(t, dM'))).

The optimal method assigns ``z_j`` on the cell where sample ``j`` realises
the minimum in ``tau`` (smallest index wins ties), and ``0`` on the boundary
cell ``Pi_0`` in the vanishing-boundary variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Domain, QuadratureGrid
from .errors import ConfigurationError, DomainError, InputError
from .modulus import ModulusSpec

TIE_TOL = 1e-12

VARIANTS = ("plain", "tilde")


@dataclass(frozen=True)
class InfoSpec:
    """Sample points ``Q`` (shape ``(n, dim)``) and error bounds ``e >= 0``."""

    points: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InputError("need at least one sample point")
        errs = np.broadcast_to(np.asarray(self.errors, dtype=float), (pts.shape[0],)).copy()
        if np.any(errs < 0) or not np.all(np.isfinite(errs)):
            raise InputError("error bounds must be finite and nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "errors", errs)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @classmethod
    def exact(cls, points) -> "InfoSpec":
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.zeros(pts.shape[0] if pts.ndim else 1))


class RecoveryMethod:
    """The optimal piecewise-constant method for one function class.

    Parameters
    ----------
    modulus : ModulusSpec
        Modulus of continuity defining the class.
    info : InfoSpec
        Sample points and their error bounds; points must lie in ``domain``.
    domain : Domain
        The compact set M' carrying the functions.
    variant : {"plain", "tilde"}
        ``"plain"`` for the class bounded by ``omega`` only, ``"tilde"`` for
        the subclass vanishing on the boundary of ``domain``.
    """

    def __init__(self, modulus: ModulusSpec, info: InfoSpec, domain: Domain, variant: str = "plain"):
        if variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {variant!r}")
        self.modulus = modulus
        self.info = info
        self.domain = domain
        self.variant = variant
        self._q = domain.as_points(info.points)
        if self._q.ndim != 2:
            self._q = self._q.reshape(-1, domain.dim)
        if not np.all(domain.contains(self._q)):
            raise DomainError("all sample points must lie in the domain")

    @property
    def n(self) -> int:
        return self.info.n

    @property
    def points(self) -> np.ndarray:
        return self._q

    @property
    def errors(self) -> np.ndarray:
        return self.info.errors

    def __repr__(self):
        return f"RecoveryMethod({self.variant}, n={self.n}, {self.domain!r}, {self.modulus.kind})"

    # -- majorants --------------------------------------------------------

    def _candidates(self, t):
        """``e_j + omega(rho(t, q_j))`` with shape ``t.shape[:-1] + (n,)``."""
        rho = self.domain.distance(t[..., None, :], self._q)
        return self.errors + np.asarray(self.modulus(rho))

    def _flat(self, t):
        t = self.domain.as_points(t)
        return t.reshape(-1, self.domain.dim), t.shape[:-1]

    def tau(self, t):
        """Majorant ``tau``; zero outside the domain."""
        pts, shape = self._flat(t)
        inside = self.domain.contains(pts)
        out = np.zeros(pts.shape[0])
        if inside.any():
            out[inside] = self._candidates(pts[inside]).min(axis=-1)
        return _shaped(out, shape)

    def _boundary_term(self, pts):
        bd = self.domain.boundary_distance(pts)
        bd = np.atleast_1d(bd)
        term = np.full(bd.shape, np.inf)
        finite = np.isfinite(bd)
        term[finite] = np.asarray(self.modulus(bd[finite]))
        return term

    def tau_tilde(self, t):
        """``min(tau, omega(dist to boundary))``; zero outside the domain."""
        pts, shape = self._flat(t)
        inside = self.domain.contains(pts)
        out = np.zeros(pts.shape[0])
        if inside.any():
            p = pts[inside]
            out[inside] = np.minimum(self._candidates(p).min(axis=-1), self._boundary_term(p))
        return _shaped(out, shape)

    def phi(self, t):
        """The extremal function of the class: ``tau`` or ``tau_tilde`` by variant."""
        return self.tau(t) if self.variant == "plain" else self.tau_tilde(t)

    # -- cells and recovery -----------------------------------------------

    def assign_cell(self, t):
        """Cell index of each point (1-based; 0 is the boundary cell of the tilde variant)."""
        pts, shape = self._flat(t)
        if not np.all(self.domain.contains(pts)):
            raise DomainError("cell assignment is only defined inside the domain")
        cand = self._candidates(pts)
        tau = cand.min(axis=-1)
        idx = np.argmax(cand <= tau[:, None] + TIE_TOL, axis=-1) + 1
        if self.variant == "tilde":
            idx = np.where(self._boundary_term(pts) <= tau + TIE_TOL, 0, idx)
        out = idx.astype(int)
        return int(out[0]) if shape == () else out.reshape(shape)

    def recover(self, z, t):
        """Value of ``L z`` (or its tilde version) at ``t``; zero outside the domain."""
        z = np.asarray(z, dtype=float).ravel()
        if z.shape != (self.n,):
            raise InputError(f"expected {self.n} data values, got {z.shape[0]}")
        pts, shape = self._flat(t)
        inside = self.domain.contains(pts)
        out = np.zeros(pts.shape[0])
        if inside.any():
            cells = np.atleast_1d(self.assign_cell(pts[inside]))
            zz = np.concatenate([[0.0], z])
            out[inside] = zz[cells]
        return _shaped(out, shape)

    def recovered_values(self, z, grid: QuadratureGrid) -> np.ndarray:
        return np.atleast_1d(self.recover(z, grid.nodes))

    def pointwise_bound_check(self, nodes, x_samples, z) -> float:
        """``max(|x - L z| - phi)`` over ``nodes``; nonpositive when the bound holds."""
        x = np.asarray(x_samples, dtype=float).ravel()
        lz = np.atleast_1d(self.recover(z, nodes))
        ph = np.atleast_1d(self.phi(nodes))
        if x.shape != lz.shape:
            raise InputError(f"{lz.shape[0]} nodes but {x.shape[0]} samples")
        return float(np.max(np.abs(x - lz) - ph))

    def cell_measures(self, grid: QuadratureGrid) -> np.ndarray:
        """Quadrature measure of each cell; entry 0 is the boundary cell."""
        cells = np.atleast_1d(self.assign_cell(grid.nodes))
        return np.bincount(cells, weights=grid.weights, minlength=self.n + 1)


def _shaped(values, shape):
    if shape == ():
        return float(values[0])
    return values.reshape(shape)
