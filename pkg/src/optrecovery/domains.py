"""Compact metric-measure domains and their quadrature grids.

Points are always handled as arrays of shape ``(..., dim)``; for the
one-dimensional :class:`Interval` a scalar or a 1-D array of abscissae is
accepted as well.  Every domain supplies

* ``distance(t, s)``      -- the metric, broadcast over leading axes,
* ``boundary_distance(t)`` -- distance to the boundary of the domain,
* ``contains(t)``          -- membership mask,
* ``build_grid(n)``        -- a positive-weight quadrature rule whose weights
  sum to the measure of the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InputError

_CONTAIN_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray          # (N, dim)
    weights: np.ndarray        # (N,)
    shape: tuple[int, ...] = ()

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (nodes.shape[0],):
            raise InputError(f"{nodes.shape[0]} nodes but weights of shape {weights.shape}")
        if np.any(weights <= 0):
            raise InputError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if not self.shape:
            object.__setattr__(self, "shape", (nodes.shape[0],))

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise InputError(f"expected {self.size} values, got shape {values.shape}")
        return float(self.weights @ values)

    def restrict(self, mask) -> "QuadratureGrid":
        mask = np.asarray(mask, dtype=bool)
        return QuadratureGrid(self.nodes[mask], self.weights[mask])


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the nodes of a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise InputError(f"grid has {self.grid.size} nodes, values have shape {values.shape}")
        object.__setattr__(self, "values", values)

    def integrate(self, weight=None) -> float:
        if weight is None:
            return self.grid.integrate(self.values)
        return self.grid.integrate(self.values * np.asarray(weight, dtype=float))

    @classmethod
    def sample(cls, func, grid: QuadratureGrid) -> "GridFunction":
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))


def midpoints(lo: float, hi: float, n: int) -> np.ndarray:
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5)


def _check_resolution(resolution) -> int:
    if int(resolution) != resolution or resolution < 2:
        raise ConfigurationError(f"grid resolution must be an integer >= 2, got {resolution}")
    return int(resolution)


class Domain:
    """Common interface; concrete subclasses below."""

    kind: str = "abstract"
    dim: int = 1

    def as_points(self, t) -> np.ndarray:
        arr = np.asarray(t, dtype=float)
        if self.dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
            arr = arr[..., None]
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise DomainError(f"{self.kind} points need {self.dim} coordinates, got shape {np.shape(t)}")
        return arr

    def distance(self, t, s):
        t = self.as_points(t)
        s = self.as_points(s)
        d = np.sqrt(np.sum((t - s) ** 2, axis=-1))
        return float(d) if d.ndim == 0 else d

    def contains(self, t):
        raise NotImplementedError

    def _boundary_distance(self, t):
        raise NotImplementedError

    def boundary_distance(self, t):
        t = self.as_points(t)
        if not np.all(self.contains(t)):
            raise DomainError(f"point outside the {self.kind} domain")
        d = self._boundary_distance(t)
        return float(d) if np.ndim(d) == 0 else d

    def build_grid(self, resolution: int) -> QuadratureGrid:
        raise NotImplementedError

    @property
    def measure(self) -> float:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Box(Domain):
    """Axis-aligned box ``prod [lo_i, hi_i]`` in R^d (d <= 4 counting time)."""

    kind = "box"

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigurationError("box bounds must be two vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigurationError("box bounds must be finite")
        if np.any(lo >= hi):
            raise ConfigurationError(f"box needs lo < hi on every axis, got {lo} and {hi}")
        self.lo, self.hi = lo, hi
        self.dim = lo.shape[0]

    def contains(self, t):
        t = self.as_points(t)
        span = self.hi - self.lo
        return np.all((t >= self.lo - _CONTAIN_TOL * span) & (t <= self.hi + _CONTAIN_TOL * span), axis=-1)

    def _boundary_distance(self, t):
        d = np.minimum(t - self.lo, self.hi - t)
        return np.maximum(d.min(axis=-1), 0.0)

    def build_grid(self, resolution) -> QuadratureGrid:
        n = _check_resolution(resolution)
        axes = [midpoints(a, b, n) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        weights = np.full(nodes.shape[0], self.measure / n ** self.dim)
        return QuadratureGrid(nodes, weights, (n,) * self.dim)

    @property
    def measure(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def describe(self):
        return {"kind": self.kind, "bounds": [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]}

    def __repr__(self):
        return f"{type(self).__name__}({self.lo.tolist()}, {self.hi.tolist()})"


class Interval(Box):
    kind = "interval"

    def __init__(self, a: float, b: float):
        super().__init__([a], [b])

    @property
    def a(self) -> float:
        return float(self.lo[0])

    @property
    def b(self) -> float:
        return float(self.hi[0])

    def describe(self):
        return {"kind": self.kind, "bounds": [self.a, self.b]}

    def __repr__(self):
        return f"Interval({self.a}, {self.b})"


class SpacetimeBox(Box):
    """Box in R^d x (0, T); the last coordinate is time.

    The metric is the Euclidean one on R^{d+1}, time being treated as an
    ordinary coordinate.
    """

    kind = "spacetime-box"

    def __init__(self, lo, hi):
        super().__init__(lo, hi)
        if self.dim < 2:
            raise ConfigurationError("a spacetime box needs at least one space and one time axis")
        if self.lo[-1] < 0:
            raise ConfigurationError("spacetime boxes live in t >= 0")

    @property
    def space_dim(self) -> int:
        return self.dim - 1

    @property
    def space(self) -> Box:
        return Box(self.lo[:-1], self.hi[:-1])


class Disk(Domain):
    """Closed disk in R^2 with Lebesgue measure and a polar tensor grid."""

    kind = "disk"
    dim = 2

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        center = np.asarray(center, dtype=float)
        if center.shape != (2,):
            raise ConfigurationError("disk center must have two coordinates")
        if not (np.isfinite(radius) and radius > 0):
            raise ConfigurationError(f"disk radius must be positive, got {radius}")
        self.center = center
        self.radius = float(radius)

    def contains(self, t):
        t = self.as_points(t)
        return np.linalg.norm(t - self.center, axis=-1) <= self.radius * (1 + _CONTAIN_TOL)

    def _boundary_distance(self, t):
        return np.maximum(self.radius - np.linalg.norm(t - self.center, axis=-1), 0.0)

    def build_grid(self, resolution) -> QuadratureGrid:
        """``resolution`` radial midpoints times ``2 * resolution`` angles."""
        n = _check_resolution(resolution)
        nth = 2 * n
        rho = midpoints(0.0, self.radius, n)
        theta = midpoints(0.0, 2 * math.pi, nth)
        R, T = np.meshgrid(rho, theta, indexing="ij")
        nodes = self.center + np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
        weights = (R * (self.radius / n) * (2 * math.pi / nth)).ravel()
        return QuadratureGrid(nodes, weights, (n, nth))

    @property
    def measure(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def diameter(self) -> float:
        return 2 * self.radius

    def boundary(self) -> "Circle":
        return Circle(self.center, self.radius)

    def describe(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Disk({self.center.tolist()}, {self.radius})"


class Circle(Domain):
    """Circle in R^2 with the arc-length (geodesic) metric and length measure.

    A closed curve has empty boundary, so ``boundary_distance`` is ``inf``.
    """

    kind = "circle"
    dim = 2

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        center = np.asarray(center, dtype=float)
        if center.shape != (2,):
            raise ConfigurationError("circle center must have two coordinates")
        if not (np.isfinite(radius) and radius > 0):
            raise ConfigurationError(f"circle radius must be positive, got {radius}")
        self.center = center
        self.radius = float(radius)

    def point(self, angle):
        angle = np.asarray(angle, dtype=float)
        return self.center + self.radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)

    def angle(self, t):
        t = self.as_points(t) - self.center
        return np.arctan2(t[..., 1], t[..., 0])

    def distance(self, t, s):
        t = self.as_points(t) - self.center
        s = self.as_points(s) - self.center
        cross = t[..., 0] * s[..., 1] - t[..., 1] * s[..., 0]
        dot = np.sum(t * s, axis=-1)
        d = self.radius * np.abs(np.arctan2(cross, dot))
        return float(d) if d.ndim == 0 else d

    def contains(self, t):
        t = self.as_points(t)
        return np.abs(np.linalg.norm(t - self.center, axis=-1) - self.radius) <= 1e-9 * self.radius

    def _boundary_distance(self, t):
        return np.full(t.shape[:-1], np.inf)

    def build_grid(self, resolution) -> QuadratureGrid:
        n = _check_resolution(resolution)
        theta = midpoints(0.0, 2 * math.pi, n)
        return QuadratureGrid(self.point(theta), np.full(n, self.measure / n), (n,))

    @property
    def measure(self) -> float:
        return 2 * math.pi * self.radius

    @property
    def diameter(self) -> float:
        return math.pi * self.radius

    def describe(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Circle({self.center.tolist()}, {self.radius})"


def domain_from_config(block: dict) -> Domain:
    """Build a domain from ``{"kind": ..., "bounds"/"center"/"radius": ...}``."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigurationError("domain block needs a 'kind' key")
    kind = block["kind"]
    try:
        if kind == "interval":
            a, b = block["bounds"]
            return Interval(a, b)
        if kind in ("box", "spacetime-box"):
            bounds = np.asarray(block["bounds"], dtype=float)
            if bounds.ndim != 2 or bounds.shape[1] != 2:
                raise ConfigurationError("box bounds must be a list of [lo, hi] pairs")
            cls = Box if kind == "box" else SpacetimeBox
            return cls(bounds[:, 0], bounds[:, 1])
        if kind == "disk":
            return Disk(block.get("center", (0.0, 0.0)), block["radius"])
        if kind == "circle":
            return Circle(block.get("center", (0.0, 0.0)), block["radius"])
    except KeyError as exc:
        raise ConfigurationError(f"{kind} domain block is missing {exc}") from None
    raise ConfigurationError(f"unknown domain kind {kind!r}")
