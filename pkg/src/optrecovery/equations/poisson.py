"""Dirichlet problem ``-Laplace x = f`` in a disk, ``x = g`` on its boundary circle.

``x = A1 f + A2 g`` with the Green's function ``G`` of the disk and the
Poisson kernel ``P = -dG/dn``.  For ``Y = L1`` over the disk the optimal
error is

    int tau1(s) int G(t, s) dt ds + int tau2(s) int P(t, s) dt dsigma(s).

The column integrals are known in closed form: ``int G(t, s) dt`` solves
``-Laplace w = 1`` with zero boundary values, so it equals
``(r^2 - |s - a|^2) / 4`` in the plane, and ``int P(t, s) dt = r / 2``.
A frequently quoted shortcut uses ``1/2`` instead of ``1/4`` for the first
factor; :func:`poisson_disk_error` evaluates that shortcut as well and
keeps all three numbers in the report so they can be compared.
"""

from __future__ import annotations

import math

import numpy as np

from ..domains import Circle, Disk, QuadratureGrid
from ..errors import ConfigurationError, InputError
from ..operators import ErrorReport, FullDomain, KernelOp, OperatorMatrix, recovered_solution
from ._common import sample_weight

_CHUNK = 2_000_000


def green_disk(disk: Disk, t, s) -> np.ndarray:
    """``G(t, s)`` for ``t (P, 2)``, ``s (Q, 2)``; coincident points give 0 (diagonal skipped)."""
    r2 = disk.radius ** 2
    x = np.atleast_2d(t)[:, None, :] - disk.center
    y = np.atleast_2d(s)[None, :, :] - disk.center
    xy = np.sum(x * y, axis=-1)
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    diff = np.sum((x - y) ** 2, axis=-1)
    num = r2 * r2 - 2 * r2 * xy + xx * yy
    same = diff <= 1e-28 * r2
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log(num / (r2 * np.where(same, 1.0, diff))) / (4 * math.pi)
    return np.where(same, 0.0, np.maximum(g, 0.0))


def poisson_kernel_disk(disk: Disk, t, s) -> np.ndarray:
    """``P(t, s) = (r^2 - |t - a|^2) / (2 pi r |t - s|^2)`` for interior ``t`` and boundary ``s``."""
    x = np.atleast_2d(t)[:, None, :] - disk.center
    y = np.atleast_2d(s)[None, :, :] - disk.center
    diff = np.sum((x - y) ** 2, axis=-1)
    return (disk.radius ** 2 - np.sum(x * x, axis=-1)) / (2 * math.pi * disk.radius * diff)


def green_column_integral(disk: Disk, s) -> np.ndarray:
    s = np.atleast_2d(s)
    return (disk.radius ** 2 - np.sum((s - disk.center) ** 2, axis=-1)) / 4


def poisson_column_integral(disk: Disk, s) -> np.ndarray:
    return np.full(np.atleast_2d(s).shape[0], disk.radius / 2)


def poisson_operator(disk: Disk) -> OperatorMatrix:
    """Operator row ``(A1 A2)`` from (f on the disk, g on the circle) to L1 of the disk."""
    g_op = KernelOp(lambda t, s: green_disk(disk, t, s), lambda s: green_column_integral(disk, s), "green")
    p_op = KernelOp(lambda t, s: poisson_kernel_disk(disk, t, s),
                    lambda s: poisson_column_integral(disk, s), "poisson")
    return OperatorMatrix([[g_op, p_op]], [FullDomain(disk)])


def _quadrature_columns(disk: Disk, inner: QuadratureGrid, s, kernel):
    out = np.zeros(s.shape[0])
    step = max(1, _CHUNK // inner.size)
    for lo in range(0, s.shape[0], step):
        out[lo:lo + step] = inner.weights @ kernel(disk, inner.nodes, s[lo:lo + step])
    return out


def poisson_cross_check(disk: Disk, tau1, tau2, resolution: int) -> float:
    """Error integral with both column integrals computed by quadrature on the polar grid.

    The boundary uses ``3 * resolution`` nodes so that no boundary node
    shares its angle with a ring of the ``2 * resolution``-angle disk grid;
    aligned angles make the peaked Poisson kernel badly under-resolved.
    """
    grid = disk.build_grid(resolution)
    bgrid = disk.boundary().build_grid(3 * resolution)
    t1 = sample_weight(tau1, grid)
    t2 = sample_weight(tau2, bgrid)
    cg = _quadrature_columns(disk, grid, grid.nodes, green_disk)
    cp = _quadrature_columns(disk, grid, bgrid.nodes, poisson_kernel_disk)
    return grid.integrate(t1 * cg) + bgrid.integrate(t2 * cp)


def poisson_disk_error(disk: Disk, tau1, tau2, resolution: int = 32,
                       cross_check: bool = True, problem: str = "poisson-disk") -> ErrorReport:
    """Optimal L1 error for the disk problem.

    ``value`` is the shortcut form ``(1/2) int (r^2 - |s-a|^2) tau1 + (r/2) int tau2``.
    ``extras`` holds ``green_form`` (the same with the Green's-function
    factor ``1/4``), ``cross_check`` (full kernel quadrature at
    ``resolution``) and ``ratio`` = value / cross_check.
    """
    if not isinstance(disk, Disk):
        raise ConfigurationError("the Poisson problem is implemented on a disk only")
    grid = disk.build_grid(resolution)
    bgrid = disk.boundary().build_grid(3 * resolution)
    t1 = sample_weight(tau1, grid)
    t2 = sample_weight(tau2, bgrid)
    bump = disk.radius ** 2 - np.sum((grid.nodes - disk.center) ** 2, axis=-1)
    area = grid.integrate(bump * t1)
    edge = bgrid.integrate(t2)
    shortcut = 0.5 * area + disk.radius / 2 * edge
    green = 0.25 * area + disk.radius / 2 * edge
    extras = {"green_form": green}
    if cross_check:
        cc = poisson_cross_check(disk, tau1, tau2, resolution)
        extras["cross_check"] = cc
        extras["ratio"] = shortcut / cc if cc > 0 else math.nan
    return ErrorReport(value=shortcut, method="A*L", norm="L1", psi="l1", resolution=resolution,
                       est_quad_err=abs(green - extras.get("cross_check", green)), problem=problem,
                       extras=extras)


def poisson_disk_solution(disk: Disk, methods, data, points, resolution: int = 32) -> np.ndarray:
    """Recovered solution ``A1 L1 z1 + A2 L2 z2`` at interior points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.linalg.norm(pts - disk.center, axis=-1) < disk.radius * (1 - 1e-12)
    if not np.all(inside):
        raise InputError("solution points must lie strictly inside the disk")
    if not isinstance(methods[1].domain, Circle):
        raise ConfigurationError("boundary data must live on the circle")
    return recovered_solution(poisson_operator(disk), methods, data, pts, resolution)[0]
