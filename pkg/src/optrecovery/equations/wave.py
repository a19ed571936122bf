"""Cauchy problem for the wave equation ``x_tt - Laplace x = f`` in ``d = 1, 2, 3``.

d = 1 (d'Alembert), data ``f``, ``g = x(., 0)``, ``h = x_t(., 0)``::

    x(u,t) = 1/2 int_0^t int_{u-s}^{u+s} f(v, t-s) dv ds + (g(u-t) + g(u+t))/2
             + 1/2 int_{u-t}^{u+t} h

d = 2 (Poisson) and d = 3 (Kirchhoff) with ``g = 0``.  The ball integrals are
evaluated in spherical-mean form: with ``rho = t sin(phi)`` the d = 2 weight
``1/sqrt(t^2 - rho^2)`` cancels and

    (1/2pi) int_{B_t(u)} h(v) / sqrt(t^2 - |u-v|^2) dv
        = (t/2pi) int_0^{2pi} int_0^{pi/2} h(u + t sin(phi) e_theta) sin(phi) dphi dtheta,

while for d = 3 ``(1/4pi t) int_{S_t(u)} h = t * mean_{S^2} h(u + t w)``.

In L1 over a fixed-time slice ``N = R^d x {t0}`` every column integral is
elementary, giving

    int_0^{t0} s int tau1(v, t0 - s) dv ds + int tau2 + t0 int tau3      (d = 1)
    int_0^{t0} s int tau1(v, t0 - s) dv ds + t0 int tau2                 (d = 2, 3)
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..domains import Box, Domain, SpacetimeBox
from ..errors import ConfigurationError, InputError, UnsupportedError
from ..operators import ErrorReport, FixedTime, KernelOp, OperatorMatrix, describe_methods
from ..recovery import RecoveryMethod
from ._common import sample_weight

DIMS = (1, 2, 3)


def _check_dim(d):
    if d not in DIMS:
        raise UnsupportedError(f"wave equation is implemented for d in {DIMS}, got {d}")


def _gl(n, lo, hi):
    x, w = leggauss(n)
    return lo + (hi - lo) * (x + 1) / 2, w * (hi - lo) / 2


def _zero(pts):
    return np.zeros(pts.shape[0])


def _directions(d, nq):
    """Unit directions and weights averaging over the sphere S^{d-1} (d = 3) or disk fan (d = 2)."""
    if d == 2:
        phi, wphi = _gl(nq, 0.0, math.pi / 2)
        theta = (np.arange(2 * nq) + 0.5) * math.pi / nq
        P, T = np.meshgrid(phi, theta, indexing="ij")
        dirs = np.sin(P)[..., None] * np.stack([np.cos(T), np.sin(T)], axis=-1)
        # (1/2pi) dtheta sin(phi) dphi, radius factor t applied by the caller
        w = (wphi[:, None] * np.sin(P) * (math.pi / nq) / (2 * math.pi)).ravel()
        return dirs.reshape(-1, 2), w
    c, wc = leggauss(nq)
    phi = (np.arange(2 * nq) + 0.5) * math.pi / nq
    C, F = np.meshgrid(c, phi, indexing="ij")
    S = np.sqrt(1 - C ** 2)
    dirs = np.stack([S * np.cos(F), S * np.sin(F), C], axis=-1).reshape(-1, 3)
    w = (wc[:, None] * np.full(F.shape, math.pi / nq) / (4 * math.pi)).ravel()
    return dirs, w


def wave_solution(d: int, points, f=None, g=None, h=None, nq: int = 48) -> np.ndarray:
    """Evaluate the solution formula at space-time points ``(P, d+1)``.

    ``f``, ``g``, ``h`` are vectorised callables of points ``(N, d+1)`` /
    ``(N, d)`` or ``None`` for zero data; ``g`` must be ``None`` for d = 2, 3.
    """
    _check_dim(d)
    if d > 1 and g is not None:
        raise UnsupportedError("for d = 2, 3 only zero initial displacement is supported")
    f = f or _zero
    g = g or _zero
    h = h or _zero
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d + 1:
        raise InputError(f"points need {d + 1} coordinates")
    if np.any(pts[:, -1] < 0):
        raise InputError("wave solution needs t >= 0")
    out = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        u, t = p[:d], p[d]
        out[i] = _source_term(d, f, u, t, nq) + _initial_terms(d, g, h, u, t, nq)
    return out


def _initial_terms(d, g, h, u, t, nq):
    if t == 0:
        return float(g(u[None, :])[0]) if d == 1 else 0.0
    if d == 1:
        v, w = _gl(nq, u[0] - t, u[0] + t)
        ends = g(np.array([[u[0] - t], [u[0] + t]]))
        return 0.5 * float(np.sum(ends)) + 0.5 * float(w @ h(v[:, None]))
    dirs, w = _directions(d, nq)
    return t * float(w @ h(u + t * dirs))


def _source_term(d, f, u, t, nq):
    if t == 0:
        return 0.0
    s, ws = _gl(nq, 0.0, t)
    total = 0.0
    if d == 1:
        x, wx = leggauss(nq)
        for sk, wk in zip(s, ws):
            v = u[0] + sk * x
            vals = f(np.column_stack([v, np.full(nq, t - sk)]))
            total += wk * 0.5 * sk * float(wx @ vals)
        return total
    dirs, w = _directions(d, nq)
    for sk, wk in zip(s, ws):
        pts = np.column_stack([u + sk * dirs, np.full(dirs.shape[0], t - sk)])
        total += wk * sk * float(w @ f(pts))
    return total


def _as_source(src):
    """``(domain, weight source)`` from a method or a ``(domain, value)`` pair."""
    if isinstance(src, RecoveryMethod):
        if src.variant != "plain":
            raise ConfigurationError("wave classes use the plain variant")
        return src.domain, src
    try:
        dom, val = src
    except (TypeError, ValueError):
        raise ConfigurationError("majorant must be a RecoveryMethod or a (domain, value) pair") from None
    if not isinstance(dom, Domain):
        raise ConfigurationError("majorant pair must start with a domain")
    return dom, val


def wave_fixed_time_error(d: int, t0: float, sources, resolution: int = 200) -> ErrorReport:
    """Optimal L1 error on ``R^d x {t0}``.

    ``sources`` lists the majorants of ``(f, g, h)`` for d = 1 and of
    ``(f, h)`` for d = 2, 3.
    """
    _check_dim(d)
    if not t0 > 0:
        raise ConfigurationError("t0 must be positive")
    arity = 3 if d == 1 else 2
    if len(sources) != arity:
        raise ConfigurationError(f"d = {d} needs {arity} classes, got {len(sources)}")
    cols = [_as_source(s) for s in sources]
    m1, tau1 = cols[0]
    if not isinstance(m1, Box) or m1.dim != d + 1:
        raise ConfigurationError(f"the source support must be a {d + 1}-dimensional box")
    for dom, _ in cols[1:]:
        if dom.dim != d:
            raise ConfigurationError(f"initial data supports must be {d}-dimensional")
    hi = m1.hi.copy()
    hi[-1] = min(hi[-1], t0)
    first = 0.0
    if hi[-1] > m1.lo[-1]:
        grid = SpacetimeBox(m1.lo, hi).build_grid(resolution)
        first = grid.integrate((t0 - grid.nodes[:, -1]) * sample_weight(tau1, grid))
    ints = []
    for dom, tau in cols[1:]:
        grid = dom.build_grid(resolution)
        ints.append(grid.integrate(sample_weight(tau, grid)))
    value = first + (ints[0] + t0 * ints[1] if d == 1 else t0 * ints[0])
    n, e = ("", "")
    if all(isinstance(s, RecoveryMethod) for s in sources):
        n, e = describe_methods(sources)
    return ErrorReport(value=value, method="A*L", norm="L1", psi="l1", resolution=resolution,
                       problem=f"wave{d}d", n=n, e_summary=e, extras={"terms": [first, *ints]})


def wave1d_kernel_operator(t0: float, space: Box) -> OperatorMatrix:
    """Source and velocity columns of the d = 1 problem as indicator kernels on ``space x {t0}``."""
    def k_src(out, src):
        u, v, s = out[:, :1], src[None, :, 0], src[None, :, 1]
        return 0.5 * ((np.abs(u - v) <= t0 - s) & (s < t0))

    def k_vel(out, src):
        return 0.5 * (np.abs(out[:, :1] - src[None, :, 0]) <= t0)

    return OperatorMatrix([[KernelOp(k_src, name="dalembert-source"), KernelOp(k_vel, name="dalembert-velocity")]],
                          [FixedTime(space, t0)])


def wave_solution_and_error(d: int, methods, data, u_points, t0: float, nq: int = 48,
                            resolution: int = 200):
    """Recovered solution at ``(u, t0)`` from the optimal methods, plus the fixed-time L1 error."""
    _check_dim(d)
    arity = 3 if d == 1 else 2
    if len(methods) != arity or len(data) != arity:
        raise InputError(f"d = {d} needs {arity} classes and data vectors")
    for m in methods:
        if m.variant != "plain":
            raise ConfigurationError("wave classes use the plain variant")
    rec = [lambda p, m=m, z=z: np.atleast_1d(m.recover(z, p)) for m, z in zip(methods, data)]
    u = np.atleast_2d(np.asarray(u_points, dtype=float))
    if d == 1 and u.shape[0] == 1 and u.shape[1] != 1:
        u = u.T
    pts = np.column_stack([u, np.full(u.shape[0], float(t0))])
    if d == 1:
        values = wave_solution(1, pts, f=rec[0], g=rec[1], h=rec[2], nq=nq)
    else:
        values = wave_solution(d, pts, f=rec[0], h=rec[1], nq=nq)
    return values, wave_fixed_time_error(d, t0, methods, resolution)
