"""Cauchy problem for the heat equation on ``R^d x (0, inf)``.

``x = A1 f + A2 g`` with

    K1((u,t),(v,s)) = exp(-|u-v|^2 / (4(t-s))) / (4 pi (t-s))^{d/2} * [0 < s < t]
    K2((u,t), v)    = exp(-|u-v|^2 / (4t)) / (4 pi t)^{d/2}

The source ``f`` and initial value ``g`` belong to vanishing-boundary
classes on compact sets ``M1`` (space-time box) and ``M2`` (space box), so
every integral over ``R^d`` reduces to an integral over those sets.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma

from ..domains import Box, SpacetimeBox
from ..errors import ConfigurationError, InputError, UnsupportedError
from ..operators import (ErrorReport, FixedPointRay, FixedTime, KernelOp, OperatorMatrix, OutputSpace,
                         SinglePoint, describe_methods, recovered_solution)
from ..recovery import RecoveryMethod
from ._common import sample_weight

CASES = ("fixed-time", "fixed-point-ray", "single-point")
TAIL_SIGMAS = 12.0


def _split(points, d):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[1] != d + 1:
        raise InputError(f"space-time points need {d + 1} coordinates, got {p.shape[1]}")
    return p[:, :d], p[:, d]


def _gauss(d, sq, lag):
    pos = lag > 0
    safe = np.where(pos, lag, 1.0)
    return np.where(pos, np.exp(-sq / (4 * safe)) / (4 * math.pi * safe) ** (d / 2), 0.0)


def heat_k1(d: int, out, src) -> np.ndarray:
    """Source kernel ``K1``; zero unless ``0 < s < t``."""
    u, t = _split(out, d)
    v, s = _split(src, d)
    sq = np.sum((u[:, None, :] - v[None, :, :]) ** 2, axis=-1)
    lag = t[:, None] - s[None, :]
    return np.where(s[None, :] > 0, _gauss(d, sq, lag), 0.0)


def heat_k2(d: int, out, src) -> np.ndarray:
    """Initial-value kernel ``K2``; ``t > 0`` required."""
    u, t = _split(out, d)
    if np.any(t <= 0):
        raise InputError("K2 needs t > 0")
    v = np.atleast_2d(np.asarray(src, dtype=float))
    sq = np.sum((u[:, None, :] - v[None, :, :]) ** 2, axis=-1)
    return _gauss(d, sq, np.broadcast_to(t[:, None], sq.shape))


def ray_time_integral(d: int, R) -> np.ndarray:
    """``int_0^inf K2((u0, t), v) dt`` at ``|u0 - v| = R``: ``Gamma(d/2 - 1) / (4 pi^{d/2} R^{d-2})``."""
    if d < 3:
        raise UnsupportedError(f"the time integral of the heat kernel diverges for d = {d} < 3")
    R = np.asarray(R, dtype=float)
    return gamma(d / 2 - 1) / (4 * math.pi ** (d / 2) * R ** (d - 2))


def ray_prefactor_shortcut(d: int) -> float:
    """The alternative constant ``4^{d-1} Gamma(d/2 - 1) / pi^{d/2}`` often quoted for the ray case."""
    if d < 3:
        raise UnsupportedError(f"the ray case needs d >= 3, got {d}")
    return 4 ** (d - 1) * gamma(d / 2 - 1) / math.pi ** (d / 2)


def output_space_box(d: int, boxes, t0: float) -> Box:
    """Space box covering ``boxes`` plus ``TAIL_SIGMAS`` standard deviations of ``K(., t0)``."""
    margin = TAIL_SIGMAS * math.sqrt(2 * t0)
    lo = np.min([b.lo[:d] for b in boxes], axis=0) - margin
    hi = np.max([b.hi[:d] for b in boxes], axis=0) + margin
    return Box(lo, hi)


def _column_integrals(d, output):
    """Analytic ``int_N K dnu`` for the supported output slices."""
    if isinstance(output, FixedTime):
        t0 = output.t0
        c1 = lambda src: (_split(src, d)[1] < t0).astype(float)
        c2 = lambda src: np.ones(np.atleast_2d(src).shape[0])
    elif isinstance(output, FixedPointRay):
        u0 = output.u0
        c1 = lambda src: ray_time_integral(d, np.linalg.norm(_split(src, d)[0] - u0, axis=-1))
        c2 = lambda src: ray_time_integral(d, np.linalg.norm(np.atleast_2d(src) - u0, axis=-1))
    elif isinstance(output, SinglePoint):
        p = output.point[None, :]
        c1 = lambda src: heat_k1(d, p, src)[0]
        c2 = lambda src: heat_k2(d, p, src)[0]
    else:
        return None, None
    return c1, c2


def heat_operator(d: int, output: OutputSpace, analytic: bool = True) -> OperatorMatrix:
    """Row ``(A1 A2)``; with ``analytic=False`` column integrals are left to quadrature."""
    c1, c2 = _column_integrals(d, output) if analytic else (None, None)
    k1 = KernelOp(lambda s, t: heat_k1(d, s, t), c1, "heat-K1")
    k2 = KernelOp(lambda s, t: heat_k2(d, s, t), c2, "heat-K2")
    return OperatorMatrix([[k1, k2]], [output])


def _check_classes(d, tau1, tau2):
    for tau, want, name in ((tau1, d + 1, "source"), (tau2, d, "initial value")):
        if isinstance(tau, RecoveryMethod):
            if tau.variant != "tilde":
                raise ConfigurationError(f"the {name} class must use the tilde variant")
            if tau.domain.dim != want:
                raise ConfigurationError(f"the {name} class must live in {want} dimensions")


def _restricted(m1: SpacetimeBox, t0: float):
    hi = m1.hi.copy()
    hi[-1] = min(hi[-1], t0)
    if hi[-1] <= m1.lo[-1]:
        return None
    return SpacetimeBox(m1.lo, hi)


def heat_optimal_error(case: str, d: int, tau1, tau2, m1: SpacetimeBox | None = None, m2: Box | None = None,
                       t0: float | None = None, u0=None, resolution: int = 60) -> ErrorReport:
    """Closed-form optimal L1 error for the three output slices.

    ``tau1``/``tau2`` are tilde-variant :class:`RecoveryMethod` objects (their
    domains are then used as ``M1``/``M2``), callables or constants.

    * ``fixed-time``: ``int_{s < t0} tau1 + int tau2``.
    * ``fixed-point-ray`` (``d >= 3``): ``C_d (int tau1 / |u0 - v|^{d-2} + int tau2 / |u0 - v|^{d-2})``
      with ``C_d = Gamma(d/2 - 1) / (4 pi^{d/2})``; the value under the
      shortcut prefactor is kept in ``extras``.
    * ``single-point``: kernel-weighted integrals at ``(u0, t0)``.
    """
    if case not in CASES:
        raise ConfigurationError(f"heat case must be one of {CASES}")
    if d < 1:
        raise ConfigurationError("d must be positive")
    _check_classes(d, tau1, tau2)
    m1 = tau1.domain if isinstance(tau1, RecoveryMethod) else m1
    m2 = tau2.domain if isinstance(tau2, RecoveryMethod) else m2
    if m1 is None or m2 is None:
        raise ConfigurationError("supports M1 and M2 are required")
    if m1.dim != d + 1 or m2.dim != d:
        raise ConfigurationError(f"M1 must be {d + 1}-dimensional and M2 {d}-dimensional")
    extras = {}
    if case in ("fixed-time", "single-point"):
        if t0 is None or not t0 > 0:
            raise ConfigurationError(f"{case} needs t0 > 0")
    if case in ("fixed-point-ray", "single-point"):
        if u0 is None:
            raise ConfigurationError(f"{case} needs u0")
        u0 = np.atleast_1d(np.asarray(u0, dtype=float))
        if u0.shape != (d,):
            raise ConfigurationError(f"u0 must have {d} coordinates")
    if case == "fixed-point-ray" and d < 3:
        raise UnsupportedError(f"the fixed-point ray case needs d >= 3, got {d}")

    g2 = m2.build_grid(resolution)
    w2 = sample_weight(tau2, g2)
    if case == "fixed-point-ray":
        g1 = m1.build_grid(resolution)
        w1 = sample_weight(tau1, g1)
        r1 = np.linalg.norm(g1.nodes[:, :d] - u0, axis=-1)
        r2 = np.linalg.norm(g2.nodes - u0, axis=-1)
        value = g1.integrate(w1 * ray_time_integral(d, r1)) + g2.integrate(w2 * ray_time_integral(d, r2))
        extras["shortcut_value"] = value * ray_prefactor_shortcut(d) / float(ray_time_integral(d, 1.0))
    else:
        box = _restricted(m1, t0)
        part1 = 0.0
        if box is not None:
            g1 = box.build_grid(resolution)
            w1 = sample_weight(tau1, g1)
            if case == "fixed-time":
                part1 = g1.integrate(w1)
            else:
                part1 = g1.integrate(w1 * heat_k1(d, np.append(u0, t0)[None, :], g1.nodes)[0])
        if case == "fixed-time":
            part2 = g2.integrate(w2)
        else:
            part2 = g2.integrate(w2 * heat_k2(d, np.append(u0, t0)[None, :], g2.nodes)[0])
        value = part1 + part2
    n, e = _describe(tau1, tau2)
    return ErrorReport(value=value, method="A*L~", norm="L1", psi="l1", resolution=resolution,
                       problem=f"heat:{case}", n=n, e_summary=e, extras=extras)


def _describe(*sources):
    methods = [s for s in sources if isinstance(s, RecoveryMethod)]
    return describe_methods(methods) if len(methods) == len(sources) else ("", "")


def heat_solution(d: int, methods, data, points, resolution: int = 40) -> np.ndarray:
    """Recovered solution ``A1 L~1 z1 + A2 L~2 z2`` at space-time points ``(P, d+1)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d + 1 or np.any(pts[:, -1] <= 0):
        raise InputError("solution points need d + 1 coordinates and t > 0")
    mat = heat_operator(d, SinglePoint(pts[0]), analytic=False)
    return recovered_solution(mat, methods, data, pts, resolution)[0]
