"""Linear constant-coefficient systems ``x' = S x + q``, ``x(a) = p``.

The solution is ``x(t) = e^{S(t-a)} p + int_a^t e^{S(t-u)} q(u) du``.  When
``S`` is essentially non-negative (Metzler) every entry of ``e^{Sh}``,
``h >= 0``, is nonnegative, so both the initial-value map and the forcing
map are positive operators and the piecewise-constant recovery of each
forcing component is optimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from ..domains import Interval
from ..errors import ConfigurationError, InputError, NumericalError, PreconditionError
from ..operators import ErrorReport, PsiNorm, psi_norm
from ..recovery import RecoveryMethod

NORMS = ("L1", "sup")


def _square(S) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"S must be a square matrix, got shape {S.shape}")
    return S


def check_metzler(S) -> None:
    """Raise :class:`PreconditionError` naming the first negative off-diagonal entry."""
    S = _square(S)
    off = S - np.diag(np.diag(S))
    if np.any(off < 0):
        i, j = np.argwhere(off < 0)[0]
        raise PreconditionError(
            f"S is not essentially non-negative: S[{i}][{j}] = {float(S[i, j])!r} < 0")


def is_metzler(S) -> bool:
    S = _square(S)
    return bool(np.all(S - np.diag(np.diag(S)) >= 0))


def matrix_exponential(S, h: float = 1.0) -> np.ndarray:
    """``e^{S h}`` by scaling and squaring.

    For Metzler matrices the diagonal is shifted to make ``S + cI``
    nonnegative and ``e^{-ch}`` is factored out, which keeps the entries
    free of cancellation.
    """
    S = _square(S)
    h = float(h)
    if is_metzler(S) and h >= 0:
        c = max(0.0, -float(np.min(np.diag(S))))
        out = np.exp(-c * h) * expm((S + c * np.eye(S.shape[0])) * h)
    else:
        out = expm(S * h)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"matrix exponential overflows for ||S h|| = {np.abs(S * h).max():.3e}")
    return out


def exp_integral(S, h: float) -> np.ndarray:
    """``int_0^h e^{S v} dv`` from the exponential of the block matrix ``[[S, I], [0, 0]]``."""
    S = _square(S)
    d = S.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = S
    block[:d, d:] = np.eye(d)
    out = expm(block * float(h))[:d, d:]
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix exponential integral overflows")
    return out


@dataclass
class OdeResult:
    t: np.ndarray
    values: np.ndarray        # (P, d)
    report: ErrorReport


def _check_methods(S, methods, a, b):
    d = S.shape[0]
    if len(methods) != d:
        raise InputError(f"S is {d}x{d} but {len(methods)} forcing classes were given")
    for m in methods:
        dom = m.domain
        if not isinstance(dom, Interval) or not np.isclose(dom.a, a) or not np.isclose(dom.b, b):
            raise ConfigurationError("every forcing class must live on the interval [a, b]")
        if m.variant != "plain":
            raise ConfigurationError("forcing classes use the plain variant")


def _propagate(S, x0, forcing, a, t, steps):
    """States at ``t_k = a + k (t - a) / steps`` with forcing frozen at each step midpoint.

    Each step is exact for constant forcing: ``x <- E x + F q`` with
    ``E = e^{S dt}`` and ``F = int_0^dt e^{Sv} dv``.
    """
    dt = (t - a) / steps
    E = matrix_exponential(S, dt)
    F = exp_integral(S, dt)
    mids = a + (np.arange(steps) + 0.5) * dt
    q = np.asarray(forcing(mids), dtype=float).reshape(steps, -1)
    out = np.empty((steps + 1, S.shape[0]))
    out[0] = x0
    for k in range(steps):
        out[k + 1] = E @ out[k] + F @ q[k]
    return out


def ode_solution(S, p, q, t, a: float = 0.0, resolution: int = 2000) -> np.ndarray:
    """``x(t)`` for a forcing ``q(u) -> (P, d)``, forcing sampled at ``resolution`` step midpoints."""
    S = _square(S)
    p = np.asarray(p, dtype=float).ravel()
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t_arr.size, S.shape[0]))
    for i, ti in enumerate(t_arr):
        if ti < a:
            raise InputError(f"t = {ti!r} precedes the initial time {a!r}")
        out[i] = p if ti == a else _propagate(S, p, q, a, ti, resolution)[-1]
    return out


def ode_optimal_error(S, p_errors, methods: Sequence[RecoveryMethod], a: float, b: float,
                      norm: str = "L1", psi: PsiNorm | None = None, resolution: int = 2000) -> ErrorReport:
    """``psi`` of the row norms of ``B e + C tau`` on ``[a, b]``.

    For ``Y = L1`` row ``i`` is
    ``sum_j (int_0^{b-a} e^{Sv} dv)_ij e_j + sum_j int tau_j(u) (int_0^{b-u} e^{Sv} dv)_ij du``.
    """
    S = _square(S)
    check_metzler(S)
    _check_methods(S, methods, a, b)
    if norm not in NORMS:
        raise ConfigurationError(f"norm must be one of {NORMS}")
    psi = psi or PsiNorm("l1")
    e = np.asarray(p_errors, dtype=float).ravel()
    d = S.shape[0]
    if e.shape != (d,) or np.any(e < 0):
        raise InputError(f"need {d} nonnegative initial-value errors")
    grid = Interval(a, b).build_grid(resolution)
    u = grid.nodes[:, 0]
    taus = np.stack([np.atleast_1d(m.phi(grid.nodes)) for m in methods], axis=1)   # (N, d)
    if norm == "L1":
        rows = exp_integral(S, b - a) @ e
        for k, uk in enumerate(u):
            rows = rows + grid.weights[k] * exp_integral(S, b - uk) @ taus[k]
        v = rows
    else:
        def forcing(mids):
            pts = mids[:, None]
            return np.stack([np.atleast_1d(m.phi(pts)) for m in methods], axis=1)

        v = np.abs(_propagate(S, e, forcing, a, b, resolution)).max(axis=0)
    value = psi_norm(v, psi)
    return ErrorReport(value=value, method="A*L", norm=norm, psi=psi.describe(), resolution=resolution,
                       problem="ode", n=";".join(str(m.n) for m in methods),
                       e_summary=f"p_max={float(e.max())!r}")


def ode_recovery(S, p_data, p_errors, methods: Sequence[RecoveryMethod], q_data, t, a: float = 0.0,
                 b: float = 1.0, norm: str = "L1", psi: PsiNorm | None = None,
                 resolution: int = 2000) -> OdeResult:
    """Recovered trajectory ``e^{S(t-a)} p + int_a^t e^{S(t-u)} (L q)(u) du`` and its optimal error."""
    S = _square(S)
    check_metzler(S)
    _check_methods(S, methods, a, b)
    if len(q_data) != len(methods):
        raise InputError(f"{len(methods)} forcing classes but {len(q_data)} data vectors")
    p = np.asarray(p_data, dtype=float).ravel()
    if p.shape != (S.shape[0],):
        raise InputError(f"initial value must have {S.shape[0]} entries")

    def lq(u):
        return np.stack([np.atleast_1d(m.recover(z, u[:, None])) for m, z in zip(methods, q_data)], axis=1)

    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr > b):
        raise InputError("output times must lie in [a, b]")
    values = ode_solution(S, p, lq, t_arr, a, resolution)
    report = ode_optimal_error(S, p_errors, methods, a, b, norm, psi, resolution)
    return OdeResult(t_arr, values, report)
