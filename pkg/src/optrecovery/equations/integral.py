"""Second-kind Volterra and Fredholm equations.

The resolvent ``Gamma = sum_{n>=1} k_n`` is built from iterated kernels on a
uniform tensor grid with the composite trapezoid rule.  The trapezoid error
has an expansion in even powers of the step, so by default the table is
computed at ``n`` and ``2n`` intervals and Richardson-extrapolated onto the
coarse nodes.

For Volterra kernels the iteration is carried out with oriented integrals on
the whole square.  Above the diagonal this yields the smooth continuation of
each ``k_n``; it is kept privately so that bilinear interpolation close to
the diagonal is not dragged towards zero.  The public table is zero there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..domains import Interval
from ..errors import ConfigurationError, NumericalError, PreconditionError
from ..operators import (ErrorReport, FullDomain, Identity, KernelOp, OperatorMatrix, OpSum,
                         describe_methods)
from ..recovery import RecoveryMethod

KINDS = ("volterra", "fredholm")
PREMISE_MARGIN = 1e-12


class TruncationError(NumericalError):
    """The Neumann series did not reach the tolerance within the order limit."""


@dataclass
class ResolventTable:
    kind: str
    nodes: np.ndarray
    values: np.ndarray
    order: int
    tail: float
    double_square_integral: float | None = None
    _smooth: np.ndarray | None = field(default=None, repr=False)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, t, s):
        """Bilinear interpolation of ``Gamma(t, s)``; zero for ``s > t`` when Volterra."""
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        src = self.values if self._smooth is None else self._smooth
        interp = RegularGridInterpolator((self.nodes, self.nodes), src, bounds_error=False, fill_value=None)
        tt = np.clip(t, self.a, self.b)
        ss = np.clip(s, self.a, self.b)
        out = interp(np.stack([tt.ravel(), ss.ravel()], axis=-1)).reshape(t.shape)
        if self.kind == "volterra":
            out = np.where(s > t, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def column_integral(self, s):
        """``int Gamma(t, s) dt`` over ``[s, b]`` (Volterra) or ``[a, b]`` (Fredholm)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty(s.shape)
        for i, si in enumerate(s):
            ts = self.nodes[self.nodes > si] if self.kind == "volterra" else self.nodes
            if self.kind == "volterra":
                ts = np.concatenate([[si], ts])
            out[i] = _trapezoid(self(ts, np.full(ts.shape, si)), ts)
        return out


def _trapezoid(y, x):
    if x.size < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _sample_kernel(k, nodes):
    tt, ss = np.meshgrid(nodes, nodes, indexing="ij")
    if callable(k):
        vals = np.asarray(k(tt, ss), dtype=float)
        vals = np.broadcast_to(vals, tt.shape).copy()
    else:
        vals = np.full(tt.shape, float(k))
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise NumericalError(f"kernel is not finite at t={nodes[i]!r}, s={nodes[j]!r}")
    return vals


def _trap_weights(n, h):
    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2
    return w


def double_square_integral(k, a: float, b: float, n: int = 400) -> float:
    """Trapezoid estimate of ``int int k(t, s)^2 dt ds`` over ``[a, b]^2``."""
    nodes = np.linspace(a, b, n + 1)
    w = _trap_weights(n, (b - a) / n)
    return float(w @ _sample_kernel(k, nodes) ** 2 @ w)


def _volterra_series(kv, h, tol, max_order):
    n1 = kv.shape[0]
    idx = np.arange(n1)
    lower = idx[None, :] <= idx[:, None]   # [r, c]: c <= r
    upper = idx[None, :] >= idx[:, None]   # [r, c]: c >= r
    diag = np.diag(kv)
    term = kv.copy()
    total = kv.copy()
    sup_prev = np.abs(kv).max()
    order, tail = 1, sup_prev
    for order in range(2, max_order + 1):
        pd = np.diag(term)
        # oriented trapezoid over m between j and i
        below = h * ((kv * lower) @ (term * lower)) - 0.5 * h * (diag[:, None] * term + kv * pd[None, :])
        above = h * ((kv * upper) @ (term * upper)) - 0.5 * h * (diag[:, None] * term + kv * pd[None, :])
        term = np.where(lower, below, -above)
        sup = np.abs(term).max()
        total += term
        tail = _tail(sup, sup_prev)
        sup_prev = sup
        if sup == 0 or tail < tol:
            return total, order, tail
    raise TruncationError(f"Volterra series not converged after {max_order} terms (tail {tail:.3e})")


def _fredholm_series(kv, w, tol, max_order):
    term = kv.copy()
    total = kv.copy()
    sup_prev = np.abs(kv).max()
    order, tail = 1, sup_prev
    kw = w[:, None] * kv
    for order in range(2, max_order + 1):
        term = term @ kw
        sup = np.abs(term).max()
        total += term
        tail = _tail(sup, sup_prev)
        sup_prev = sup
        if sup == 0 or tail < tol:
            return total, order, tail
    raise TruncationError(f"Fredholm series not converged after {max_order} terms (tail {tail:.3e})")


def _tail(sup, sup_prev):
    """Geometric estimate of the sup of the neglected terms."""
    if sup == 0:
        return 0.0
    r = sup / sup_prev if sup_prev > 0 else 1.0
    if r >= 1:
        return np.inf
    return sup * r / (1 - r)


def _resolvent(kind, k, a, b, n, tol, max_order):
    nodes = np.linspace(a, b, n + 1)
    h = (b - a) / n
    kv = _sample_kernel(k, nodes)
    if kind == "volterra":
        return nodes, *_volterra_series(kv, h, tol, max_order)
    return nodes, *_fredholm_series(kv, _trap_weights(n, h), tol, max_order)


def _build(kind, k, a, b, n, tol, max_order, extrapolate, dsi=None):
    if not b > a:
        raise ConfigurationError("need a < b")
    if n < 2:
        raise ConfigurationError("need at least 2 intervals")
    nodes, coarse, order, tail = _resolvent(kind, k, a, b, n, tol, max_order)
    if extrapolate:
        _, fine, order2, tail2 = _resolvent(kind, k, a, b, 2 * n, tol, max_order)
        coarse = (4 * fine[::2, ::2] - coarse) / 3
        order, tail = max(order, order2), max(tail, tail2)
    values = coarse
    smooth = None
    if kind == "volterra":
        smooth = coarse
        values = np.tril(coarse)
    return ResolventTable(kind, nodes, values, order, tail, dsi, smooth)


def volterra_resolvent(k, a: float = 0.0, b: float = 1.0, n: int = 400, tol: float = 1e-13,
                       max_order: int = 400, extrapolate: bool = True) -> ResolventTable:
    """Resolvent of ``x(t) = f(t) + int_a^t k(t, s) x(s) ds``.

    ``k`` is a vectorised callable ``k(t, s)`` or a constant.
    """
    return _build("volterra", k, a, b, n, tol, max_order, extrapolate)


def fredholm_resolvent(k, a: float = 0.0, b: float = 1.0, n: int = 400, tol: float = 1e-13,
                       max_order: int = 2000, extrapolate: bool = True) -> ResolventTable:
    """Resolvent of ``x(t) = f(t) + int_a^b k(t, s) x(s) ds``.

    Requires ``int int k^2 < 1`` (estimated by quadrature); otherwise the
    Neumann series is not guaranteed to converge and
    :class:`PreconditionError` is raised.
    """
    dsi = double_square_integral(k, a, b, 2 * n)
    if dsi >= 1 - PREMISE_MARGIN:
        raise PreconditionError(
            f"square-integrability premise violated: int int k^2 = {dsi:.12g} is not < 1")
    return _build("fredholm", k, a, b, n, tol, max_order, extrapolate, dsi)


def solve_second_kind(kind: str, table: ResolventTable, f, t):
    """``x(t) = f(t) + int Gamma(t, s) f(s) ds`` with the Volterra range cut at ``t``.

    ``f`` is a vectorised callable; the integral uses the trapezoid rule on
    the table nodes (plus ``t`` itself for Volterra).
    """
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}")
    if kind != table.kind:
        raise ConfigurationError(f"resolvent table was built for {table.kind}, not {kind}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape)
    for i, ti in enumerate(t_arr):
        if kind == "volterra":
            s = np.concatenate([table.nodes[table.nodes < ti], [ti]])
        else:
            s = table.nodes
        fs = np.broadcast_to(np.asarray(f(s), dtype=float), s.shape)
        out[i] = float(np.asarray(f(np.array([ti])), dtype=float).ravel()[0]) \
            + _trapezoid(table(np.full(s.shape, ti), s) * fs, s)
    return float(out[0]) if np.ndim(t) == 0 else out


def resolvent_operator(table: ResolventTable) -> OperatorMatrix:
    """``A = I + Gamma`` on ``[a, b]`` with ``Y = L1([a, b])`` as output space."""
    op = KernelOp(lambda s, t: table(s[:, 0][:, None], t[:, 0][None, :]),
                  output_integral=lambda t: table.column_integral(t[:, 0]),
                  name=f"{table.kind}-resolvent")
    return OperatorMatrix.single(OpSum(Identity(), op), FullDomain(Interval(table.a, table.b)))


def resolvent_l1_error(table: ResolventTable, method: RecoveryMethod, resolution: int = 2000) -> ErrorReport:
    """Closed form ``int (1 + int Gamma(t, s) dt) tau(s) ds`` of the optimal L1 error."""
    grid = method.domain.build_grid(resolution)
    s = grid.nodes[:, 0]
    tau = np.atleast_1d(method.phi(grid.nodes))
    weight = 1.0 + table.column_integral(s)
    if np.any(weight < 0):
        raise PreconditionError("resolvent has a negative column integral; the kernel must be nonnegative")
    value = grid.integrate(weight * tau)
    n, e = describe_methods([method])
    return ErrorReport(value=value, method="A*L", norm="L1", psi="l1", resolution=resolution,
                       est_quad_err=table.tail * grid.total, problem=table.kind, n=n, e_summary=e)
