"""Exact non-increasing rearrangements of piecewise-constant functions.

Everything here works on cell values, so rearranging is sorting: a
:class:`RearrangementProfile` is a right-continuous step function on
``(0, |Q|)`` whose steps are runs of equal sorted values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _core
from .errors import AlignmentError, DomainError, PreconditionError, ShapeError
from .exponent import GridFunction

ALIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RearrangementProfile:
    """Step function: ``values[k]`` on ``[breakpoints[k-1], breakpoints[k])``."""

    total_measure: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        vals = np.array(self.values, dtype=float)
        if bp.ndim != 1 or bp.shape != vals.shape or bp.size == 0:
            raise ShapeError("breakpoints and values must be equal-length, non-empty 1-D arrays")
        if np.any(np.diff(bp) <= 0) or bp[0] <= 0:
            raise PreconditionError("breakpoints must be strictly increasing and positive")
        if np.any(np.diff(vals) > 0):
            raise PreconditionError("profile values must be non-increasing")
        if not np.isclose(bp[-1], self.total_measure, rtol=1e-12, atol=0):
            raise PreconditionError("last breakpoint must equal the total measure")
        bp[-1] = float(self.total_measure)
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "total_measure", float(self.total_measure))
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0.0], self.breakpoints[:-1]])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.breakpoints]))

    def __call__(self, t):
        return profile_at(self, t)

    def is_breakpoint(self, t, tol: float = 0.0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inner = self.breakpoints[:-1]
        if inner.size == 0:
            return np.zeros(t.shape, dtype=bool)
        d = np.abs(t[..., None] - inner)
        return np.any(d <= tol * max(1.0, self.total_measure), axis=-1)

    def integral(self, a: float = 0.0, b: float | None = None) -> float:
        """Exact ``int_a^b f*`` (partial steps integrate exactly)."""
        b = self.total_measure if b is None else b
        a, b = max(0.0, float(a)), min(self.total_measure, float(b))
        if b <= a:
            return 0.0
        overlap = np.clip(np.minimum(self.breakpoints, b) - np.maximum(self.starts, a), 0.0, None)
        return float(np.dot(overlap, self.values))

    def map(self, phi: Callable) -> "RearrangementProfile":
        """Apply ``phi`` stepwise (no resorting); requires the result be non-increasing."""
        new = np.asarray(phi(self.values), dtype=float)
        return _merge(self.total_measure, self.breakpoints, new)

    def to_dict(self) -> dict:
        return {
            "total_measure": self.total_measure,
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "RearrangementProfile":
        return cls(d["total_measure"], d["breakpoints"], d["values"])

    def equals(self, other: "RearrangementProfile", rtol: float = 0.0, atol: float = 0.0) -> bool:
        return (
            self.breakpoints.shape == other.breakpoints.shape
            and np.allclose(self.breakpoints, other.breakpoints, rtol=1e-12, atol=0)
            and np.allclose(self.values, other.values, rtol=rtol, atol=atol)
        )


def _merge(total: float, breakpoints: np.ndarray, values: np.ndarray) -> RearrangementProfile:
    # keep the last breakpoint of each run of equal values
    keep = np.ones(values.size, dtype=bool)
    keep[:-1] = values[1:] != values[:-1]
    return RearrangementProfile(total, breakpoints[keep], values[keep])


def sorted_desc(values: np.ndarray) -> np.ndarray:
    """Values sorted descending, ties kept in cell-index order."""
    v = np.asarray(values, dtype=float)
    return v[np.argsort(-v, kind="stable")]


def profile_from_values(values, cell_volume: float) -> RearrangementProfile:
    vals = sorted_desc(np.abs(np.asarray(values, dtype=float)).ravel())
    n = vals.size
    bp = np.arange(1, n + 1) * cell_volume
    return _merge(n * cell_volume, bp, vals)


def rearrange(f: GridFunction) -> RearrangementProfile:
    """Non-increasing rearrangement of ``|f|``."""
    return profile_from_values(f.values, f.cell_volume)


def profile_at(prof: RearrangementProfile, t):
    """Right-continuous evaluation on ``(0, |Q|)``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~((t_arr > 0) & (t_arr < prof.total_measure))):
        raise DomainError(f"t must lie in (0, {prof.total_measure})")
    idx = np.searchsorted(prof.breakpoints, t_arr, side="right")
    out = prof.values[idx]
    return float(out) if out.ndim == 0 else out


def _check_monotone(f: GridFunction, phi: Callable, increasing: bool):
    # strict on the distinct values of |f| (what the identity uses), weak on
    # a dense probe of the range (catches non-monotone phi between values)
    vals = np.unique(np.abs(f.values))
    lo, hi = float(vals[0]), float(vals[-1])
    dense = np.linspace(lo, hi, 65) if hi > lo else vals
    with np.errstate(all="ignore"):
        out = np.asarray(phi(vals), dtype=float)
        out_dense = np.asarray(phi(dense), dtype=float)
    if out.shape != vals.shape or not np.all(np.isfinite(out)) or not np.all(np.isfinite(out_dense)):
        raise DomainError("phi is not defined on the range of f")
    if np.any(out < 0) or np.any(out_dense < 0):
        raise DomainError("phi must be non-negative on the range of f")
    d, dd = np.diff(out), np.diff(out_dense)
    ok = (np.all(d > 0) and np.all(dd >= 0)) if increasing else (np.all(d < 0) and np.all(dd <= 0))
    if not ok:
        kind = "increasing" if increasing else "decreasing"
        raise PreconditionError(f"phi is not strictly {kind} on the range of f")


def compose_increasing(f: GridFunction, phi: Callable) -> RearrangementProfile:
    """Rearrangement of ``phi(|f|)`` for strictly increasing ``phi >= 0``.

    Computed by resorting the composed cell values; it coincides with
    ``rearrange(f).map(phi)``.
    """
    _check_monotone(f, phi, increasing=True)
    return rearrange(f.with_values(phi(np.abs(f.values))))


def compose_decreasing(f: GridFunction, phi: Callable) -> RearrangementProfile:
    """Rearrangement of ``phi(|f|)`` for strictly decreasing ``phi >= 0``.

    Away from breakpoints it equals ``t -> phi(f*(|Q| - t))``.
    """
    _check_monotone(f, phi, increasing=False)
    return rearrange(f.with_values(phi(np.abs(f.values))))


def restrict_above(f: GridFunction, a: float) -> RearrangementProfile:
    """Rearrangement of ``f * 1{f > a}`` for ``f >= 0``."""
    if a < 0:
        raise PreconditionError("threshold must be >= 0")
    if np.any(f.values < 0):
        raise DomainError("restrict_above needs f >= 0")
    return rearrange(f.with_values(np.where(f.values > a, f.values, 0.0)))


def tail_integral_inf(f: GridFunction, lam: float) -> float:
    """``inf_{|E| = lam|Q|} int_E |f|``, equal to the integral of the last
    ``lam|Q|`` of ``f*``.  Non-aligned ``lam`` splits the boundary step."""
    if not 0 < lam <= 1:
        raise DomainError("lam must lie in (0, 1]")
    prof = rearrange(f)
    total = prof.total_measure
    return prof.integral((1 - lam) * total, total)


def aligned_count(lam: float, n: int) -> int:
    """``lam * n`` as an integer, or :class:`AlignmentError`."""
    k = round(lam * n)
    if abs(k - lam * n) > ALIGN_TOL * max(1, n):
        raise AlignmentError(f"lam={lam} is not a multiple of 1/{n}")
    return int(k)


def extremal_subset(f: GridFunction, lam: float, side: str) -> np.ndarray:
    """Cell indices of measure ``lam|Q|`` where ``|f|`` is smallest (``low``)
    or largest (``high``).  Ties go to lower cell indices."""
    n = f.n_cells
    k = aligned_count(lam, n)
    vals = np.abs(f.values)
    if side == "low":
        order = np.argsort(vals, kind="stable")
    elif side == "high":
        order = np.argsort(-vals, kind="stable")
    else:
        raise PreconditionError("side must be 'low' or 'high'")
    return np.sort(order[:k])


# ---------------------------------------------------------------------------
# Iterated rearrangements on Q x Q


@dataclass(frozen=True, eq=False)
class IteratedProfile:
    """Iterated rearrangement ``f*(t, s)`` on a product of two ``N``-cell factors.

    ``table[i, j]`` is the value on ``[i h, (i+1) h) x [j h, (j+1) h)`` with
    ``h = cell_measure``; rows are the outer variable ``t``.
    """

    total_measure: float
    cell_measure: float
    table: np.ndarray

    def __post_init__(self):
        tab = np.array(self.table, dtype=float)
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def outer_breakpoints(self) -> np.ndarray:
        return np.arange(1, self.size + 1) * self.cell_measure

    def inner(self, i: int) -> RearrangementProfile:
        """Profile in ``s`` on the ``i``-th ``t``-step."""
        return _merge(self.total_measure, self.outer_breakpoints, self.table[i])

    def at(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        T = self.total_measure
        if np.any((t <= 0) | (t >= T) | (s <= 0) | (s >= T)):
            raise DomainError("(t, s) must lie in (0, |Q|)^2")
        i = np.minimum((t / self.cell_measure).astype(np.int64), self.size - 1)
        j = np.minimum((s / self.cell_measure).astype(np.int64), self.size - 1)
        out = self.table[i, j]
        return float(out) if out.ndim == 0 else out

    def integral(self, t0: float, t1: float, s0: float, s1: float) -> float:
        """Exact ``int_{t0}^{t1} int_{s0}^{s1} f*(t, s) ds dt``."""
        wt = _overlap_weights(self.size, self.cell_measure, t0, t1)
        ws = _overlap_weights(self.size, self.cell_measure, s0, s1)
        return float(wt @ self.table @ ws)


def _overlap_weights(n: int, h: float, a: float, b: float) -> np.ndarray:
    edges = np.arange(n + 1) * h
    return np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)


def product_matrix(f) -> tuple:
    """``(matrix, factor_measure, factor_cell_measure)`` for data on ``Q x Q``.

    Accepts a :class:`GridFunction` of even dimension ``2n`` (the first ``n``
    coordinates are ``x``) or a ``(matrix, factor_measure)`` pair.
    """
    if isinstance(f, GridFunction):
        if f.dim % 2:
            raise ShapeError("product data needs an even-dimensional grid (Q x Q)")
        n = f.dim // 2
        N = f.m**n
        mat = f.values.reshape(N, N)
        factor = f.cube.side**n
        return mat, factor, factor / N
    mat, factor = f
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError("product data must be a square matrix")
    return mat, float(factor), float(factor) / mat.shape[0]


def iterated_rearrange(f) -> IteratedProfile:
    """Rearrange in ``x`` for each ``y`` cell, then in ``y`` for each ``t`` step."""
    mat, factor, h = product_matrix(f)
    step1 = -np.sort(-np.abs(mat), axis=0, kind="stable")
    step2 = -np.sort(-step1, axis=1, kind="stable")
    return IteratedProfile(factor, h, step2)


def iterated_tail_bound(f, lam: float, tau: float) -> float:
    """``int_{(1-lam)|Q|}^{|Q|} int_{(1-tau)|Q|}^{|Q|} f*(t, s) ds dt``."""
    if not (0 < lam <= 1 and 0 < tau <= 1):
        raise DomainError("lam and tau must lie in (0, 1]")
    prof = iterated_rearrange(f)
    T = prof.total_measure
    return prof.integral((1 - lam) * T, T, (1 - tau) * T, T)


def product_subset_inf(f, lam: float, tau: float) -> tuple:
    """Exhaustive ``inf_{|E|=lam|Q|, |G|=tau|Q|} int_G int_E |f|`` over cell unions.

    Returns ``(value, E_cells, G_cells)``.  Only feasible for small factors.
    """
    mat, _, h = product_matrix(f)
    N = mat.shape[0]
    if N > 20:
        raise PreconditionError("exhaustive search limited to 20 cells per factor")
    kE, kG = aligned_count(lam, N), aligned_count(tau, N)
    # int_G int_E = sum over the complement of (rows not in E, cols not in G)
    val, rows_out, cols_out = _core.min_complement_sum(np.abs(mat), N - kE, N - kG)
    E = np.setdiff1d(np.arange(N), rows_out)
    G = np.setdiff1d(np.arange(N), cols_out)
    return val * h * h, E, G
