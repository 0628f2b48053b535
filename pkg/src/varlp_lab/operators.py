"""Maximal and averaging operators on grids, norm probes and the slab subset."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _core
from .errors import AlignmentError, FamilyError, PreconditionError, ShapeError
from .exponent import Cube, ExponentField, GridFunction, discretize
from .norms import DEFAULT_TOL, luxemburg_norm
from .rearrange import extremal_subset

_ALIGN_TOL = 1e-9


class CubeFamily:
    """Finite collection of cubes with pairwise disjoint interiors."""

    def __init__(self, cubes: Iterable[Cube], check: bool = True):
        self.cubes = tuple(cubes)
        dims = {c.dim for c in self.cubes}
        if len(dims) > 1:
            raise ShapeError("cubes of mixed dimension")
        if check:
            _assert_disjoint(self.cubes)

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __getitem__(self, i):
        return self.cubes[i]

    @property
    def dim(self) -> int:
        return self.cubes[0].dim if self.cubes else 0

    def to_dict(self) -> dict:
        return {"cubes": [c.to_dict() for c in self.cubes]}

    @classmethod
    def from_dict(cls, d) -> "CubeFamily":
        return cls(Cube.from_dict(c) for c in d["cubes"])


def _assert_disjoint(cubes: Sequence[Cube]):
    k = len(cubes)
    if k < 2:
        return
    lo = np.array([c.corner for c in cubes])
    side = np.array([c.side for c in cubes])
    hi = lo + side[:, None]
    # touching faces may overlap by rounding when corners come from different subdivisions
    slack = _ALIGN_TOL * float(side.min())
    chunk = max(1, 2_000_000 // (k * lo.shape[1]))
    for s in range(0, k, chunk):
        a_lo, a_hi = lo[s:s + chunk, None, :], hi[s:s + chunk, None, :]
        sep = (a_hi <= lo[None, :, :] + slack) | (hi[None, :, :] <= a_lo + slack)
        overlap = ~np.any(sep, axis=-1)
        rows = np.arange(s, min(s + chunk, k))
        overlap[np.arange(rows.size), rows] = False
        if np.any(overlap):
            i, j = np.argwhere(overlap)[0]
            raise FamilyError(f"cubes {s + i} and {j} overlap")


def dyadic_family(cube: Cube, depth: int) -> CubeFamily:
    """All generation-``depth`` dyadic subcubes of ``cube``."""
    return CubeFamily(cube.subdivide(depth), check=False)


def nested_domains(base: Cube, levels: int, growth: float = 2.0) -> list:
    """``base`` scaled about the origin by ``growth**l`` for ``l < levels``."""
    return [Cube(tuple(c * growth**l for c in base.corner), base.side * growth**l) for l in range(levels)]


def nested_dyadic_families(base: Cube, levels: int, depth: int) -> list:
    """Families of equal-size dyadic cubes tiling domains that double per level.

    Level ``l`` tiles ``2**l * base`` by cubes of side ``base.side / 2**depth``,
    so each family contains the previous one when ``base`` is centered.
    """
    return [dyadic_family(dom, depth + l) for l, dom in enumerate(nested_domains(base, levels))]


# ---------------------------------------------------------------------------
# Grid helpers


def cube_cells(grid: GridFunction, cube: Cube) -> np.ndarray:
    """Flat indices of the cells of ``grid`` inside a cell-aligned ``cube``."""
    if cube.dim != grid.dim:
        raise ShapeError("cube and grid dimension differ")
    h = grid.cell_side
    start = (np.asarray(cube.corner) - np.asarray(grid.cube.corner)) / h
    width = cube.side / h
    si = np.round(start)
    wi = round(width)
    if np.any(np.abs(start - si) > _ALIGN_TOL * max(1.0, grid.m)) or abs(width - wi) > _ALIGN_TOL * max(1.0, grid.m):
        raise AlignmentError(f"cube {cube} is not aligned with the grid cells")
    si = si.astype(np.int64)
    if wi < 1 or np.any(si < 0) or np.any(si + wi > grid.m):
        raise AlignmentError(f"cube {cube} is not inside the grid domain")
    axes = [np.arange(s, s + wi) for s in si]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in mesh), (grid.m,) * grid.dim)


def restrict(grid: GridFunction, cube: Cube) -> GridFunction:
    """The values of ``grid`` on an aligned sub-cube, as its own grid."""
    idx = cube_cells(grid, cube)
    k = round(cube.side / grid.cell_side)
    return GridFunction(cube, k, grid.values[idx])


# ---------------------------------------------------------------------------
# Operators


def _window_sums(a: np.ndarray, k: int) -> np.ndarray:
    """Sums over all k-wide (hyper)cubic windows, via n-d prefix sums."""
    s = a
    for ax in range(a.ndim):
        c = np.cumsum(s, axis=ax)
        c = np.concatenate([np.zeros_like(np.take(c, [0], axis=ax)), c], axis=ax)
        n = a.shape[ax]
        s = np.take(c, np.arange(k, n + 1), axis=ax) - np.take(c, np.arange(0, n - k + 1), axis=ax)
    return s


def _window_max(avg: np.ndarray, k: int) -> np.ndarray:
    if avg.ndim == 1:
        return _core.window_max_1d(avg, k)
    if avg.ndim == 2:
        return _core.window_max_2d(avg, k)
    from scipy.ndimage import maximum_filter

    padded = np.pad(avg, [(0, k - 1)] * avg.ndim, constant_values=-np.inf)
    o = (k - 1) // 2
    return maximum_filter(padded, size=k, origin=o, mode="constant", cval=-np.inf)


def maximal(f: GridFunction, window_cap: int | None = None) -> GridFunction:
    """Uncentered discrete maximal function of ``|f|``.

    Each cell gets the largest mean of ``|f|`` over cell-aligned cubes inside
    the grid that contain it, with side at most ``window_cap`` cells.
    """
    cap = f.m if window_cap is None else int(window_cap)
    if cap < 1:
        raise PreconditionError("window_cap must be >= 1")
    cap = min(cap, f.m)
    a = np.abs(f.grid)
    out = a.copy()
    for k in range(2, cap + 1):
        avg = _window_sums(a, k) / k**f.dim
        np.maximum(out, _window_max(avg, k), out=out)
    return f.with_values(out.ravel())


def averaging(f: GridFunction, family: CubeFamily) -> GridFunction:
    """Mean of ``f`` on each family cube, 0 off the family."""
    out = np.zeros(f.n_cells)
    for q in family:
        idx = cube_cells(f, q)
        out[idx] = f.values[idx].mean()
    return f.with_values(out)


# ---------------------------------------------------------------------------
# Operator norm probes


def _structured_probes(p: GridFunction, family: CubeFamily):
    """Per-cube level-set indicators with a few scalings (``sum a_Q chi_{E_Q}``)."""
    for side in ("high", "low"):
        for frac in (0.5, 0.25):
            vals_plain = np.zeros(p.n_cells)
            vals_scaled = np.zeros(p.n_cells)
            ok = True
            for q in family:
                idx = cube_cells(p, q)
                sub = GridFunction(q, round(q.side / p.cell_side), p.values[idx])
                try:
                    e = extremal_subset(sub, frac, side)
                except AlignmentError:
                    ok = False
                    break
                if e.size == 0:
                    continue
                cells = idx[e]
                vals_plain[cells] = 1.0
                mask = np.zeros(p.n_cells)
                mask[cells] = 1.0
                nq = luxemburg_norm(p.with_values(mask), p).value
                vals_scaled[cells] = 1.0 / nq
            if ok:
                yield f"levelset-{side}-{frac}", vals_plain
                yield f"levelset-{side}-{frac}-normalized", vals_scaled


def probe_functions(p: GridFunction, family: CubeFamily | None, trials: int, seed: int):
    """Deterministic candidate sequence: structured shapes, then random fields."""
    fam = family if family is not None else dyadic_family(p.cube, 1)
    yield "ones", np.ones(p.n_cells)
    yield from _structured_probes(p, fam)
    rng = np.random.default_rng(seed)
    for k in range(trials):
        kind = k % 3
        if kind == 0:
            vals = rng.random(p.n_cells)
        elif kind == 1:
            vals = (rng.random(p.n_cells) < 0.1).astype(float)
        else:
            vals = rng.exponential(size=p.n_cells) ** 2
        yield f"random{k}", vals


@dataclass(frozen=True)
class ProbeResult:
    ratio: float
    witness: str
    evaluated: int


def operator_norm_probe(p: ExponentField | GridFunction, selector, trials: int, m: int | None = None,
                        tol: float = DEFAULT_TOL, region: Cube | None = None, seed: int = 0,
                        window_cap: int | None = None) -> ProbeResult:
    """Lower bound on ``||T||`` on ``L^{p(.)}`` as the best ratio over probes.

    ``selector`` is ``"maximal"`` or a :class:`CubeFamily` (averaging).  The
    candidate list is a fixed prefix-ordered sequence, so the result is
    monotone in ``trials``.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if isinstance(p, GridFunction):
        pg = p
    else:
        if m is None or region is None:
            raise PreconditionError("analytic exponents need region and m")
        pg = discretize(p, region, m)
    if isinstance(selector, CubeFamily):
        family = selector
        apply = lambda g: averaging(g, family)  # noqa: E731
    elif selector == "maximal":
        family = None
        apply = lambda g: maximal(g, window_cap)  # noqa: E731
    else:
        raise PreconditionError("selector must be 'maximal' or a CubeFamily")
    best, witness, count = 0.0, "", 0
    for label, vals in probe_functions(pg, family, trials, seed):
        f = pg.with_values(vals)
        nf = luxemburg_norm(f, pg, tol).value
        if nf == 0:
            continue
        ratio = luxemburg_norm(apply(f), pg, tol).value / nf
        count += 1
        if ratio > best:
            best, witness = ratio, label
    return ProbeResult(best, witness, count)


def uncentered_lp_norm_constant(p: float) -> float:
    """Norm of the uncentered maximal operator on ``L^p(R)``: the root
    ``x > 1`` of ``(p-1) x^p - p x^(p-1) - 1 = 0``."""
    from scipy.optimize import brentq

    g = lambda x: (p - 1) * x**p - p * x ** (p - 1) - 1  # noqa: E731
    hi = 2.0
    while g(hi) <= 0:
        hi *= 2
    return brentq(g, 1.0, hi, xtol=1e-14)


# ---------------------------------------------------------------------------
# Slab subsets


@dataclass(frozen=True)
class Slab:
    """``E = Q`` with coordinate ``axis`` restricted to ``(lower, upper)``."""

    cube: Cube
    axis: int
    lower: float
    upper: float
    fraction: float

    @property
    def measure(self) -> float:
        # the slab is defined by its fraction of Q; the float bounds only locate it
        return self.fraction * self.cube.volume

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = x[..., self.axis]
        return (c > self.lower) & (c < self.upper)

    def to_dict(self) -> dict:
        return {"cube": self.cube.to_dict(), "axis": self.axis, "lower": self.lower, "upper": self.upper,
                "fraction": self.fraction}


def slab_subset(Q: Cube, delta: float) -> tuple:
    """Slab ``E`` of measure ``delta|Q|`` with ``|x|/|y| <= sqrt(n)/delta`` for
    ``x`` in ``Q`` and ``y`` in ``Q \\ E``.  Returns ``(slab, bound)``.

    The slab sits on the axis where the point of the closed cube nearest the
    origin has its largest coordinate, at the end of ``Q`` facing the origin.
    """
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    a = np.asarray(Q.corner)
    h = Q.side
    if Q.contains(np.zeros(Q.dim), closed=True):
        raise PreconditionError("the closed cube must not contain the origin")
    xi = np.clip(0.0, a, a + h)
    j0 = int(np.argmax(np.abs(xi)))
    if a[j0] >= 0:
        lower, upper = a[j0], a[j0] + delta * h
    else:
        lower, upper = a[j0] + (1 - delta) * h, a[j0] + h
    return Slab(Q, j0, float(lower), float(upper), float(delta)), math.sqrt(Q.dim) / delta
