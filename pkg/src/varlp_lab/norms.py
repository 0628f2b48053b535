"""Modular, Luxemburg norm and the duality pairing check."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConvergenceError, InvalidExponentError, PreconditionError, ShapeError
from .exponent import GridFunction, conjugate_values

DEFAULT_TOL = 1e-10
MAX_ITER = 200
_MAX_WIDEN = 80


@dataclass(frozen=True)
class NormResult:
    value: float
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(f: GridFunction, p: GridFunction):
    if not f.same_grid(p):
        raise ShapeError("f and p must live on the same grid")
    if np.any(~(p.values > 1)) or not np.all(np.isfinite(p.values)):
        raise InvalidExponentError("exponent values must lie in (1, inf)")


def _rho(a: np.ndarray, p: np.ndarray, vol: float, lam: float) -> float:
    with np.errstate(over="ignore", divide="ignore"):
        return float(np.sum((a / lam) ** p) * vol)


def modular(f: GridFunction, p: GridFunction, scale: float = 1.0) -> float:
    """``sum |f/scale|^p * cell_volume``."""
    _check_pair(f, p)
    return _rho(np.abs(f.values), p.values, f.cell_volume, scale)


def luxemburg_norm(f: GridFunction, p: GridFunction, tol: float = DEFAULT_TOL,
                   max_iter: int = MAX_ITER) -> NormResult:
    """``inf{lam > 0 : modular(f / lam) <= 1}`` by bracketed bisection.

    Stops once the bracket width is at most ``tol * value`` and the residual
    ``|modular(f / value) - 1|`` is at most ``tol``.
    """
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    _check_pair(f, p)
    a = np.abs(f.values)
    fmax = float(a.max())
    if fmax == 0:
        return NormResult(0.0, 0.0, 0)
    nz = a > 0
    a, pv = a[nz], p.values[nz]
    vol = f.cell_volume
    measure = f.cube.volume
    pm = float(pv.min())
    lo = fmax * measure ** (-1.0 / pm) * 1e-3
    hi = fmax * max(1.0, measure) ** (1.0 / pm) * 1e3
    rho = lambda lam: _rho(a, pv, vol, lam)  # noqa: E731
    widen = 0
    while rho(lo) <= 1:
        lo *= 1e-3
        widen += 1
        if widen > _MAX_WIDEN or lo == 0:
            raise ConvergenceError("could not bracket the norm from below", {"lo": lo})
    while rho(hi) > 1:
        hi *= 1e3
        widen += 1
        if widen > _MAX_WIDEN or not math.isfinite(hi):
            raise ConvergenceError("could not bracket the norm from above", {"hi": hi})

    it = 0
    best, best_res = hi, abs(rho(hi) - 1)
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r = rho(mid)
        if r > 1:
            lo = mid
        else:
            hi = mid
        res = abs(r - 1)
        if res <= best_res:
            best, best_res = mid, res
        if hi - lo <= tol * hi and best_res <= tol:
            return NormResult(best, best_res, it)
    if best_res <= tol and hi - lo <= tol * hi:
        return NormResult(best, best_res, it)
    raise ConvergenceError(
        "Luxemburg bisection did not converge",
        {"lo": lo, "hi": hi, "iterations": it, "residual": best_res, "tol": tol},
    )


def norm_of_indicator(cells, p: GridFunction, tol: float = DEFAULT_TOL) -> float:
    """``||chi_S||`` for a boolean mask or index set ``S`` on ``p``'s grid."""
    mask = np.zeros(p.n_cells, dtype=bool)
    mask[np.asarray(cells)] = True
    return luxemburg_norm(p.with_values(mask.astype(float)), p, tol).value


def extremal_dual(f: GridFunction, p: GridFunction, tol: float = DEFAULT_TOL) -> GridFunction:
    """``g = |f / ||f|| |^(p - 1)``: unit modular under ``p'`` and ``int |f g| >= ||f||``."""
    nf = luxemburg_norm(f, p, tol).value
    if nf == 0:
        return f.with_values(np.zeros(f.n_cells))
    return f.with_values((np.abs(f.values) / nf) ** (p.values - 1))


def pairing(f: GridFunction, g: GridFunction) -> float:
    return float(np.sum(np.abs(f.values * g.values)) * f.cell_volume)


def duality_candidates(f: GridFunction, p: GridFunction, trials: int, seed: int = 0,
                       tol: float = DEFAULT_TOL):
    """Yield ``(label, pairing)`` for unit-norm ``g`` in ``L^{p'}``.

    Candidates: the extremal shape, indicators of upper level sets of
    ``|f|`` and ``trials`` uniformly random cell fields.
    """
    _check_pair(f, p)
    q = conjugate_values(p)
    rng = np.random.default_rng(seed)
    a = np.abs(f.values)

    def normalized(vals):
        g = f.with_values(vals)
        ng = luxemburg_norm(g, q, tol).value
        return None if ng == 0 else g.with_values(vals / ng)

    shapes = [("extremal", extremal_dual(f, p, tol).values)]
    for lvl in np.unique(a)[::-1][:8]:
        shapes.append((f"level>={lvl:.6g}", (a >= lvl).astype(float)))
    for label, vals in shapes:
        g = normalized(vals)
        if g is not None:
            yield label, pairing(f, g)
    for k in range(trials):
        g = normalized(rng.random(f.n_cells))
        if g is not None:
            yield f"random{k}", pairing(f, g)


def duality_gap(f: GridFunction, p: GridFunction, trials: int, seed: int = 0,
                tol: float = DEFAULT_TOL) -> tuple:
    """``(best pairing, ||f||)``.

    Every candidate pairing is at most ``2 ||f||`` (Hölder); the best one is
    at least ``||f|| / 2``.
    """
    nf = luxemburg_norm(f, p, tol).value
    best = max((v for _, v in duality_candidates(f, p, trials, seed, tol)), default=0.0)
    return best, nf
