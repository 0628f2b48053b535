"""Condition checkers and functionals for exponents ``p(.)``.

Local quantities on a cube ``Q`` are computed from the discretization of
``p`` on ``Q`` with ``m`` cells per side, through the rearrangement profile
``(p chi_Q)*``.  ``+inf`` exponents follow the convention ``c**inf = 0`` for
``0 <= c < 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from ._core import min_complement_sum
from ._parallel import pmap
from .errors import DomainError, PreconditionError, ShapeError
from .exponent import Cube, ExponentField, GridFunction, conjugate_values, discretize
from .norms import DEFAULT_TOL, luxemburg_norm
from .operators import CubeFamily, restrict
from .rearrange import (
    RearrangementProfile,
    aligned_count,
    extremal_subset,
    profile_at,
    rearrange,
)


class Verdict(str, enum.Enum):
    BOUNDED = "bounded"
    GROWING = "growing"
    INCONCLUSIVE = "inconclusive"
    PASS = "pass"
    FAIL = "fail"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self]


EXIT_CODES = {
    Verdict.BOUNDED: 0,
    Verdict.PASS: 0,
    Verdict.GROWING: 1,
    Verdict.FAIL: 1,
    Verdict.INCONCLUSIVE: 2,
}


@dataclass(frozen=True)
class ConditionParams:
    lam: float = 0.1
    tau: float = 0.1
    r: float = 1.5
    gamma0: float = 0.25
    K: float = 1.0
    c: float = 0.5
    p_inf: float = 2.0
    alpha: float = 0.4
    N_cutoff: float = math.e

    def __post_init__(self):
        checks = [
            (0 < self.lam < 1, "lam must lie in (0, 1)"),
            (0 < self.tau < 1, "tau must lie in (0, 1)"),
            # r = 1 is allowed so scans can probe the endpoint
            (self.r >= 1, "r must be >= 1"),
            (0 < self.gamma0 < 0.5, "gamma0 must lie in (0, 1/2)"),
            (self.K >= 1, "K must be >= 1"),
            (0 < self.c < 1, "c must lie in (0, 1)"),
            (self.p_inf > 0, "p_inf must be positive"),
            (self.alpha > 0, "alpha must be positive"),
            (self.N_cutoff > 1, "N_cutoff must exceed 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise PreconditionError(msg)

    def require_small(self):
        if not (self.lam < self.gamma0 and self.tau < self.gamma0):
            raise PreconditionError("need lam, tau < gamma0")

    def with_(self, **kw) -> "ConditionParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConditionReport:
    """Outcome of one check: per-cube terms, their aggregate and a verdict.

    ``levels`` holds the aggregate at each nesting level when a nested
    sequence was evaluated; ``per_cube`` belongs to the last level.
    """

    condition: str
    params: ConditionParams
    per_cube: list
    aggregate: float
    verdict: Verdict
    notes: str = ""
    aggregation: str = "sum"
    levels: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code


def aggregate_terms(terms: Sequence[float], how: str) -> float:
    terms = [float(t) for t in terms]
    if how == "sum":
        return math.fsum(terms)
    if how == "sup":
        return max(terms) if terms else 0.0
    raise ValueError(f"unknown aggregation {how!r}")


def trend_verdict(values: Sequence[float], plateau_tol: float = 0.05,
                  growth_factor: float = 2.0) -> Verdict:
    """Plateau/growth heuristic over a nested sequence of aggregates.

    bounded: every value lies within ``plateau_tol`` (relative) of the last.
    growing: non-decreasing with a positive start, and either the total
    increase reaches ``growth_factor`` or every step rises by more than
    ``plateau_tol``.
    """
    v = [float(x) for x in values]
    if not v:
        return Verdict.INCONCLUSIVE
    if any(not math.isfinite(x) for x in v):
        return Verdict.GROWING if v[-1] == math.inf else Verdict.INCONCLUSIVE
    last = v[-1]
    if all(x == 0 for x in v):
        return Verdict.BOUNDED
    if len(v) >= 2 and all(abs(x - last) <= plateau_tol * abs(last) for x in v):
        return Verdict.BOUNDED
    if len(v) >= 2 and v[0] > 0 and all(b >= a for a, b in zip(v, v[1:])):
        steps_ok = all(b > (1 + plateau_tol) * a for a, b in zip(v, v[1:]))
        if last >= growth_factor * v[0] or steps_ok:
            return Verdict.GROWING
    return Verdict.INCONCLUSIVE


# ---------------------------------------------------------------------------
# Extended-real helpers


def ext_pow(base, expo):
    """``base ** expo`` with ``expo`` possibly ``+inf`` (then 0 for base < 1)."""
    base = np.asarray(base, dtype=float)
    expo = np.asarray(expo, dtype=float)
    inf = np.isposinf(expo)
    if np.any(inf & (base >= 1)):
        raise DomainError("infinite exponent needs a base in [0, 1)")
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        out = np.where(inf, 0.0, np.power(base, np.where(inf, 1.0, expo)))
    return float(out) if out.ndim == 0 else out


def _decay(c, d):
    """``c ** (1 / |d|)`` with ``c**inf = 0`` at ``d = 0``."""
    d = np.abs(np.asarray(d, dtype=float))
    with np.errstate(divide="ignore", under="ignore"):
        return np.where(d > 0, np.exp(math.log(c) / np.where(d > 0, d, 1.0)), 0.0)


def local_grid(p, Q: Cube, m: int | None) -> GridFunction:
    """Discretization of ``p`` restricted to ``Q``."""
    if isinstance(p, GridFunction):
        if p.cube == Q and (m is None or p.m == m):
            return p
        sub = restrict(p, Q)
        if m is not None and sub.m != m:
            raise ShapeError(f"grid exponent has {sub.m} cells per side on Q, not {m}")
        return sub
    if m is None:
        raise PreconditionError("m is required for analytic exponents")
    return discretize(p, Q, m)


# ---------------------------------------------------------------------------
# Log-Hölder, N_inf, A_p(.)


def _sample_points(region: Cube, samples: int) -> np.ndarray:
    axes = [np.linspace(c, c + region.side, samples) for c in region.corner]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def _half_offsets(radius: int, dim: int) -> np.ndarray:
    """Integer offsets ``o != 0`` with ``|o| <= radius``, one of each ``+-o`` pair."""
    axes = [np.arange(-radius, radius + 1)] * dim
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    norm2 = (grid * grid).sum(-1)
    keep = (norm2 > 0) & (norm2 <= radius * radius)
    grid = grid[keep]
    # lexicographically positive representatives
    first = np.argmax(grid != 0, axis=1)
    return grid[grid[np.arange(len(grid)), first] > 0]


def lh0_constant(p: ExponentField, region: Cube, samples: int) -> float:
    """``max |p(x)-p(y)| * (-log|x-y|)`` over pairs of sample points with
    ``|x-y| < 1/2``.

    Samples are ``samples`` equispaced points per axis of the closed region;
    pairs are enumerated by integer grid offsets.
    """
    if samples < 2:
        raise PreconditionError("samples must be >= 2")
    n = region.dim
    h = region.side / (samples - 1)
    radius = int(math.ceil(0.5 / h))
    vals = p(_sample_points(region, samples)).reshape((samples,) * n)
    best = 0.0
    for o in _half_offsets(min(radius, samples - 1), n):
        d = h * math.sqrt(float(o @ o))
        if not 0 < d < 0.5:
            continue
        a = tuple(slice(max(0, -k), samples - max(0, k)) for k in o)
        b = tuple(slice(max(0, k), samples - max(0, -k)) for k in o)
        diff = float(np.max(np.abs(vals[a] - vals[b])))
        best = max(best, diff * -math.log(d))
    return best


def lhinf_constant(p: ExponentField, p_inf: float, radius: float, samples: int) -> float:
    """``max |p(x) - p_inf| * log(e + |x|)`` over samples with ``|x| <= radius``.

    Samples: an equispaced grid over ``[-radius, radius]^n`` (``samples`` per
    axis, kept inside the ball) plus ``samples`` geometrically spaced points
    in ``[1, radius]`` along each coordinate half-axis.
    """
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    if samples < 2:
        raise PreconditionError("samples must be >= 2")
    n = p.dimension
    pts = _sample_points(Cube.centered(radius, n), samples)
    pts = pts[np.sqrt((pts * pts).sum(-1)) <= radius * (1 + 1e-12)]
    if radius > 1:
        ray = np.geomspace(1.0, radius, samples)
        axes = []
        for j in range(n):
            for sign in (1.0, -1.0):
                q = np.zeros((samples, n))
                q[:, j] = sign * ray
                axes.append(q)
        pts = np.concatenate([pts] + axes)
    nrm = np.sqrt((pts * pts).sum(-1))
    return float(np.max(np.abs(p(pts) - p_inf) * np.log(math.e + nrm)))


def ninf_integral(p: ExponentField, c: float, p_inf: float, radius: float, m: int) -> float:
    """Partial integral of ``c ** (1/|p - p_inf|)`` over the ball of ``radius``.

    Midpoint rule on an ``m``-per-side grid over ``[-radius, radius]^n``;
    cells whose center lies outside the ball are dropped.
    """
    if not 0 < c < 1:
        raise PreconditionError("c must lie in (0, 1)")
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    g = discretize(p, Cube.centered(radius, p.dimension), m)
    ctr = g.centers()
    inside = np.sqrt((ctr * ctr).sum(-1)) <= radius
    vals = _decay(c, g.values - p_inf)
    return float(np.sum(vals[inside]) * g.cell_volume)


def ninf_shell_integral(p: ExponentField, c: float, p_inf: float, r_in: float, r_out: float,
                        m: int) -> float:
    """The same integrand over the shell ``r_in < |x| <= r_out`` (cell centers),
    on an ``m``-per-side grid over ``[-r_out, r_out]^n``."""
    if not 0 < c < 1:
        raise PreconditionError("c must lie in (0, 1)")
    if not 0 <= r_in < r_out:
        raise PreconditionError("need 0 <= r_in < r_out")
    g = discretize(p, Cube.centered(r_out, p.dimension), m)
    ctr = g.centers()
    rad = np.sqrt((ctr * ctr).sum(-1))
    inside = (rad > r_in) & (rad <= r_out)
    return float(np.sum(_decay(c, g.values[inside] - p_inf)) * g.cell_volume)


def a_ratio(p, Q: Cube, m: int, tol: float = DEFAULT_TOL) -> float:
    """``||chi_Q||_{p} * ||chi_Q||_{p'} / |Q|`` at resolution ``m``."""
    if m < 1:
        raise PreconditionError("m must be >= 1")
    g = local_grid(p, Q, m)
    if np.all(g.values == g.values[0]):
        return 1.0
    ones = g.with_values(np.ones(g.n_cells))
    a = luxemburg_norm(ones, g, tol).value
    b = luxemburg_norm(ones, conjugate_values(g), tol).value
    return a * b / Q.volume


def shifted_dyadic_cubes(region: Cube, depth: int) -> list:
    """Dyadic cubes of generation ``depth`` plus copies shifted by half a side
    along every axis, kept when inside ``region``."""
    cubes = list(region.subdivide(depth))
    h = region.side / 2**depth
    hi = np.asarray(region.upper)
    for q in list(cubes):
        c = np.asarray(q.corner) + h / 2
        if np.all(c + h <= hi + 1e-12 * region.side):
            cubes.append(Cube(tuple(c), h))
    return cubes


def apdot_sup(p, region: Cube, depth: int, m: int, tol: float = DEFAULT_TOL) -> tuple:
    """``(sup ratio, cube)`` over the shifted dyadic cubes of generation ``depth``."""
    cubes = shifted_dyadic_cubes(region, depth)
    vals = pmap(lambda q: a_ratio(p, q, m, tol), cubes)
    k = int(np.argmax(vals))
    return float(vals[k]), cubes[k], list(zip(cubes, vals))


# ---------------------------------------------------------------------------
# Kernel F and the Psi functionals


def f_kernel(p_x, p_y, lam: float, tau: float, power: float = 1.0):
    """``(tau**p_y * lam**(p_x (p_y - 1)))**(1/(p_x - p_y))`` on ``p_x > p_y``, else 0.

    ``power`` returns ``F**power`` evaluated in log space, so small values of
    ``F`` do not underflow before the power is applied.
    """
    px = np.asarray(p_x, dtype=float)
    py = np.asarray(p_y, dtype=float)
    if np.any(px <= 1) or np.any(py <= 1):
        raise DomainError("exponent values must exceed 1")
    if not (0 < lam < 1 and 0 < tau < 1):
        raise DomainError("lam and tau must lie in (0, 1)")
    pos = px > py
    gap = np.where(pos, px - py, 1.0)
    with np.errstate(under="ignore"):
        val = np.exp(power * (py * math.log(tau) + px * (py - 1) * math.log(lam)) / gap)
    out = np.where(pos, val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class LocalProfiles:
    """Profiles of ``p chi_Q`` and ``p' chi_Q`` for one cube."""

    measure: float
    p: RearrangementProfile
    pc: RearrangementProfile
    sorted_p: np.ndarray

    @classmethod
    def of(cls, grid: GridFunction) -> "LocalProfiles":
        return cls(grid.cube.volume, rearrange(grid), rearrange(conjugate_values(grid)),
                   np.sort(grid.values)[::-1])

    @property
    def p_minus(self) -> float:
        return float(self.sorted_p[-1])


def _profiles(p, Q: Cube, m) -> LocalProfiles:
    if isinstance(p, LocalProfiles):
        return p
    return LocalProfiles.of(local_grid(p, Q, m))


def _psi_from(prof: RearrangementProfile, measure: float, lam, tau):
    lam = np.asarray(lam, dtype=float)
    tau = np.asarray(tau, dtype=float)
    B = profile_at(prof, lam * measure)
    A = profile_at(prof, (1 - tau) * measure)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(B > A, A / np.where(B > A, B - A, 1.0), np.inf)
    return float(out) if np.ndim(out) == 0 else out


def _check_lt(lam, tau):
    if not (0 < lam < 1 and 0 < tau < 1):
        raise DomainError("lam and tau must lie in (0, 1)")
    if lam + tau >= 1:
        raise DomainError("need lam + tau < 1")


def psi(p, Q: Cube, m: int, lam: float, tau: float) -> float:
    """``A / (B - A)`` with ``B = (p chi_Q)*(lam|Q|)``, ``A = (p chi_Q)*((1-tau)|Q|)``;
    ``+inf`` when ``B == A``."""
    _check_lt(lam, tau)
    lp = _profiles(p, Q, m)
    return _psi_from(lp.p, lp.measure, lam, tau)


def psi_conjugate(p, Q: Cube, m: int, lam: float, tau: float) -> float:
    """The same functional for ``p'`` (arguments as given)."""
    _check_lt(lam, tau)
    lp = _profiles(p, Q, m)
    return _psi_from(lp.pc, lp.measure, lam, tau)


def _bounds_BA(lp: LocalProfiles, lam, tau):
    return (profile_at(lp.p, lam * lp.measure), profile_at(lp.p, (1 - tau) * lp.measure))


def _xi_t_pre(lp: LocalProfiles, lam, tau, r, K=1.0):
    if not (0 < lam < 0.5 and 0 < tau < 0.5):
        raise PreconditionError("need 0 < lam, tau < 1/2")
    if not 1 < r <= lp.p_minus * (1 + 1e-12):
        raise PreconditionError(f"need 1 < r <= p_- = {lp.p_minus}")
    if K < 1:
        raise PreconditionError("K must be >= 1")


def xi_q(p, Q: Cube, m: int, lam: float, tau: float, r: float) -> float:
    """``(tau^(1/r) lam^((A-1)/r))^(1/(B-A))``; 0 when ``B == A``."""
    lp = _profiles(p, Q, m)
    _xi_t_pre(lp, lam, tau, r)
    B, A = _bounds_BA(lp, lam, tau)
    base = tau ** (1 / r) * lam ** ((A - 1) / r)
    return ext_pow(base, math.inf if B == A else 1 / (B - A))


def t_q(p, Q: Cube, m: int, lam: float, tau: float, r: float, K: float = 1.0) -> float:
    """Largest root of ``tau^(1/r) (lam^(1/r) t)^A = K lam t^B`` in ``[0, 1)``."""
    lp = _profiles(p, Q, m)
    _xi_t_pre(lp, lam, tau, r, K)
    B, A = _bounds_BA(lp, lam, tau)
    if B == A:
        return 0.0
    base = tau ** (1 / r) / K * lam ** (A / r - 1)
    return base ** (1 / (B - A))


def t_q_equation(lp_or_p, Q, m, lam, tau, r, K, t):
    """``(lhs, rhs)`` of the defining equation of :func:`t_q` at ``t``."""
    lp = _profiles(lp_or_p, Q, m)
    B, A = _bounds_BA(lp, lam, tau)
    t = np.asarray(t, dtype=float)
    return tau ** (1 / r) * (lam ** (1 / r) * t) ** A, K * lam * t**B


# ---------------------------------------------------------------------------
# Family sums


def _family_profiles(p, family: CubeFamily, m) -> list:
    if not isinstance(family, CubeFamily):
        family = CubeFamily(family)
    return pmap(lambda q: (q, LocalProfiles.of(local_grid(p, q, m))), family.cubes)


def strf_term(lp: LocalProfiles, lam, tau, r) -> float:
    s = _psi_from(lp.p, lp.measure, lam, tau)
    sc = _psi_from(lp.pc, lp.measure, tau, lam)
    return lp.measure * ext_pow(tau, (1 + s) / r) * ext_pow(lam, (1 + sc) / r)


def weakf_term(lp: LocalProfiles, lam, tau, r) -> float:
    s = _psi_from(lp.p, lp.measure, lam, tau)
    sc = _psi_from(lp.pc, lp.measure, tau, lam)
    return lp.measure * tau * lam * ext_pow(tau, s / r) * ext_pow(lam, sc / r)


def intcon_integral(lp: LocalProfiles, lam, tau, r, gamma0, quad_points: int) -> float:
    """Midpoint rule for ``int_lam^g0 int_tau^g0 tau^(Psi(t,s)/r) lam^(Psi'(s,t)/r) ds dt``."""
    q = int(quad_points)
    if q < 1:
        raise PreconditionError("quad_points must be >= 1")
    ht, hs = (gamma0 - lam) / q, (gamma0 - tau) / q
    t = lam + (np.arange(q) + 0.5) * ht
    s = tau + (np.arange(q) + 0.5) * hs
    T, S = np.meshgrid(t, s, indexing="ij")
    psi_ts = _psi_from(lp.p, lp.measure, T, S)
    psic_st = _psi_from(lp.pc, lp.measure, S, T)
    vals = ext_pow(tau, psi_ts / r) * ext_pow(lam, psic_st / r)
    return float(np.sum(vals) * ht * hs)


def _sum_report(name, terms_by_cube, params, notes="") -> ConditionReport:
    agg = aggregate_terms([t for _, t in terms_by_cube], "sum")
    verdict = Verdict.BOUNDED if agg == 0 else Verdict.INCONCLUSIVE
    return ConditionReport(name, params, list(terms_by_cube), agg, verdict, notes, "sum", [agg])


def sum_strf(p, family, m, lam, tau, r) -> float:
    """``sum |Q| tau^((1+Psi)/r) lam^((1+Psi')/r)`` over a disjoint family."""
    return math.fsum(strf_term(lp, lam, tau, r) for _, lp in _family_profiles(p, family, m))


def sum_weakf(p, family, m, lam, tau, r) -> float:
    """``sum |Q| tau lam tau^(Psi/r) lam^(Psi'/r)`` over a disjoint family."""
    return math.fsum(weakf_term(lp, lam, tau, r) for _, lp in _family_profiles(p, family, m))


def sum_intcon(p, family, m, lam, tau, r, gamma0, quad_points: int = 64) -> float:
    """``sum |Q| * intcon_integral`` over a disjoint family."""
    if not (lam < gamma0 and tau < gamma0):
        raise PreconditionError("need lam, tau < gamma0")
    return math.fsum(
        lp.measure * intcon_integral(lp, lam, tau, r, gamma0, quad_points)
        for _, lp in _family_profiles(p, family, m)
    )


# ---------------------------------------------------------------------------
# U_inf


BRUTEFORCE_MAX_CELLS = 20


def f_matrix(grid: GridFunction, lam: float, tau: float, r: float) -> np.ndarray:
    """``W[i, j] = F(x_i, y_j) ** (1/r)`` on the cells of ``grid``."""
    v = grid.values
    return f_kernel(v[:, None], v[None, :], lam, tau, power=1.0 / r)


def closed_form_table(grid: GridFunction, lam: float, tau: float, r: float = 1.0) -> np.ndarray:
    """``tau^(Psi(t,s)/r) lam^(Psi'(s,t)/r)`` on the ``N x N`` cells in normalized
    ``(t, s)``; zero wherever ``B <= A`` (this includes every cell with
    ``t + s >= 1``)."""
    desc = np.sort(grid.values)[::-1]
    N = desc.size
    B = desc[:, None]                     # p*(t|Q|), t in cell i
    A = desc[::-1][None, :]               # p*((1-s)|Q|), s in cell j
    pc = desc / (desc - 1)
    Bc = pc[::-1][None, :]                # p'*(s|Q|) = (p*((1-s)|Q|))'
    Ac = pc[:, None]                      # p'*((1-t)|Q|) = (p*(t|Q|))'
    live = B > A
    # Psi'(s,t) = A'/(B'-A') with B' = p'*(s|Q|), A' = p'*((1-t)|Q|)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        psi_ts = np.where(live, A / np.where(live, B - A, 1.0), np.inf)
        psic_st = np.where(live, Ac / np.where(live, Bc - Ac, 1.0), np.inf)
    out = ext_pow(tau, psi_ts / r) * ext_pow(lam, psic_st / r)
    return np.broadcast_to(out, (N, N)).copy()


def _normalized_weights(N: int, lo: float) -> np.ndarray:
    edges = np.arange(N + 1) / N
    return np.clip(np.minimum(edges[1:], 1.0) - np.maximum(edges[:-1], lo), 0.0, None)


def uinf_term(p, Q: Cube, m: int, lam: float, tau: float, r: float, mode: str = "levelset") -> float:
    """``(1/|Q|) inf_{E,G} int_{Q\\G} int_{Q\\E} F^(1/r)`` in one of three modes.

    ``levelset`` uses ``E`` = cells of the largest ``p`` and ``G`` = cells of
    the smallest ``p`` (an upper bound); ``bruteforce`` searches all cell
    unions (exact at the resolution, at most 20 cells); ``rearrangement``
    integrates the closed-form iterated rearrangement (a lower bound).
    """
    if not (0 < lam < 1 and 0 < tau < 1):
        raise DomainError("lam and tau must lie in (0, 1)")
    if r < 1:
        raise PreconditionError("r must be >= 1")
    g = local_grid(p, Q, m)
    N = g.n_cells
    if mode == "rearrangement":
        table = closed_form_table(g, lam, tau, r)
        return Q.volume * float(_normalized_weights(N, lam) @ table @ _normalized_weights(N, tau))
    if np.all(g.values == g.values[0]):
        aligned_count(lam, N), aligned_count(tau, N)
        return 0.0
    W = f_matrix(g, lam, tau, r)
    v = g.cell_volume
    if mode == "levelset":
        E = extremal_subset(g, lam, "high")
        G = extremal_subset(g, tau, "low")
        keep_x = np.ones(N, dtype=bool)
        keep_x[E] = False
        keep_y = np.ones(N, dtype=bool)
        keep_y[G] = False
        return float(W[np.ix_(keep_x, keep_y)].sum() * v * v / Q.volume)
    if mode == "bruteforce":
        if N > BRUTEFORCE_MAX_CELLS:
            raise PreconditionError(f"bruteforce mode is limited to {BRUTEFORCE_MAX_CELLS} cells")
        val, _, _ = min_complement_sum(W, aligned_count(lam, N), aligned_count(tau, N))
        return float(val * v * v / Q.volume)
    raise PreconditionError(f"unknown mode {mode!r}")


def uinf_sum(p, family, m: int, params: ConditionParams, mode: str = "rearrangement",
             plateau_tol: float = 0.05, growth_factor: float = 2.0) -> ConditionReport:
    """Sum of :func:`uinf_term` over a family, or over each of a nested
    sequence of families (then the verdict reads the trend)."""
    params.require_small()
    families = family if isinstance(family, (list, tuple)) else [family]
    families = [f if isinstance(f, CubeFamily) else CubeFamily(f) for f in families]
    levels, per_cube = [], []
    for fam in families:
        terms = pmap(lambda q: uinf_term(p, q, m, params.lam, params.tau, params.r, mode), fam.cubes)
        per_cube = list(zip(fam.cubes, terms))
        levels.append(aggregate_terms(terms, "sum"))
    verdict = trend_verdict(levels, plateau_tol, growth_factor) if len(levels) > 1 or levels[-1] == 0 \
        else Verdict.INCONCLUSIVE
    return ConditionReport("uinf", params, per_cube, levels[-1], verdict,
                           f"mode={mode}; {len(levels)} nesting level(s)", "sum", levels)


# ---------------------------------------------------------------------------
# Convexity inequality and the radial criterion


def convexity_bound_check(p_plus: float, delta: float, triples) -> bool:
    """Check ``delta^(1/|a-b|) <= (delta^(1/(2|a-nu|)) + delta^(1/(2|b-nu|)))/2``
    for every ``(a, b, nu)`` with values in ``[1, p_plus]``."""
    if not 0 < delta <= math.exp(-8 * p_plus):
        raise PreconditionError("need 0 < delta <= exp(-8 p_plus)")
    arr = np.asarray(list(triples), dtype=float).reshape(-1, 3)
    if arr.size and (np.any(arr < 1) or np.any(arr > p_plus)):
        raise PreconditionError("triples must lie in [1, p_plus]")
    a, b, nu = arr.T
    lhs = _decay(delta, a - b)
    rhs = 0.5 * (_decay(delta, 2 * (a - nu)) + _decay(delta, 2 * (b - nu)))
    return bool(np.all(lhs <= rhs * (1 + 1e-12)))


_U_SPAN = 600.0      # sample log t over at least [log N, max(600, 1000 log N)]
_RATIO_SLACK = 1e-9  # cos(0) = 1 exactly at the envelope; allow rounding


def ussc_alpha_bound(s_minus: float, n: int) -> float:
    return s_minus * min(1.0, s_minus - 1.0) / n


def ussc_check(s_profile: ExponentField, alpha: float, N: float | None, n: int, samples: int = 4096,
               chunks: int = 16, log_N: float | None = None) -> ConditionReport:
    """Radial decay criterion for ``p(x) = s(|x|)`` on ``R^n``.

    (a) ``alpha < s_- min(1, s_- - 1)/n``; (b) ``|s'(t)| <= alpha/(t log t)``
    for ``t >= N``.  With ``u = log t`` the check reads
    ``|t log(t) s'(t)| <= alpha``, which the builtin families evaluate without
    forming ``t``; other profiles fall back to the two-point bound
    ``|s(t2) - s(t1)| <= alpha log(t2/t1)/log(t1)`` for finite ``t``.
    Samples are spaced evenly in ``log u``.  Pass ``log_N`` instead of ``N``
    for cutoffs beyond double range.  The aggregate is the worst ratio
    (pass needs <= 1); ``per_cube`` holds intervals in ``u``.
    """
    if log_N is None:
        if N is None or not N > 1:
            raise PreconditionError("N must exceed 1")
        log_N = math.log(N)
    if not log_N > 0:
        raise PreconditionError("log N must be positive")
    if alpha <= 0 or n < 1:
        raise PreconditionError("need alpha > 0 and n >= 1")
    if samples < 2:
        raise PreconditionError("samples must be >= 2")
    s_minus = s_profile.p_minus
    bound = ussc_alpha_bound(s_minus, n)
    alpha_ok = alpha < bound
    u_lo = max(log_N, 1.0 + 1e-9)
    u_hi = max(_U_SPAN, 1000.0 * u_lo)
    u = np.exp(np.linspace(math.log(u_lo), math.log(u_hi), samples))
    scaled = s_profile.radial_scaled_derivative(u)
    if scaled is not None:
        ratio = np.abs(scaled) / alpha
        route = "derivative"
    else:
        u = u[u <= 700.0]
        if u.size < 2:
            raise PreconditionError("two-point route needs log N below 700")
        t = np.exp(u)
        ratio = np.abs(s_profile.radial_profile(t[1:]) - s_profile.radial_profile(t[:-1])) * u[:-1] / (
            alpha * (u[1:] - u[:-1]))
        u = u[:-1]
        route = "two-point"
    per = []
    for idx in np.array_split(np.arange(u.size), min(chunks, u.size)):
        if idx.size == 0:
            continue
        lo, hi = float(u[idx[0]]), float(u[idx[-1]])
        per.append((Cube((lo,), max(hi - lo, lo * 1e-12)), float(ratio[idx].max())))
    worst = aggregate_terms([x for _, x in per], "sup")
    verdict = Verdict.PASS if alpha_ok and worst <= 1 + _RATIO_SLACK else Verdict.FAIL
    params = ConditionParams(alpha=alpha, N_cutoff=math.exp(min(log_N, 700.0)))
    notes = (f"route={route}; alpha={alpha:.6g} bound={bound:.6g} ({'ok' if alpha_ok else 'violated'}); "
             f"worst ratio={worst:.6g}; log t in [{u[0]:.6g}, {u[-1]:.6g}]")
    return ConditionReport("ussc", params, per, worst, verdict, notes, "sup", [worst],
                           {"alpha_bound": bound, "alpha_ok": alpha_ok, "log_N": log_N,
                            "margin": min(1 - worst, (bound - alpha) / bound)})
