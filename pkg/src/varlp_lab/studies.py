"""Nested-level studies: evaluate a condition on growing domains or shrinking
cubes and read the trend of the per-level aggregates.

Every study returns a :class:`~varlp_lab.conditions.ConditionReport` whose
``levels`` are the per-level aggregates and whose ``extra["level_domains"]``
lists the cube each level was evaluated on.
"""

from __future__ import annotations

import math

import numpy as np

from ._parallel import pmap
from .conditions import (
    ConditionParams,
    ConditionReport,
    LocalProfiles,
    Verdict,
    a_ratio,
    aggregate_terms,
    intcon_integral,
    lh0_constant,
    lhinf_constant,
    local_grid,
    ninf_integral,
    ninf_shell_integral,
    shifted_dyadic_cubes,
    strf_term,
    trend_verdict,
    uinf_term,
    ussc_alpha_bound,
    ussc_check,
    weakf_term,
)
from .errors import PreconditionError
from .exponent import Cube, ExponentField
from .norms import DEFAULT_TOL
from .operators import nested_dyadic_families

FAMILY_CONDITIONS = ("uinf", "strf", "weakf", "intcon")
DEFAULT_RADIUS = 64.0
NINF_LEVELS = 12


def _level_ratios(levels) -> list:
    return [b / a if a > 0 else math.inf for a, b in zip(levels, levels[1:])]


def _finish(name, params, per_cube, levels, domains, aggregation, notes, **extra) -> ConditionReport:
    verdict = trend_verdict(levels)
    extra = {"level_domains": domains, "level_ratios": _level_ratios(levels), **extra}
    return ConditionReport(name, params, per_cube, levels[-1], verdict, notes, aggregation,
                           list(levels), extra)


def _need_levels(levels: int):
    if levels < 1:
        raise PreconditionError("levels must be >= 1")


def lh0_study(p: ExponentField, region: Cube | None = None, samples: int | None = None,
              levels: int = 4) -> ConditionReport:
    """Local log-Hölder constant with the sample count doubling per level.

    The default region is the domain box in one dimension and the unit cube
    about the origin otherwise; the default level-0 spacing is 1/8 (1-D) or
    1/16 of the region side.
    """
    _need_levels(levels)
    if region is None:
        region = p.domain_box if p.dimension == 1 else Cube.centered(0.5, p.dimension)
    if samples is None:
        samples = int(math.ceil(8 * region.side)) + 1 if region.dim == 1 else 17
    vals = [lh0_constant(p, region, samples * 2**l) for l in range(levels)]
    return _finish("lh0", ConditionParams(), [(region, vals[-1])], vals, [region] * levels, "sup",
                   f"samples per axis {samples}*2^l")


def lhinf_radii(radius: float, levels: int) -> list:
    """``radius ** (2^l)``: the weight ``log(e + R)`` roughly doubles per level."""
    if not radius > math.e:
        raise PreconditionError("radius must exceed e")
    return [math.exp(math.log(radius) * 2**l) for l in range(levels)]


def lhinf_study(p: ExponentField, p_inf: float, radius: float = DEFAULT_RADIUS, levels: int = 4,
                samples: int | None = None) -> ConditionReport:
    """Decay constant ``sup |p - p_inf| log(e + |x|)`` over balls whose
    radii are given by :func:`lhinf_radii`."""
    _need_levels(levels)
    samples = samples or int(round(4096 ** (1.0 / p.dimension))) + 1
    radii = lhinf_radii(radius, levels)
    vals = [lhinf_constant(p, p_inf, R, samples) for R in radii]
    doms = [Cube.centered(R, p.dimension) for R in radii]
    params = ConditionParams(p_inf=p_inf)
    return _finish("lhinf", params, [(doms[-1], vals[-1])], vals, doms, "sup",
                   f"p_inf={p_inf:.6g}; radii {radius:g}^(2^l); {samples} samples per axis")


def ninf_study(p: ExponentField, c: float, p_inf: float, radius: float = DEFAULT_RADIUS,
               levels: int = NINF_LEVELS, m: int = 4096) -> ConditionReport:
    """Partial integrals of ``c^(1/|p - p_inf|)`` over balls of radius ``radius * 2^l``.

    The ball of level 0 and each added shell are integrated on their own
    ``m``-per-side grid, so cells grow with the radius.
    """
    _need_levels(levels)
    if m < 4 or m % 4:
        raise PreconditionError("m must be a positive multiple of 4")
    radii = [radius * 2**l for l in range(levels)]
    vals = [ninf_integral(p, c, p_inf, radii[0], m)]
    for r_in, r_out in zip(radii, radii[1:]):
        vals.append(vals[-1] + ninf_shell_integral(p, c, p_inf, r_in, r_out, m))
    doms = [Cube.centered(R, p.dimension) for R in radii]
    params = ConditionParams(c=c, p_inf=p_inf)
    return _finish("ninf", params, [(doms[-1], vals[-1])], vals, doms, "sum",
                   f"c={c:.6g} p_inf={p_inf:.6g}; m={m} per side on each ball/shell")


def apdot_study(p, region: Cube | None = None, depth: int = 8, levels: int = 4, m: int = 64,
                tol: float = DEFAULT_TOL) -> ConditionReport:
    """Sup of ``||chi_Q||_p ||chi_Q||_p' / |Q|`` over shifted dyadic cubes of
    generation ``depth + l``: the cubes shrink by half per level."""
    _need_levels(levels)
    region = region or p.domain_box
    sups, per_cube, doms = [], [], []
    for l in range(levels):
        cubes = shifted_dyadic_cubes(region, depth + l)
        vals = pmap(lambda q: a_ratio(p, q, m, tol), cubes)
        k = int(np.argmax(vals))
        sups.append(float(vals[k]))
        doms.append(cubes[k])
        per_cube = list(zip(cubes, vals))
    return _finish("apdot", ConditionParams(), per_cube, sups, doms, "sup",
                   f"shifted dyadic cubes of generations {depth}..{depth + levels - 1}; m={m} per cube")


def _family_term(condition, lp: LocalProfiles, params: ConditionParams, quad_points: int) -> float:
    lam, tau, r = params.lam, params.tau, params.r
    if condition == "strf":
        return strf_term(lp, lam, tau, r)
    if condition == "weakf":
        return weakf_term(lp, lam, tau, r)
    if condition == "intcon":
        return lp.measure * intcon_integral(lp, lam, tau, r, params.gamma0, quad_points)
    raise PreconditionError(f"unknown family condition {condition!r}")


def family_study(condition: str, p, params: ConditionParams, base: Cube | None = None,
                 levels: int = 4, depth: int = 4, m: int = 4096, mode: str = "rearrangement",
                 quad_points: int = 64) -> ConditionReport:
    """Family sums over nested dyadic families.

    Level ``l`` tiles ``2^l * base`` by cubes of side ``base.side / 2^depth``;
    ``m`` is the resolution per side of ``base``, so each cube gets
    ``m / 2^depth`` cells per side.
    """
    if condition not in FAMILY_CONDITIONS:
        raise PreconditionError(f"unknown family condition {condition!r}")
    _need_levels(levels)
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    params.require_small()
    base = base or p.domain_box
    cube_m = m // 2**depth
    if cube_m < 1 or cube_m * 2**depth != m:
        raise PreconditionError(f"m={m} must be a multiple of 2^depth={2**depth}")
    families = nested_dyadic_families(base, levels, depth)
    sums, per_cube, doms = [], [], []
    for l, fam in enumerate(families):
        if condition == "uinf":
            terms = pmap(lambda q: uinf_term(p, q, cube_m, params.lam, params.tau, params.r, mode),
                         fam.cubes)
        else:
            terms = pmap(lambda q: _family_term(condition, LocalProfiles.of(local_grid(p, q, cube_m)),
                                                params, quad_points), fam.cubes)
        per_cube = list(zip(fam.cubes, terms))
        sums.append(aggregate_terms(terms, "sum"))
        scale = 2.0**l
        doms.append(Cube(tuple(c * scale for c in base.corner), base.side * scale))
    notes = f"{len(families[-1])} cubes at the last level; {cube_m} cells per cube side"
    if condition == "uinf":
        notes = f"mode={mode}; " + notes
    return _finish(condition, params, per_cube, sums, doms, "sum", notes)


def ussc_study(p: ExponentField, alpha: float | None = None, N: float | None = math.e,
               n: int | None = None, log_N: float | None = None, samples: int = 4096) -> ConditionReport:
    """:func:`~varlp_lab.conditions.ussc_check` with the check ``alpha``
    defaulting to half of its admissible bound."""
    n = n or p.dimension
    if alpha is None:
        alpha = 0.5 * ussc_alpha_bound(p.p_minus, n)
    rep = ussc_check(p, alpha, None if log_N is not None else N, n, samples, log_N=log_N)
    lo = rep.per_cube[0][0].corner[0]
    hi = rep.per_cube[-1][0].upper[0]
    rep.extra["level_domains"] = [Cube((lo,), hi - lo)]
    return rep


def combine_verdicts(verdicts) -> Verdict:
    """Summary over a parameter scan of an existential condition:
    bounded if some tuple is bounded, growing if none is but some grows."""
    vs = [Verdict(v) for v in verdicts]
    if any(v in (Verdict.BOUNDED, Verdict.PASS) for v in vs):
        return Verdict.BOUNDED
    if any(v in (Verdict.GROWING, Verdict.FAIL) for v in vs):
        return Verdict.GROWING
    return Verdict.INCONCLUSIVE
