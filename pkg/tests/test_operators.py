import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from varlp_lab.errors import AlignmentError, FamilyError, PreconditionError
from varlp_lab.exponent import Cube, ExponentField, GridFunction
from varlp_lab.operators import (
    CubeFamily,
    averaging,
    dyadic_family,
    maximal,
    nested_dyadic_families,
    operator_norm_probe,
    restrict,
    slab_subset,
    uncentered_lp_norm_constant,
)
from varlp_lab.rearrange import extremal_subset

UNIT = Cube.interval(0.0, 1.0)
values = st.floats(-1e3, 1e3)


@st.composite
def grid_pairs(draw):
    n = draw(st.sampled_from([1, 2]))
    m = draw(st.integers(1, 24 if n == 1 else 6))
    cube = Cube((0.0,) * n, 1.0)
    a = draw(arrays(np.float64, m**n, elements=values))
    b = draw(arrays(np.float64, m**n, elements=values))
    return GridFunction(cube, m, a), GridFunction(cube, m, b)


def maximal_oracle_1d(vals):
    a = np.abs(vals)
    m = a.size
    out = np.zeros(m)
    for i in range(m):
        out[i] = max(a[s:e].mean() for s in range(i + 1) for e in range(i + 1, m + 1))
    return out


# -- maximal ----------------------------------------------------------------


def test_maximal_of_constant_is_the_constant():
    for cube in (UNIT, Cube((0.0, 0.0), 2.0), Cube((0.0, 0.0, 0.0), 1.0)):
        f = GridFunction.constant(cube, 4, -3.5)
        assert np.allclose(maximal(f).values, 3.5, rtol=1e-14)


def test_maximal_matches_window_oracle():
    rng = np.random.default_rng(0)
    for m in (1, 2, 7, 16):
        vals = rng.normal(size=m)
        got = maximal(GridFunction(UNIT, m, vals)).values
        assert np.allclose(got, maximal_oracle_1d(vals), rtol=1e-13, atol=0)


def test_maximal_window_cap_limits_the_search():
    f = GridFunction(UNIT, 4, [0.0, 0.0, 0.0, 8.0])
    assert maximal(f, window_cap=1).values.tolist() == [0.0, 0.0, 0.0, 8.0]
    assert maximal(f, window_cap=2).values.tolist() == [0.0, 0.0, 4.0, 8.0]
    assert maximal(f).values.tolist() == [2.0, 8 / 3, 4.0, 8.0]
    with pytest.raises(PreconditionError):
        maximal(f, window_cap=0)


@given(grid_pairs())
def test_maximal_dominates_the_function(fg):
    f, _ = fg
    assert np.all(maximal(f).values >= np.abs(f.values) * (1 - 1e-12))


@given(grid_pairs())
def test_maximal_is_sublinear(fg):
    f, g = fg
    lhs = maximal(f.with_values(f.values + g.values)).values
    rhs = maximal(f).values + maximal(g).values
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-9)


# -- averaging and families -------------------------------------------------


def test_averaging_over_the_whole_cube_is_the_mean():
    vals = np.random.default_rng(1).normal(size=16)
    f = GridFunction(UNIT, 16, vals)
    out = averaging(f, CubeFamily([UNIT]))
    assert np.allclose(out.values, vals.mean(), rtol=1e-14)


def test_averaging_a_level_set_indicator_gives_its_fraction():
    p = GridFunction(Cube.interval(0, 4), 32, np.random.default_rng(2).uniform(1.5, 3.0, 32))
    fam = dyadic_family(p.cube, 2)
    chi = np.zeros(32)
    for q in fam:
        sub = restrict(p, q)
        e = extremal_subset(sub, 0.25, "high")
        start = round((q.corner[0] - p.cube.corner[0]) / p.cell_side)
        chi[start + e] = 1.0
    out = averaging(p.with_values(chi), fam)
    assert np.allclose(out.values, 0.25, rtol=1e-14)


def test_averaging_off_the_family_is_zero():
    f = GridFunction.constant(Cube.interval(0, 4), 8, 2.0)
    out = averaging(f, CubeFamily([Cube.interval(0, 1)]))
    assert out.values.tolist() == [2.0, 2.0] + [0.0] * 6


def test_family_checks():
    with pytest.raises(FamilyError):
        CubeFamily([Cube.interval(0, 2), Cube.interval(1, 3)])
    CubeFamily([Cube.interval(0, 1), Cube.interval(1, 2)])
    with pytest.raises(AlignmentError):
        averaging(GridFunction.constant(UNIT, 4, 1.0), CubeFamily([Cube.interval(0.1, 0.5)]))
    fams = nested_dyadic_families(Cube.centered(2.0), 3, 1)
    assert [len(f) for f in fams] == [2, 4, 8]
    assert all(q.side == 2.0 for f in fams for q in f)
    back = CubeFamily.from_dict(fams[1].to_dict())
    assert back.cubes == fams[1].cubes


def test_recursively_subdivided_cubes_are_disjoint():
    q = Cube((0.1, 0.3), 0.7)
    kids = []
    for k in q.subdivide(1):
        kids += list(k.subdivide(2))
    assert len(CubeFamily(kids)) == 64


# -- norm probes ------------------------------------------------------------


def test_averaging_is_a_contraction_for_constant_exponent():
    p = GridFunction.constant(Cube.interval(0, 4), 32, 2.0)
    res = operator_norm_probe(p, dyadic_family(p.cube, 2), trials=12)
    assert res.ratio <= 1 + 1e-6
    assert res.evaluated > 0


def test_maximal_probe_for_constant_exponent_stays_below_the_sharp_constant():
    sharp = uncentered_lp_norm_constant(2.0)
    res = operator_norm_probe(ExponentField.constant(2.0), "maximal", 12, m=64,
                              region=Cube.centered(1.0))
    assert 1.0 <= res.ratio <= sharp * (1 + 1e-6)


def test_probe_is_monotone_in_trials():
    p = GridFunction(UNIT, 32, np.random.default_rng(3).uniform(1.5, 4.0, 32))
    ratios = [operator_norm_probe(p, "maximal", t).ratio for t in (1, 3, 6, 12)]
    assert ratios == sorted(ratios)


def test_step_exponent_probe_grows_on_shrinking_cubes():
    step = ExponentField.step(2.0, 3.0)
    ratios = [operator_norm_probe(step, "maximal", 6, m=64, region=Cube.centered(2.0 ** (-4 * k))).ratio
              for k in range(2, 6)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 2 * ratios[0]


def test_probe_rejects_bad_selectors():
    p = GridFunction.constant(UNIT, 4, 2.0)
    with pytest.raises(PreconditionError):
        operator_norm_probe(p, "centered", 2)
    with pytest.raises(PreconditionError):
        operator_norm_probe(ExponentField.constant(2.0), "maximal", 2)


def test_uncentered_constant_values():
    assert uncentered_lp_norm_constant(2.0) == pytest.approx(1 + math.sqrt(2), rel=1e-13)
    for p in (1.2, 3.0, 8.0):
        x = uncentered_lp_norm_constant(p)
        assert (p - 1) * x**p - p * x ** (p - 1) - 1 == pytest.approx(0.0, abs=1e-9 * x**p)
        assert x > 1


# -- slab subsets -----------------------------------------------------------


def test_slab_examples():
    slab, bound = slab_subset(Cube.interval(1.0, 2.0), 0.5)
    assert (slab.axis, slab.lower, slab.upper) == (0, 1.0, 1.5)
    assert slab.measure == 0.5 and bound == 2.0
    # worst ratio is |2| / |1.5|
    assert 2.0 / 1.5 <= bound

    q = Cube((3.0, -2.0), 1.0)
    slab, bound = slab_subset(q, 0.25)
    assert (slab.axis, slab.lower, slab.upper) == (0, 3.0, 3.25)
    assert bound == pytest.approx(math.sqrt(2) / 0.25)
    assert slab.contains([[3.1, -1.5], [3.5, -1.5]]).tolist() == [True, False]


def test_slab_on_the_negative_side_faces_the_origin():
    slab, _ = slab_subset(Cube((-5.0, 0.5), 1.0), 0.5)
    assert (slab.axis, slab.lower, slab.upper) == (0, -4.5, -4.0)


def test_slab_preconditions():
    with pytest.raises(PreconditionError):
        slab_subset(Cube.interval(-1.0, 1.0), 0.5)
    with pytest.raises(PreconditionError):
        slab_subset(Cube.interval(1.0, 2.0), 1.0)
    with pytest.raises(PreconditionError):
        slab_subset(Cube((0.0, -0.5), 1.0), 0.5)
