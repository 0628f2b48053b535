import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varlp_lab.errors import DomainError, InvalidExponentError, PreconditionError, ShapeError
from varlp_lab.exponent import (
    Cube,
    ExponentField,
    GridFunction,
    conjugate,
    conjugate_values,
    discretize,
    essential_bounds,
    eval as eval_field,
    exponent_tower,
    field_from_dict,
    field_to_dict,
    load_exponent,
    nekvinda_envelope,
    save_exponent,
    two_valued_grid,
)

E = math.e


def builtin_fields():
    return {
        "constant": ExponentField.constant(2.5),
        "step": ExponentField.step(2.0, 3.0),
        "lh_prototype": ExponentField.family("lh_prototype"),
        "sinloglog": ExponentField.family("sinloglog", c=2.4, alpha=0.4),
        "sinlog": ExponentField.family("sinlog", c=2.5, alpha=0.5),
        "sinintegral_log": ExponentField.family("sinintegral", c=2.5),
        "sinintegral_loglog": ExponentField.family("sinintegral", c=2.5, t0=16.0, phi="loglog"),
        "sinintegral_one": ExponentField.family("sinintegral", c=2.5, alpha=0.5, phi="one"),
    }


# -- evaluation -------------------------------------------------------------


def test_constant_field_evaluates_to_its_value():
    p = ExponentField.constant(2.0, dimension=3)
    assert np.all(p(np.random.default_rng(0).normal(size=(5, 3))) == 2.0)


def test_sinloglog_at_radius_e_is_its_center_value():
    alpha = 0.5
    p = ExponentField.family("sinloglog", dimension=2, c=alpha + 2, alpha=alpha)
    x = np.array([E / math.sqrt(2), E / math.sqrt(2)])
    assert eval_field(p, x) == pytest.approx(2.5, abs=1e-12)


def test_sinintegral_at_start_point_is_c():
    for t0 in (E, 5.0, 16.0):
        p = ExponentField.family("sinintegral", c=2.7, t0=t0)
        assert eval_field(p, t0) == 2.7
        assert eval_field(p, t0 / 2) == 2.7


def test_sinintegral_matches_direct_quadrature():
    from scipy.integrate import quad

    p = ExponentField.family("sinintegral", c=2.5, alpha=0.8, t0=5.0, phi="log")
    for t in (6.0, 20.0, 300.0):
        val, _ = quad(lambda y: math.sin(y) / (y * math.log(y) ** 2), 5.0, t, limit=400)
        assert eval_field(p, t) == pytest.approx(2.5 + 0.8 * val, abs=1e-9)


def test_sinintegral_tail_continues_quadrature_past_switch():
    from varlp_lab.exponent import _SINI_SWITCH

    p = ExponentField.family("sinintegral", c=2.5, phi="log")
    left = eval_field(p, _SINI_SWITCH)
    right = eval_field(p, _SINI_SWITCH * (1 + 1e-12))
    assert right == pytest.approx(left, abs=1e-12)


def test_step_field_uses_threshold_and_axis():
    p = ExponentField.step(2.0, 3.0, threshold=1.0, axis=1, dimension=2)
    assert p(np.array([[5.0, 0.5], [-5.0, 1.5]])).tolist() == [2.0, 3.0]


def test_radial_wrapper_evaluates_profile_at_norm():
    prof = ExponentField.family("lh_prototype")
    p = ExponentField.radial(prof, 3)
    x = np.array([1.0, 2.0, 2.0])
    assert eval_field(p, x) == pytest.approx(eval_field(prof, 3.0))


def test_grid_field_is_piecewise_constant():
    g = GridFunction(Cube.interval(0.0, 2.0), 2, [2.0, 4.0])
    p = ExponentField.from_grid(g)
    assert p(np.array([0.3, 1.7])).tolist() == [2.0, 4.0]
    assert (p.p_minus, p.p_plus) == (2.0, 4.0)


def test_invalid_exponents_are_rejected():
    with pytest.raises(InvalidExponentError):
        ExponentField.constant(1.0)
    with pytest.raises(InvalidExponentError):
        ExponentField.step(0.5, 2.0)
    with pytest.raises(PreconditionError):
        ExponentField.family("sinintegral", c=2.5, t0=2.0)
    with pytest.raises(PreconditionError):
        ExponentField.family("sinloglog", c=2.5)
    with pytest.raises(ShapeError):
        ExponentField.constant(2.0, dimension=2)(np.zeros((3, 3)))


# -- conjugation ------------------------------------------------------------


def test_conjugate_of_constants():
    assert eval_field(conjugate(ExponentField.constant(2.0)), 0.3) == 2.0
    assert eval_field(conjugate(ExponentField.constant(3.0)), 0.3) == 1.5


def test_conjugate_of_two_valued_grid_is_cellwise():
    g = two_valued_grid(Cube.interval(0.0, 1.0), 4, 2.0, 3.0)
    assert conjugate_values(g).values.tolist() == [2.0, 2.0, 1.5, 1.5]
    p = conjugate(ExponentField.from_grid(g))
    assert (p.p_minus, p.p_plus) == (1.5, 2.0)


@given(name=st.sampled_from(sorted(builtin_fields())),
       xs=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=16))
def test_conjugation_is_an_involution(name, xs):
    p = builtin_fields()[name]
    x = np.asarray(xs)
    twice = conjugate(conjugate(p))
    assert np.allclose(twice(x), p(x), rtol=1e-12, atol=0)


def test_conjugate_bounds_are_swapped():
    p = builtin_fields()["sinloglog"]
    q = conjugate(p)
    assert q.p_minus == pytest.approx(p.p_plus / (p.p_plus - 1))
    assert q.p_plus == pytest.approx(p.p_minus / (p.p_minus - 1))


# -- essential bounds -------------------------------------------------------


def test_essential_bounds_examples():
    assert essential_bounds(ExponentField.constant(2.0), Cube.interval(0, 1), 16) == (2.0, 2.0)
    p = ExponentField.from_grid(two_valued_grid(Cube.interval(0, 1), 8, 2.0, 3.0))
    assert essential_bounds(p, Cube.interval(0, 1), 8) == (2.0, 3.0)


def test_sinloglog_bounds_on_e_to_e4_approach_the_analytic_range():
    # log log t runs over [0, log 4] there, so the range is [c, c + alpha sin(log 4)]
    p = ExponentField.family("sinloglog", c=2.5, alpha=0.5)
    want = (2.5, 2.5 + 0.5 * math.sin(math.log(4.0)))
    region = Cube.interval(E, E**4)
    errs = []
    for m in (64, 1024, 16384):
        lo, hi = essential_bounds(p, region, m)
        errs.append(max(abs(lo - want[0]), abs(hi - want[1])))
    assert errs[-1] < 1e-3
    assert errs[0] >= errs[-1]


@given(name=st.sampled_from(sorted(builtin_fields())), child=st.integers(0, 3), k=st.integers(2, 8))
def test_bounds_on_a_dyadic_child_lie_within_the_parent(name, child, k):
    p = builtin_fields()[name]
    parent = Cube.interval(-40.0, 88.0)
    sub = parent.subdivide(2)[child]
    m = 2**k
    lo, hi = essential_bounds(p, parent, m)
    slo, shi = essential_bounds(p, sub, m // 4)
    assert lo <= slo and shi <= hi


# -- sinintegral two-point bound -------------------------------------------


@given(phi=st.sampled_from(["one", "log", "loglog", "sqrtlog"]), alpha=st.floats(0.05, 2.0),
       u1=st.floats(1.0, 12.0), du=st.floats(0.0, 4.0))
def test_sinintegral_increments_obey_the_log_ratio_bound(phi, alpha, u1, du):
    p = ExponentField.family("sinintegral", c=3.0, alpha=alpha, t0=16.0, phi=phi)
    t1, t2 = math.exp(u1), math.exp(u1 + du)
    lhs = abs(eval_field(p, t2) - eval_field(p, t1))
    assert lhs <= alpha * math.log(t2 / t1) / math.log(t1) + 1e-12


# -- towers and Nekvinda's envelope ----------------------------------------


def test_exponent_tower():
    assert exponent_tower(0) == 1.0
    assert exponent_tower(1) == E
    assert exponent_tower(2) == pytest.approx(E**E)
    assert exponent_tower(4) == math.inf


def test_nekvinda_envelope_hand_values():
    assert nekvinda_envelope(1, 0.5, E**4) == pytest.approx(1 / (8 * E**4), rel=1e-14)
    e3 = exponent_tower(3)
    # log t = e^e and log log t = e at t = e_3
    want = 1 / (e3 * E**E * E**1.5)
    assert nekvinda_envelope(2, 0.5, e3) == pytest.approx(want, rel=1e-12)


def test_nekvinda_envelope_is_eventually_below_the_radial_bound():
    ts = np.exp(np.linspace(20, 600, 50))
    for k in (1, 2, 3):
        b = nekvinda_envelope(k, 0.5, ts)
        assert np.all(b[-10:] < 0.1 / (ts[-10:] * np.log(ts[-10:])))


def test_nekvinda_envelope_domain():
    with pytest.raises(DomainError):
        nekvinda_envelope(2, 0.5, 10.0)
    with pytest.raises(PreconditionError):
        nekvinda_envelope(1, 1.5, 100.0)


# -- cubes, grids, serialization -------------------------------------------


def test_cube_subdivide_and_contains():
    q = Cube((0.0, 0.0), 2.0)
    kids = q.subdivide(1)
    assert len(kids) == 4 and all(k.side == 1.0 for k in kids)
    assert q.contains([1.0, 1.0]) and not q.contains([2.0, 1.0])
    assert q.contains([2.0, 1.0], closed=True)
    assert not kids[0].overlaps(kids[1])


def test_grid_function_shape_checks():
    with pytest.raises(ShapeError):
        GridFunction(Cube.interval(0, 1), 3, [1.0, 2.0])
    g = GridFunction.from_callable(Cube((0.0, 0.0), 1.0), 2, lambda x: x[:, 0] + 10 * x[:, 1])
    # row-major with axis 0 the first coordinate
    assert g.values.tolist() == [2.75, 7.75, 3.25, 8.25]
    assert g.grid[1, 0] == 3.25


def test_discretize_samples_cell_centers():
    p = ExponentField.family("lh_prototype")
    g = discretize(p, Cube.interval(0.0, 4.0), 4)
    assert np.allclose(g.values, 2 + 1 / np.log(E + np.array([0.5, 1.5, 2.5, 3.5])))


@pytest.mark.parametrize("name", sorted(builtin_fields()))
def test_field_json_round_trip(name, tmp_path):
    p = builtin_fields()[name]
    path = tmp_path / "p.json"
    save_exponent(p, path)
    q = load_exponent(path)
    x = np.linspace(-50, 50, 101)
    assert np.array_equal(p(x), q(x))
    assert field_to_dict(q) == json.loads(path.read_text())


def test_nested_field_round_trip():
    p = conjugate(ExponentField.radial(ExponentField.family("sinloglog", c=2.4, alpha=0.4), 2))
    q = field_from_dict(json.loads(json.dumps(field_to_dict(p))))
    x = np.random.default_rng(1).normal(size=(10, 2)) * 100
    assert np.array_equal(p(x), q(x))
