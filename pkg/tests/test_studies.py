import math

import pytest

from varlp_lab.conditions import ConditionParams, Verdict
from varlp_lab.errors import PreconditionError
from varlp_lab.exponent import Cube, ExponentField
from varlp_lab.studies import (
    apdot_study,
    combine_verdicts,
    family_study,
    lh0_study,
    lhinf_study,
    ninf_study,
    ussc_study,
)

LHP = ExponentField.family("lh_prototype")


def test_combine_verdicts_is_existential():
    assert combine_verdicts(["growing", "bounded", "inconclusive"]) is Verdict.BOUNDED
    assert combine_verdicts([Verdict.FAIL, Verdict.PASS]) is Verdict.BOUNDED
    assert combine_verdicts(["growing", "inconclusive"]) is Verdict.GROWING
    assert combine_verdicts(["inconclusive"]) is Verdict.INCONCLUSIVE
    assert combine_verdicts([]) is Verdict.INCONCLUSIVE


def test_level_bookkeeping():
    rep = ninf_study(LHP, math.exp(-2), 2.0, levels=3)
    assert len(rep.levels) == 3 == len(rep.extra["level_domains"])
    assert rep.aggregate == rep.levels[-1]
    sides = [q.side for q in rep.extra["level_domains"]]
    assert sides[1] == 2 * sides[0] and sides[2] == 2 * sides[1]
    ratios = rep.extra["level_ratios"]
    assert ratios == pytest.approx([b / a for a, b in zip(rep.levels, rep.levels[1:])])


def test_study_verdicts_for_the_prototype_and_the_step():
    step = ExponentField.step(2.0, 3.0)
    assert lh0_study(LHP, levels=3).verdict is Verdict.BOUNDED
    assert lh0_study(step, region=Cube.interval(-1, 1), levels=4).verdict is Verdict.GROWING
    assert lhinf_study(LHP, 2.0, levels=3).verdict is Verdict.BOUNDED
    assert apdot_study(step, depth=8, levels=4, m=64).verdict is Verdict.GROWING


def test_family_study_constant_is_zero():
    p = ExponentField.constant(2.0)
    for cond in ("uinf", "strf", "weakf", "intcon"):
        rep = family_study(cond, p, ConditionParams(lam=0.125, tau=0.125), base=Cube.centered(4.0),
                           levels=2, depth=1, m=64)
        assert rep.levels == [0.0, 0.0] and rep.verdict is Verdict.BOUNDED


def test_ussc_study_defaults_alpha_to_half_the_bound():
    p = ExponentField.family("sinloglog", c=2.4, alpha=0.4)
    rep = ussc_study(p)
    assert rep.params.alpha == pytest.approx(0.5 * rep.extra["alpha_bound"])
    assert rep.verdict is Verdict.PASS


def test_study_preconditions():
    with pytest.raises(PreconditionError):
        lh0_study(LHP, levels=0)
    with pytest.raises(PreconditionError):
        family_study("nope", LHP, ConditionParams())
