import math

import numpy as np
import pytest

from diffbundle.bundle import (CocycleBundle, GaugeTransformation, TotalPoint, classify,
                               cocycle_distance, common_refinement, find_constant_gauge,
                               frame_roundtrip_check, gauge_check, pullback, trivial_like,
                               validate, verify_classification)
from diffbundle.errors import MembershipError, PreconditionError, ValidationError
from diffbundle.milnor import eg_act, eg_project, point_gap
from diffbundle.partition import BaseSpace
from diffbundle.spaces import circle_space
from diffbundle.zoo import (circle_from_reals_fixture, hopf_fixture, mobius_fixture,
                            projective_space_fixture, trivial_fixture)


@pytest.fixture(scope="module")
def mobius():
    return mobius_fixture(64)


def corrupted(bundle):
    bad = dict(bundle.transitions)
    key = next(iter(bad))
    orig = bad[key]
    bad[key] = lambda b: -orig(b) if b[0] < 0.3 else orig(b)
    return CocycleBundle("corrupt", bundle.base, bundle.group, bundle.index_set, bundle.cover,
                         bad, bundle.partition)


def test_mobius_validates(mobius):
    rep = validate(mobius)
    assert rep.passed and rep.max_violation == 0.0 and not rep.uncovered_points


def test_corrupted_cocycle_is_caught():
    # a three-chart cover is needed for a triple overlap to expose the flip
    rp2 = projective_space_fixture(2, 200)
    rep = validate(corrupted(rp2))
    assert not rep.passed
    assert rep.worst_point is not None


def test_uncovered_point_is_reported(mobius):
    cover = {"0": lambda b: b[0] < 3.0, "1": lambda b: b[0] < 3.0}
    b = CocycleBundle("holes", mobius.base, mobius.group, mobius.index_set, cover,
                      mobius.transitions)
    rep = validate(b)
    assert not rep.passed and rep.uncovered_points


def test_change_chart_round_trip(mobius):
    x = TotalPoint("0", (0.0,), -1)
    y = mobius.change_chart(x, "1")
    assert mobius.same_point(x, y)
    assert mobius.change_chart(y, "0") == x


def test_change_chart_outside_cover(mobius):
    b = next(p for p in mobius.base if mobius.charts_at(p) == ("0",))
    with pytest.raises(MembershipError):
        mobius.change_chart(TotalPoint("0", b, 1), "1")


def test_pullback_along_identity(mobius):
    pb = pullback(mobius, lambda b: b, mobius.base)
    assert gauge_check(mobius, pb, GaugeTransformation.identity(mobius)).max_violation == 0.0
    assert validate(pb).passed


def test_pullback_along_constant_map_is_trivial(mobius):
    pb = pullback(mobius, lambda b: (0.0,), mobius.base)
    assert validate(pb).passed
    lam, _ = find_constant_gauge(pb, trivial_like(pb))
    assert lam is not None


def test_pullback_rejects_escaping_map(mobius):
    shrunk = CocycleBundle("arc", mobius.base, mobius.group, ("0",), {"0": lambda b: b[0] < 1.0},
                           {})
    with pytest.raises(PreconditionError):
        pullback(shrunk, lambda b: (2.0,), mobius.base)


def test_no_constant_gauge_trivialises_mobius(mobius):
    lam, tried = find_constant_gauge(mobius, trivial_like(mobius))
    assert lam is None and tried == 4
    assert cocycle_distance(mobius, trivial_like(mobius)) == 2.0


def test_gauge_composition(mobius):
    lam = GaugeTransformation.constant({"0": -1, "1": 1})
    twisted = CocycleBundle("twisted", mobius.base, mobius.group, mobius.index_set, mobius.cover,
                            {("0", "1"): lambda b: -mobius.transition("0", "1", b)})
    assert gauge_check(mobius, twisted, lam).passed
    back = lam.then(lam.inverse(mobius.group), mobius.group)
    assert gauge_check(mobius, mobius, back).passed


def test_gauge_check_requires_shared_cover(mobius):
    other = trivial_fixture(64)
    with pytest.raises(PreconditionError):
        gauge_check(mobius, other, GaugeTransformation.identity(mobius))


def test_common_refinement_preserves_class(mobius):
    a, b = common_refinement(mobius, mobius)
    assert validate(a).passed and validate(b).passed
    # pair (i, j) reads chart i on the left and chart j on the right
    lam = GaugeTransformation({(i, j): (lambda p, i=i, j=j: mobius.transition(j, i, p))
                               for i, j in a.index_set})
    assert gauge_check(a, b, lam).passed
    assert not gauge_check(a, b, GaugeTransformation.identity(a)).passed


def test_classify_requires_partition_and_valid_cocycle(mobius):
    bare = CocycleBundle("bare", mobius.base, mobius.group, mobius.index_set, mobius.cover,
                         mobius.transitions)
    with pytest.raises(PreconditionError):
        classify(bare)
    with pytest.raises(ValidationError):
        classify(corrupted(projective_space_fixture(2, 200)))


def test_classifying_map_is_equivariant(mobius):
    cls = classify(mobius)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = mobius.random_total_point(rng)
        fx = cls.f(x)
        assert point_gap(cls.f(mobius.act(x, -1)), eg_act(fx, -1)) == 0.0
        assert eg_project(fx) == cls.c(x.base)


@pytest.mark.parametrize("build", [
    lambda: trivial_fixture(64),
    lambda: mobius_fixture(64),
    lambda: circle_from_reals_fixture(64),
    lambda: projective_space_fixture(1, 200),
    lambda: projective_space_fixture(2, 200),
    lambda: hopf_fixture(1, 150),
], ids=["trivial", "mobius", "winding", "rp1", "rp2", "hopf-1"])
def test_classification_recovers_bundle(build):
    assert verify_classification(build(), samples=50).passed


def test_frame_roundtrip(mobius):
    assert frame_roundtrip_check(mobius).passed
    assert frame_roundtrip_check(hopf_fixture(1, 100)).passed


def test_single_point_base():
    base = BaseSpace("pt", [(0.0,)])
    b = CocycleBundle("pt", base, mobius_fixture(8).group, ("0",), {"0": lambda p: True}, {})
    assert validate(b).passed
