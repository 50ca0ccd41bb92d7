import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffbundle.errors import MembershipError, PreconditionError
from diffbundle.group import get_group
from diffbundle.milnor import (BGPoint, MilnorPoint, bg_cover_member, bg_partition_value,
                               bg_partition_values, bg_section, contraction, cover_threshold,
                               eg_act, eg_divide, eg_project, equivariant_homotopy,
                               even_shuffle_homotopy, interpolate_disjoint, odd_shuffle_homotopy,
                               point_gap, random_point, variation_distance)

Z2 = get_group("Z/2")
S1 = get_group("S1")


def test_point_validation():
    with pytest.raises(PreconditionError):
        MilnorPoint(Z2, ())
    with pytest.raises(PreconditionError):
        MilnorPoint(Z2, ((0, 0.5, 1), (0, 0.5, -1)))
    with pytest.raises(PreconditionError):
        MilnorPoint(Z2, ((0, 0.5, 1), (1, 0.4, -1)))


def test_build_drops_zero_weights_and_sorts():
    p = MilnorPoint.build(Z2, [(3, 0.25, 1), (0, 0.75, -1), (1, 0.0, 1)])
    assert p.indices == (0, 3)
    assert p.n == 3


def test_project_two_entries():
    p = MilnorPoint(Z2, ((0, 0.5, -1), (2, 0.5, 1)))
    b = eg_project(p)
    assert b.point.entries == ((0, 0.5, 1), (2, 0.5, -1))


def test_bg_point_requires_canonical_gauge():
    with pytest.raises(PreconditionError):
        BGPoint(MilnorPoint(Z2, ((0, 1.0, -1),)))


def test_divide_recovers_element():
    p = MilnorPoint(S1, ((0, 0.3, 0.5), (1, 0.7, 2.0)))
    assert eg_divide(p, eg_act(p, 1.25)) == pytest.approx(1.25)
    q = MilnorPoint(S1, ((0, 0.3, 0.5), (1, 0.7, 2.5)))
    assert eg_divide(p, q) is None
    assert eg_divide(p, MilnorPoint(S1, ((0, 1.0, 0.5),))) is None


def test_cover_boundary():
    assert cover_threshold(1) == 0.125
    at = eg_project(MilnorPoint(Z2, ((0, 0.875, 1), (1, 0.125, 1))))
    above = eg_project(MilnorPoint(Z2, ((0, 0.874, 1), (1, 0.126, 1))))
    assert not bg_cover_member(1, at)
    assert bg_cover_member(1, above)


def test_partition_value_example():
    b = eg_project(MilnorPoint(Z2, ((0, 0.6, 1), (1, 0.4, -1))))
    expected = 1.0 / (1.0 + math.exp(10.0 - 1.0 / 0.15))
    assert bg_partition_value(0, b) == pytest.approx(expected, rel=1e-12)
    assert bg_partition_value(0, b) == pytest.approx(0.0344, abs=1e-4)
    assert sum(bg_partition_values(b).values()) == pytest.approx(1.0, abs=1e-15)


def test_section_outside_cover_raises():
    b = eg_project(MilnorPoint(Z2, ((0, 0.95, 1), (1, 0.05, 1))))
    with pytest.raises(MembershipError):
        bg_section(1, b)


def test_section_is_gauge_independent():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = random_point(S1, 4, rng)
        b = eg_project(p)
        b2 = eg_project(eg_act(p, S1.sample(rng)))
        for i in b.weights:
            if bg_cover_member(i, b):
                s = bg_section(i, b)
                assert s.elements[i] == S1.identity
                assert point_gap(s, bg_section(i, b2)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.0, 1.0))
def test_shuffles_equivariant_and_normalised(seed, t):
    rng = np.random.default_rng(seed)
    p = random_point(S1, 5, rng)
    g = S1.sample(rng)
    for h in (odd_shuffle_homotopy, even_shuffle_homotopy):
        x = h(p, t)
        assert abs(math.fsum(x.weights.values()) - 1.0) <= 1e-12
        assert point_gap(h(eg_act(p, g), t), eg_act(x, g)) <= 1e-12


def test_shuffle_endpoints():
    p = MilnorPoint(Z2, ((0, 0.5, 1), (1, 0.25, -1), (3, 0.25, 1)))
    assert odd_shuffle_homotopy(p, 0.0) == p
    assert odd_shuffle_homotopy(p, 1.0).indices == (0, 2, 6)
    assert even_shuffle_homotopy(p, 1.0).indices == (1, 3, 7)
    assert even_shuffle_homotopy(p, 0.0) == p


def test_shuffle_is_continuous_in_time():
    rng = np.random.default_rng(11)
    p = random_point(S1, 4, rng)
    ts = np.linspace(0.0, 1.0, 2001)
    for h in (odd_shuffle_homotopy, even_shuffle_homotopy):
        pts = [h(p, float(t)) for t in ts]
        jumps = [variation_distance(a, b) for a, b in zip(pts, pts[1:])]
        assert max(jumps) < 0.05


def test_interpolation_requires_parity():
    p = MilnorPoint(Z2, ((1, 1.0, 1),))
    q = MilnorPoint(Z2, ((3, 1.0, 1),))
    with pytest.raises(PreconditionError):
        interpolate_disjoint(p, q, 0.5)


def test_interpolation_endpoints_and_mix():
    p = MilnorPoint(Z2, ((0, 1.0, 1),))
    q = MilnorPoint(Z2, ((1, 1.0, -1),))
    assert interpolate_disjoint(p, q, 0.0) == p
    assert interpolate_disjoint(p, q, 1.0) == q
    mid = interpolate_disjoint(p, q, 0.5)
    assert mid.weight(0) == pytest.approx(0.5)


def test_contraction_endpoints():
    h = contraction(S1)
    p = random_point(S1, 3, np.random.default_rng(2))
    assert point_gap(h(p, 0.0), p) == 0.0
    assert h(p, 1.0) == MilnorPoint(S1, ((0, 1.0, S1.identity),))


def test_equivariant_homotopy_rejects_non_equivariant_maps():
    base = MilnorPoint(Z2, ((0, 1.0, 1),))
    with pytest.raises(PreconditionError):
        equivariant_homotopy(lambda x: base, lambda x: base, Z2, lambda x, g: x * g,
                             [1], [-1])


def test_round_trip_dict():
    p = random_point(S1, 4, np.random.default_rng(0))
    assert MilnorPoint.from_dict(p.to_dict()).close(p, 1e-15)
