import math

import numpy as np
import pytest

from diffbundle.bundle import TotalPoint
from diffbundle.errors import PreconditionError
from diffbundle.homotopy import (SliceTrivialization, cylinder_from_homotopy, endpoint_transport,
                                 inverse_gap, mobius_rotation_cylinder, product_cylinder,
                                 reversed_cylinder, slab, slice_cover, slice_cover_audit,
                                 switch_jumps, time_swap_cylinder, transport_equivariance)
from diffbundle.spaces import circle_space
from diffbundle.zoo import mobius_fixture, trivial_fixture


def test_slab_endpoints():
    assert slab(1, 1) == (-0.5, 1.5)
    assert slab(2, 1) == (-0.25, 0.75)
    assert slab(4, 3) == (0.375, 0.875)


@pytest.fixture(scope="module")
def product():
    cyl = product_cylinder(8)
    return cyl, slice_cover(cyl, 2)


def test_time_independent_cover_contains_constant_indices(product):
    cyl, cover = product
    target = mobius_fixture()
    for b in cyl.base:
        charts = target.charts_at(b)
        for n in (1, 2):
            for i in target.index_set:
                assert cover.contains(b, (i,) * n) == (i in charts)


def test_slice_cover_audit(product):
    cyl, cover = product
    audit = slice_cover_audit(cyl, cover)
    assert audit["passed"] and audit["checked"] > 0


def test_slice_weights_form_partition(product):
    cyl, cover = product
    for b in cyl.base:
        w = cover.weights(b)
        assert math.fsum(w.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(v >= 0.0 for v in w.values())


def test_product_transport_is_identity(product):
    cyl, cover = product
    res = endpoint_transport(cyl, 2, cover)
    assert res.report.passed and res.base_composite_ok
    x = TotalPoint("0", (cyl.base.points[1], 0.0), -1)
    y = res.apply(x)
    assert y.base == (cyl.base.points[1], 1.0)
    assert cyl.bundle.change_chart(y, "0").fiber == -1


def test_extra_factor_with_zero_speed_is_identity(product):
    cyl, cover = product
    plain = endpoint_transport(cyl, 2, cover)
    padded = endpoint_transport(cyl, 2, cover, extra_factors=(("1", "0"),))
    for b in cyl.base:
        for i in cyl.bundle.charts_at((b, 0.0)):
            x = TotalPoint(i, (b, 0.0), 1)
            assert padded.apply(x) == plain.apply(x)
    assert any(v == 0.0 for b in cyl.base for _, v in padded.composite_log[b])


def test_single_chart_uses_one_factor():
    cyl = cylinder_from_homotopy(trivial_fixture(8), lambda b, t: b, circle_space(6))
    cover = slice_cover(cyl, 1)
    for b in cyl.base:
        assert cover.multi_indices(b) == [("0",)]
    res = endpoint_transport(cyl, 1, cover)
    assert res.report.passed
    assert all(len(v) == 1 for v in res.composite_log.values())


def test_cylinder_needs_partition():
    bare = mobius_fixture(16)
    bare.partition = None
    with pytest.raises(PreconditionError):
        cylinder_from_homotopy(bare, lambda b, t: b, circle_space(4))


@pytest.fixture(scope="module")
def rotation():
    cyl, target, F, base = mobius_rotation_cylinder(12)
    cover = slice_cover(cyl, 4)
    return cyl, target, F, base, cover, endpoint_transport(cyl, 4, cover)


def test_rotation_transport_gauge(rotation):
    cyl, *_, res = rotation
    assert res.report.passed
    assert res.base_composite_ok
    assert transport_equivariance(cyl, res, samples=20, seed=1) <= 1e-12


def test_rotation_half_turn_moves_points(rotation):
    cyl, *_, res = rotation
    b = cyl.base.points[0]
    y = res.apply(TotalPoint(cyl.bundle.charts_at((b, 0.0))[0], (b, 0.0), 1))
    assert y.base == (b, 1.0)


def test_reverse_time_inverts(rotation):
    cyl, target, F, base, _, res = rotation
    back = endpoint_transport(reversed_cylinder(target, F, base), 4)
    assert back.report.passed
    assert inverse_gap(res, back, cyl) <= 1e-6


def test_time_swap_realises_mixed_index():
    cyl = time_swap_cylinder()
    b = cyl.base.points[0]
    cover = slice_cover(cyl, 2)
    assert cover.multi_indices(b) == [("0", "1")]
    glued = SliceTrivialization(cyl, b, ("0", "1"))
    assert glued.coordinate(0.0) == ("0", 1.0)
    chart, c = glued.coordinate(1.0)
    assert chart == "1" and c == 2.0


def test_time_swap_glue_is_continuous():
    cyl = time_swap_cylinder(transition="1 + t*t")
    triv = SliceTrivialization(cyl, cyl.base.points[0], ("0", "1"))
    assert switch_jumps(triv) < 1e-8
    ts = np.linspace(0.0, 1.0, 501)
    pts = [triv.point(float(t), 1.0) for t in ts]
    jumps = [abs(cyl.bundle.change_chart(q, p.chart).fiber - p.fiber) for p, q in zip(pts, pts[1:])]
    assert max(jumps) < 0.05


def test_local_coordinate_inverts_point():
    cyl = time_swap_cylinder(transition="1 + t*t")
    triv = SliceTrivialization(cyl, cyl.base.points[0], ("0", "1"))
    for t in (0.1, 0.5, 0.9):
        assert triv.local_coordinate(triv.point(t, 3.0)) == pytest.approx(3.0, rel=1e-12)
