import math

import pytest

from diffbundle.bundle import validate
from diffbundle.bundle_io import bundle_from_dict, bundle_to_json
from diffbundle.errors import PreconditionError
from diffbundle.group import get_group
from diffbundle.zoo import (FIXTURES, describe, doubled_line_bundle, doubled_line_certificate,
                            doubled_line_contraction, doubled_line_partition_attempts,
                            fixture_names, hopf_fixture, mobius_search, product_group_check,
                            projective_description, projective_space_fixture,
                            sphere_comparison_check, winding_comparison_check)


def test_fixture_names_include_cylinders():
    names = fixture_names()
    assert names == sorted(names)
    assert {"mobius", "doubled_line", "mobius_rotation", "time_swap"} <= set(names)


@pytest.mark.parametrize("name", ["trivial", "mobius", "winding", "rp1", "rp2", "hopf-1"])
def test_bundle_fixtures_validate(name):
    fx = FIXTURES[name]
    grid = 64 if name in ("trivial", "mobius", "winding") else 200
    assert validate(fx.build(grid)).passed


def test_projective_range():
    with pytest.raises(PreconditionError):
        projective_description(0)
    with pytest.raises(PreconditionError):
        projective_description(7)


def test_hopf_transitions_live_in_circle():
    b = hopf_fixture(1, 50)
    assert b.group == get_group("S1")
    assert b.index_set == ("0", "1")


def test_json_round_trip():
    b = projective_space_fixture(2, 100)
    again = bundle_from_dict(__import__("json").loads(bundle_to_json(b)))
    for p in b.base:
        for i in b.charts_at(p):
            for j in b.charts_at(p):
                assert again.transition(i, j, p) == b.transition(i, j, p)


def test_mobius_search_finds_nothing():
    out = mobius_search(64)
    assert out["candidates"] == 4
    assert not out["trivializing_gauge_found"]
    assert out["min_violation"] == 2.0


def test_doubled_line_certificate():
    cert = doubled_line_certificate()
    assert cert["certificate"] == "non-extension"
    assert cert["ratio_matches_x"] and cert["below_floor"]
    assert cert["max_ulp_error"] <= 1.0
    row = next(r for r in cert["candidates"] if r["alpha_1"] == "one")
    assert row["ratios"] == list(cert["probes"])


def test_doubled_line_has_no_partition():
    assert doubled_line_bundle().partition is None
    attempts = doubled_line_partition_attempts()
    assert attempts and all(v.startswith("rejected") for v in attempts.values())


def test_doubled_line_contraction_ends_at_a_point():
    ends = {doubled_line_contraction(1.0, (x, s)) for x in (-1.0, 0.0, 0.5) for s in (0, 1)}
    assert len(ends) == 1
    assert doubled_line_contraction(0.0, (-0.5, 1)) == (-0.5, 1)
    # the sheets are identified on x > 0
    assert doubled_line_contraction(0.0, (0.5, 1)) == (0.5, 0)


def test_comparison_maps():
    assert winding_comparison_check(100, seed=1)["passed"]
    assert sphere_comparison_check(100, seed=1)["passed"]
    assert product_group_check(get_group("Z/2"), get_group("S1"), samples=100)["passed"]


def test_winding_single_point_value():
    out = winding_comparison_check(10)
    assert out["single_point_value"] == 5.0


def test_describe_known_and_unknown():
    text = describe("mobius")
    assert "group: Z/2" in text and "g_01" in text
    assert "certificate" in describe("doubled_line")
    assert "kind: cylinder" in describe("time_swap")
    with pytest.raises(KeyError):
        describe("klein_bottle")
