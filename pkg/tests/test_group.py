import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffbundle.errors import GroupMismatchError, PreconditionError
from diffbundle.group import (angle_distance, builtin_groups, check_axioms, check_chart,
                              check_representation, get_group, product, require_same,
                              smoothness_probe_action)


@pytest.mark.parametrize("grp", builtin_groups(), ids=lambda g: g.name)
def test_axioms(grp):
    assert check_axioms(grp, 300, seed=1).passed


def test_signs_multiply_exactly():
    z2 = get_group("Z/2")
    assert z2.mul(-1, -1) == 1
    assert z2.is_identity(z2.mul(-1, -1))
    assert z2.inv(-1) == -1


def test_divide_convention():
    r = get_group("R")
    assert r.divide(2.0, 5.0) == 3.0
    rp = get_group("R>0")
    assert rp.divide(2.0, 6.0) == pytest.approx(3.0)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_circle_wraps(a, b):
    s1 = get_group("S1")
    c = s1.mul(a, b)
    assert 0.0 <= c < 2 * math.pi
    assert angle_distance(c, a + b) <= 1e-9


def test_circle_distance_is_angular():
    assert angle_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)


def test_integer_lattice():
    z2 = get_group("Z^2")
    assert tuple(z2.mul((1, 2), (3, -5))) == (4, -3)


def test_product_group():
    g = product(get_group("Z/2"), get_group("S1"))
    x = g.mul((-1, 1.0), (-1, 2.0))
    assert x[0] == 1 and x[1] == pytest.approx(3.0)
    assert check_axioms(g, 200).passed


def test_unknown_group():
    with pytest.raises(PreconditionError):
        get_group("SU7")


def test_mismatch():
    with pytest.raises(GroupMismatchError):
        require_same(get_group("R"), get_group("S1"))


def test_representations_are_homomorphisms():
    for grp in builtin_groups():
        if grp.representation is not None:
            assert check_representation(grp, 100) <= 1e-12


def test_charts_round_trip():
    for grp in builtin_groups():
        if grp.chart is not None and grp.chart.dim > 0:
            assert check_chart(grp, 50) <= 1e-12


def test_smoothness_probe_verdicts():
    assert smoothness_probe_action(get_group("S1")).verdict == "pass"
    assert smoothness_probe_action(get_group("Z/2")).verdict == "not-applicable"


def test_smoothness_probe_flags_a_kink():
    # |x| + y has no derivative at x = 0, so coarse and fine gradients disagree there
    grp = get_group("R")
    rep = smoothness_probe_action(grp, action=lambda x, y: np.abs(x * 1e4) + y, radius=1e-4)
    assert rep.verdict == "fail" or rep.max_instability > 1.0


def test_general_linear_representation():
    gl = get_group("GL2")
    rng = np.random.default_rng(0)
    a = gl.sample(rng)
    assert np.allclose(gl.mul(a, gl.inv(a)), np.eye(2))


def test_precondition_on_missing_representation():
    missing = [g for g in builtin_groups() if g.representation is None]
    if not missing:
        pytest.skip("every builtin group carries a representation")
    with pytest.raises(PreconditionError):
        check_representation(missing[0], 10)
