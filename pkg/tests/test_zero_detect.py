import math

import pytest

from diffbundle.errors import PreconditionError
from diffbundle.zero_detect import (ZeroDetectResult, check_lemma_A1, check_lemma_A3,
                                    flatness_probe, functional_F, grid_minimum,
                                    load_fixture_suite, run_fixture_suite)


def test_constant_closed_forms():
    assert functional_F(lambda x: 1.0).f_value == pytest.approx(math.exp(-math.e), abs=1e-9)
    assert functional_F(lambda x: 2.0).f_value == pytest.approx(math.exp(-math.exp(0.5)), abs=1e-9)


def test_identity_has_a_zero():
    res = functional_F(lambda x: x)
    assert res.zero_detected and res.f_value == 0.0 and math.isinf(res.log_log_value)


def test_interior_zero_found_by_quadrature_alone():
    res = functional_F(lambda x: (x - 1 / 3) ** 2, grid_check=False)
    assert res.zero_detected


def test_negative_input_rejected():
    with pytest.raises(PreconditionError):
        functional_F(lambda x: x - 0.5)


def test_result_invariant():
    with pytest.raises(ValueError):
        ZeroDetectResult(1.0, 0.1, True)
    with pytest.raises(ValueError):
        ZeroDetectResult(math.inf, 0.0, False)


def test_fixture_suite_verdicts():
    fixtures = load_fixture_suite()
    assert len(fixtures) == 20
    out = run_fixture_suite(fixtures)
    assert out["passed"]
    for row in out["fixtures"]:
        assert row["zero_detected"] == (row["grid_min"] < 1e-12)
        assert 0.0 <= row["f_value"] < math.exp(-1.0)


def test_grid_minimum():
    assert grid_minimum(lambda x: (x - 0.5) ** 2) == 0.0


@pytest.mark.parametrize("f, C, lhs", [
    (lambda x: 1.0, 1.0, math.exp(-1.0)),
    (lambda x: 1.0 + x, 1.0, 0.5),
])
def test_lower_bound_closed_forms(f, C, lhs):
    rep = check_lemma_A1(f, C)
    assert rep.lhs == pytest.approx(lhs, abs=1e-9)
    assert rep.holds


def test_lower_bound_constant_three():
    rep = check_lemma_A1(lambda x: 3.0, 1.0)
    assert rep.lhs == pytest.approx(math.exp(-1.0 / 3.0), abs=1e-9)
    assert rep.lhs <= 3.0 and rep.holds


def test_lower_bound_rejects_zero():
    with pytest.raises(PreconditionError):
        check_lemma_A1(lambda x: x, 1.0)


def test_blowup_quadratic():
    rep = check_lemma_A3(lambda t, x: t * t + (x - 0.5) ** 2, 0.0, 0.5, (-0.1, 0.1))
    assert rep.c_fit >= 2 * math.atan(5.0) - 0.05
    assert rep.holds


def test_blowup_x_independent():
    rep = check_lemma_A3(lambda t, x: t * t, 0.0, 0.5, (-0.1, 0.1))
    assert rep.c_fit > 0


def test_blowup_needs_a_zero():
    with pytest.raises(PreconditionError):
        check_lemma_A3(lambda t, x: 1.0 + t * t, 0.0, 0.5, (-0.1, 0.1))


def test_flatness_quadratic_family():
    rep = flatness_probe(lambda t, x: (x - 0.5) ** 2 + t * t, 0.0, 3, h=1e-2)
    assert rep.verdict
    assert all(abs(d) < 1e-4 for _, d, _ in rep.derivative_estimates)


def test_flatness_constant_family_is_exactly_zero():
    rep = flatness_probe(lambda t, x: x, 0.0, 3)
    assert all(d == 0.0 for _, d, _ in rep.derivative_estimates)


def test_flatness_requires_zero():
    with pytest.raises(PreconditionError):
        flatness_probe(lambda t, x: 1.0 + t * t, 0.0, 2)
