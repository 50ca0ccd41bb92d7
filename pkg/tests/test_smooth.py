import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from diffbundle.errors import PreconditionError, StencilError
from diffbundle.smooth import (BumpSpec, SmoothMap, fd_derivative, integrate, make_flat_bump,
                               make_step, make_strict_ramp, max_abs_derivative, step_density)


def test_flat_bump_values():
    phi = make_flat_bump()
    assert phi(0.0) == 0.0
    assert phi(-5.0) == 0.0
    assert phi(1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)


def test_strict_ramp_values():
    ramp = make_strict_ramp()
    assert ramp(-1.0) == 0.0
    assert ramp(0.25) == pytest.approx(0.0183156, abs=1e-7)
    assert ramp(0.3) > ramp(0.2)


def test_step_endpoints_and_midpoint():
    step = make_step(BumpSpec(0.25))
    assert step(0.0) == 0.0
    assert step(0.25) == 0.0
    assert step(1.0) == 1.0
    assert step(0.75) == 1.0
    # the bump is symmetric about 1/2, so the regression constant is exactly one half
    assert step(0.5) == pytest.approx(0.5, abs=1e-12)


def test_step_matches_scipy_quadrature():
    spec = BumpSpec(0.2)
    step, dens = make_step(spec), step_density(spec)
    total = sp_integrate.quad(dens, 0.2, 0.8, epsabs=1e-14)[0]
    for t in (0.3, 0.45, 0.61, 0.77):
        expected = sp_integrate.quad(dens, 0.2, t, epsabs=1e-14)[0] / total
        assert step(t) == pytest.approx(expected, abs=1e-10)


@given(st.floats(-2.0, 3.0), st.floats(-2.0, 3.0))
def test_step_is_monotone(a, b):
    step = make_step()
    lo, hi = min(a, b), max(a, b)
    assert 0.0 <= step(lo) <= step(hi) <= 1.0


def test_bump_spec_rejects_bad_epsilon():
    with pytest.raises(PreconditionError):
        BumpSpec(0.5)
    with pytest.raises(PreconditionError):
        BumpSpec(0.0)


def test_smooth_map_domain():
    f = SmoothMap(lambda x: x, domain=((0.0, 1.0),))
    assert f.contains(0.5) and not f.contains(2.0)
    with pytest.raises(PreconditionError):
        SmoothMap(lambda x: x, domain_dim=2, domain=((0.0, 1.0),))


@pytest.mark.parametrize("f, expected", [
    (lambda x: 1.0, 1.0),
    (lambda x: x, 0.5),
    (lambda x: 1.0 / (1.0 + x * x), math.pi / 4),
])
def test_integrate_closed_forms(f, expected):
    assert integrate(f, 0.0, 1.0) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
def test_integrate_agrees_with_scipy(a, b):
    def f(x):
        return math.exp(-a * x) * math.cos(b * x) + 2.0

    ours = integrate(f, 0.0, 1.0, tol=1e-11)
    ref = sp_integrate.quad(f, 0.0, 1.0, epsabs=1e-13)[0]
    assert ours == pytest.approx(ref, abs=1e-9)


def test_integrate_divergence():
    assert integrate(lambda x: 1.0 / x if x > 0 else math.inf, 0.0, 1.0) == math.inf
    assert integrate(lambda x: 1.0 / abs(x - 0.3) ** 1.5 if x != 0.3 else math.inf,
                     0.0, 1.0, divergence_cap=1e4) == math.inf


def test_integrate_reversed_bounds():
    assert integrate(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5)


def test_fd_derivative_examples():
    assert fd_derivative(lambda t: t * t, 1.0, 1, 1e-3) == pytest.approx(2.0, abs=1e-6)
    assert fd_derivative(math.sin, 0.0, 2, 1e-2) == pytest.approx(0.0, abs=1e-4)
    assert fd_derivative(math.cos, 0.3, 0, 1e-2) == math.cos(0.3)


def test_fd_derivative_higher_orders():
    for k, exact in ((1, math.cos(0.4)), (2, -math.sin(0.4)), (3, -math.cos(0.4))):
        assert fd_derivative(math.sin, 0.4, k, 1e-2) == pytest.approx(exact, abs=1e-6)


def test_fd_derivative_bad_step():
    with pytest.raises((PreconditionError, StencilError)):
        fd_derivative(math.sin, 0.0, 1, 0.0)


def test_max_abs_derivative():
    xs = np.linspace(0.0, 1.0, 101)
    assert max_abs_derivative(lambda x: x ** 3, xs) == pytest.approx(3.0, abs=1e-6)
