"""Smooth cutoff functions, adaptive quadrature and finite-difference probes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .config import tolerance
from .errors import PreconditionError, StencilError

SMOOTHNESS_CLASSES = ("analytic", "smooth", "piecewise-defined-smooth")


@dataclass(frozen=True)
class SmoothMap:
    """A callable standing in for a smooth map between Euclidean boxes.

    ``domain`` is a tuple of ``(lo, hi)`` pairs, one per input coordinate;
    ``None`` means unbounded. Nothing symbolic is stored, so smoothness is
    only ever probed numerically.
    """

    fn: Callable
    domain_dim: int = 1
    codomain_dim: int = 1
    domain: tuple[tuple[float, float], ...] | None = None
    hint: str = "smooth"
    name: str = ""

    def __post_init__(self):
        if self.domain_dim < 1 or self.codomain_dim < 1:
            raise PreconditionError("dimensions must be positive")
        if self.hint not in SMOOTHNESS_CLASSES:
            raise PreconditionError(f"unknown smoothness class {self.hint!r}")
        if self.domain is not None and len(self.domain) != self.domain_dim:
            raise PreconditionError("domain box does not match domain_dim")

    def __call__(self, *args):
        return self.fn(*args)

    def contains(self, *args) -> bool:
        if self.domain is None:
            return True
        return all(lo <= a <= hi for a, (lo, hi) in zip(args, self.domain))


def as_smooth_map(f, domain_dim: int = 1) -> SmoothMap:
    if isinstance(f, SmoothMap):
        return f
    return SmoothMap(f, domain_dim=domain_dim)


@dataclass(frozen=True)
class BumpSpec:
    epsilon: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise PreconditionError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")


def _flat(t: float) -> float:
    # exp(-1/t) underflows to zero below this, and 1/t can overflow first
    if t <= 1.0 / 746.0:
        return 0.0
    return math.exp(-1.0 / t)


def make_flat_bump() -> SmoothMap:
    """phi(t) = exp(-1/t) for t > 0 and 0 otherwise; flat to all orders at 0."""
    return SmoothMap(_flat, hint="piecewise-defined-smooth", name="flat_bump")


def make_strict_ramp() -> SmoothMap:
    """Zero on t <= 0 and strictly increasing on (0, inf)."""
    return SmoothMap(_flat, hint="piecewise-defined-smooth", name="strict_ramp")


# Gauss-Legendre panels used to tabulate the step function's normalising integral.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_STEP_PANELS = 128


class _Step:
    """Normalised antiderivative of a flat bump supported in [eps, 1 - eps]."""

    def __init__(self, eps: float):
        self.eps = eps
        self.hi = 1.0 - eps
        self.breaks = np.linspace(eps, self.hi, _STEP_PANELS + 1)
        panel = [self._panel(a, b) for a, b in zip(self.breaks[:-1], self.breaks[1:])]
        self.cumulative = np.concatenate([[0.0], np.cumsum(panel)])
        self.total = float(self.cumulative[-1])

    def _density(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        left = s - self.eps
        right = self.hi - s
        out = np.zeros_like(s)
        ok = (left > 0) & (right > 0)
        out[ok] = np.exp(-1.0 / left[ok] - 1.0 / right[ok])
        return out

    def _panel(self, a: float, b: float) -> float:
        half = 0.5 * (b - a)
        nodes = a + half * (_GL_NODES + 1.0)
        return float(half * np.dot(_GL_WEIGHTS, self._density(nodes)))

    def __call__(self, t: float) -> float:
        if t <= self.eps:
            return 0.0
        if t >= self.hi:
            return 1.0
        k = min(int(np.searchsorted(self.breaks, t, side="right")) - 1, _STEP_PANELS - 1)
        partial = self.cumulative[k] + self._panel(float(self.breaks[k]), t)
        return min(1.0, max(0.0, partial / self.total))


@lru_cache(maxsize=16)
def _step_for(eps: float) -> _Step:
    return _Step(eps)


def make_step(spec: BumpSpec | None = None) -> SmoothMap:
    """Smooth nondecreasing step: 0 below epsilon, 1 above 1 - epsilon."""
    spec = spec or BumpSpec()
    return SmoothMap(_step_for(spec.epsilon), hint="piecewise-defined-smooth",
                     name=f"step(eps={spec.epsilon})")


def step_density(spec: BumpSpec | None = None) -> Callable[[float], float]:
    """Unnormalised bump whose integral defines :func:`make_step`."""
    step = _step_for((spec or BumpSpec()).epsilon)
    return lambda s: float(step._density(np.array([s]))[0])


def _scalar(value, where: float) -> float:
    if np.ndim(value) != 0:
        raise PreconditionError(f"integrand is not scalar-valued at x={where}")
    return float(value)


def integrate(f, a: float, b: float, tol: float | None = None,
              divergence_cap: float | None = None, max_depth: int | None = None) -> float:
    """Adaptive Simpson quadrature of a scalar function over [a, b].

    Returns ``math.inf`` when the running estimate exceeds ``divergence_cap``
    or the integrand produces a non-finite value; for ``1/f`` with ``f >= 0``
    that is how zeros of ``f`` announce themselves.
    """
    tol = tolerance("quad_tol") if tol is None else tol
    cap = tolerance("divergence_cap") if divergence_cap is None else divergence_cap
    max_depth = int(tolerance("quad_max_depth")) if max_depth is None else max_depth
    rel = tolerance("quad_rel_tol")
    budget = int(tolerance("quad_max_evals"))
    if tol <= 0 or cap <= 0:
        raise PreconditionError("tol and divergence_cap must be positive")
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    def ev(x: float) -> float:
        return _scalar(f(x), x)

    fa, fm, fb = ev(a), ev(0.5 * (a + b)), ev(b)
    if not (math.isfinite(fa) and math.isfinite(fm) and math.isfinite(fb)):
        return sign * math.inf
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    evals = 3
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = ev(lm), ev(rm)
        evals += 2
        if not (math.isfinite(flm) and math.isfinite(frm)):
            return sign * math.inf
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if abs(total) > cap or abs(left + right) > cap:
            return sign * math.inf
        # the relative floor keeps near-singular but finite integrands from
        # splitting down to max_depth everywhere
        accept = abs(delta) <= 15.0 * max(eps, rel * max(abs(whole), abs(total)))
        if accept or depth >= max_depth or evals >= budget:
            total += left + right + delta / 15.0
        else:
            half = 0.5 * eps
            stack.append((mid, hi, fmid, frm, fhi, right, half, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, half, depth + 1))
    if abs(total) > cap:
        return sign * math.inf
    return sign * total


@lru_cache(maxsize=None)
def central_weights(order: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Offsets and weights of the minimal second-order central stencil."""
    if order < 0:
        raise PreconditionError("derivative order must be nonnegative")
    p = max(1, (order + 1) // 2)
    offsets = np.arange(-p, p + 1)
    size = len(offsets)
    vander = np.array([[float(j) ** m / math.factorial(m) for j in offsets] for m in range(size)])
    rhs = np.zeros(size)
    rhs[order] = 1.0
    weights = np.linalg.solve(vander, rhs)
    return tuple(int(j) for j in offsets), tuple(float(w) for w in weights)


def _fd_once(curve, t0: float, order: int, h: float) -> float:
    offsets, weights = central_weights(order)
    acc = math.fsum(w * float(curve(t0 + j * h)) for j, w in zip(offsets, weights))
    return acc / h ** order


def fd_derivative(curve, t0: float, order: int, h: float, richardson: bool = True) -> float:
    """Central-difference estimate of the ``order``-th derivative at ``t0``.

    With ``richardson`` the O(h^2) stencil is evaluated at h and h/2 and
    combined to cancel the leading error term.
    """
    if order > 6:
        raise PreconditionError("orders above 6 are not supported")
    if order < 0:
        raise PreconditionError("derivative order must be nonnegative")
    if h <= 0:
        raise PreconditionError("step must be positive")
    if order == 0:
        return float(curve(t0))
    reach = max(central_weights(order)[0]) * h
    if isinstance(curve, SmoothMap) and curve.domain is not None:
        lo, hi = curve.domain[0]
        if t0 - reach < lo or t0 + reach > hi:
            raise StencilError(
                f"stencil [{t0 - reach}, {t0 + reach}] leaves domain [{lo}, {hi}]")
    coarse = _fd_once(curve, t0, order, h)
    if not richardson:
        return coarse
    fine = _fd_once(curve, t0, order, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def max_abs_derivative(f, xs: Sequence[float], h: float = 1e-4) -> float:
    """Largest |f'| over sample points; used to pick Lipschitz-type constants."""
    return max(abs(fd_derivative(f, float(x), 1, h)) for x in xs)
