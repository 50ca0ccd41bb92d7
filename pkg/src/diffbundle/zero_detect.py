"""The smooth zero-detecting functional on nonnegative functions over [0, 1].

``F(f) = exp(-exp(I))`` with ``I`` the integral of ``1/f``; ``F(f) = 0`` when
``f`` vanishes somewhere. ``I`` overflows the outer exponentials long before it
is interesting, so results carry ``I`` itself (the log-log value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import tolerance
from .errors import PreconditionError
from .smooth import fd_derivative, integrate, max_abs_derivative

_GRID = np.linspace(0.0, 1.0, 1001)


@dataclass(frozen=True)
class ZeroDetectResult:
    log_log_value: float
    f_value: float
    zero_detected: bool

    def __post_init__(self):
        # f_value may underflow to 0 without a zero (I > ~6.6); log_log_value may not
        if math.isinf(self.log_log_value) != self.zero_detected:
            raise ValueError("zero_detected must match an infinite log-log value")
        if self.zero_detected and self.f_value != 0.0:
            raise ValueError("a detected zero forces F = 0")

    @classmethod
    def from_integral(cls, integral: float) -> "ZeroDetectResult":
        if math.isinf(integral):
            return cls(math.inf, 0.0, True)
        return cls(integral, functional_value(integral), False)

    def to_dict(self) -> dict:
        return {
            "log_log_value": None if math.isinf(self.log_log_value) else self.log_log_value,
            "f_value": self.f_value,
            "zero_detected": self.zero_detected,
        }


def functional_value(log_log_value: float) -> float:
    """exp(-exp(s)) evaluated without overflow warnings."""
    if log_log_value > 709.0:
        return 0.0
    return math.exp(-math.exp(log_log_value))


def _reciprocal(f):
    def inv(x: float) -> float:
        v = float(f(x))
        if v < 0.0:
            raise PreconditionError(f"function is negative at x={x}: {v}")
        return math.inf if v == 0.0 else 1.0 / v
    return inv


def functional_F(f, tol: float | None = None, cap: float | None = None,
                 grid: np.ndarray | None = None, grid_check: bool = True) -> ZeroDetectResult:
    """Evaluate the zero-detecting functional on a nonnegative ``f``.

    The grid pass rejects negative samples and catches zeros sitting on grid
    points; everything else is left to the quadrature's divergence cap.
    """
    grid = _GRID if grid is None else grid
    values = np.array([float(f(x)) for x in grid])
    bad = np.flatnonzero(values < 0.0)
    if bad.size:
        x = float(grid[bad[0]])
        raise PreconditionError(f"function is negative at x={x}: {values[bad[0]]}")
    if grid_check and np.any(values == 0.0):
        return ZeroDetectResult(math.inf, 0.0, True)
    return ZeroDetectResult.from_integral(integrate(_reciprocal(f), 0.0, 1.0, tol, cap))


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool
    constant: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "C": self.constant}


def derivative_bound(f, grid: np.ndarray | None = None, h: float = 1e-4) -> float:
    return max_abs_derivative(f, _GRID[::10] if grid is None else grid, h)


def check_lemma_A1(f, C: float, grid: np.ndarray | None = None,
                   slack: float | None = None) -> InequalityReport:
    """Check ``C exp(-C * int 1/f) <= min f`` for a positive ``f`` on [0, 1].

    ``C`` must dominate the sampled ``max |f'|``.
    """
    slack = tolerance("lemma_slack") if slack is None else slack
    grid = _GRID if grid is None else grid
    values = np.array([float(f(x)) for x in grid])
    if np.any(values <= 0.0):
        x = float(grid[int(np.argmin(values))])
        raise PreconditionError(f"function is not positive on [0, 1] (x={x})")
    if C <= 0.0:
        raise PreconditionError("C must be positive")
    bound = derivative_bound(f, grid[::10])
    if C < bound * (1.0 - 1e-8):
        raise PreconditionError(f"C={C} is below the derivative bound {bound}")
    result = functional_F(f)
    lhs = C * math.exp(-C * result.log_log_value)
    rhs = float(values.min())
    return InequalityReport(lhs, rhs, lhs <= rhs + slack, C)


@dataclass(frozen=True)
class ReciprocalBoundReport:
    c_fit: float
    holds: bool
    samples: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {"c_fit": self.c_fit, "holds": self.holds,
                "samples": [list(s) for s in self.samples]}


def check_lemma_A3(f, t0: float, x0: float, t_box: tuple[float, float],
                   min_offset: float = 1e-3, n_points: int = 25) -> ReciprocalBoundReport:
    """Fit the largest ``c`` with ``int 1/f(t, .) >= c / |t - t0|`` near ``t0``.

    ``f(t0, x0)`` must vanish. Offsets ``|t - t0|`` are log-spaced from
    ``min_offset`` out to the edge of ``t_box`` on both sides.
    """
    lo, hi = t_box
    if not lo <= t0 <= hi:
        raise PreconditionError("t0 lies outside t_box")
    if not 0.0 <= x0 <= 1.0:
        raise PreconditionError("x0 must lie in [0, 1]")
    if abs(float(f(t0, x0))) > tolerance("zero_grid"):
        raise PreconditionError(f"f(t0, x0) = {f(t0, x0)} is not zero")
    samples = []
    for side, reach in ((-1.0, t0 - lo), (1.0, hi - t0)):
        if reach < min_offset:
            continue
        for d in np.geomspace(min_offset, reach, n_points):
            t = t0 + side * float(d)
            res = functional_F(lambda x, t=t: f(t, x), cap=math.inf)
            if res.zero_detected:
                continue
            samples.append((t, res.log_log_value * abs(t - t0)))
    if not samples:
        raise PreconditionError("no t in the box gives a positive slice")
    c_fit = min(c for _, c in samples)
    return ReciprocalBoundReport(c_fit, c_fit > 0.0, tuple(samples))


@dataclass(frozen=True)
class FlatnessReport:
    t0: float
    derivative_estimates: tuple[tuple[int, float, float], ...]
    verdict: bool
    tol: float = field(default=0.0)

    def to_dict(self) -> dict:
        return {"t0": self.t0, "verdict": self.verdict, "tol": self.tol,
                "derivative_estimates": [list(d) for d in self.derivative_estimates]}


def flatness_probe(family, t0: float, max_order: int, h: float | None = None,
                   tol: float | None = None) -> FlatnessReport:
    """Finite-difference derivatives of ``t -> F(family(t, .))`` at a zero crossing."""
    h = tolerance("flat_step") if h is None else h
    tol = tolerance("flat_tol") if tol is None else tol
    if not functional_F(lambda x: family(t0, x)).zero_detected:
        raise PreconditionError(f"family({t0}, .) has no zero on [0, 1]")

    def curve(t: float) -> float:
        return functional_F(lambda x: family(t, x)).f_value

    estimates = tuple((k, fd_derivative(curve, t0, k, h), h) for k in range(1, max_order + 1))
    verdict = all(abs(est) < tol for _, est, _ in estimates)
    return FlatnessReport(t0, estimates, verdict, tol)


@dataclass(frozen=True)
class ZeroFixture:
    name: str
    expression: str
    domain: tuple[float, float] = (-1.0, 2.0)

    def compile(self):
        from .expressions import compile_scalar
        return compile_scalar(self.expression, ("x",))


def grid_minimum(f, grid: np.ndarray | None = None) -> float:
    grid = _GRID if grid is None else grid
    return float(min(float(f(x)) for x in grid))


def load_fixture_suite(path=None) -> list[ZeroFixture]:
    """Read a fixture-suite JSON file; the bundled 20-function suite by default."""
    import json
    from importlib import resources

    if path is None:
        text = resources.files("diffbundle").joinpath("data/zero_fixtures.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw = json.loads(text)
    return [ZeroFixture(item["name"], item["expression"], tuple(item.get("domain", (-1.0, 2.0))))
            for item in raw["fixtures"]]


def run_fixture_suite(fixtures: list[ZeroFixture]) -> dict:
    """Per-fixture verdicts comparing quadrature detection with the grid minimum."""
    rows = []
    for fx in fixtures:
        f = fx.compile()
        gmin = grid_minimum(f)
        res = functional_F(f, grid_check=False)
        expected = gmin < tolerance("zero_grid")
        row = {"name": fx.name, "expression": fx.expression, "grid_min": gmin,
               **res.to_dict(), "expected_zero": expected,
               "verdict": res.zero_detected == expected}
        if not expected:
            C = 1.05 * max(derivative_bound(f), 1e-12)
            row["lemma_A1"] = check_lemma_A1(f, C).to_dict()
            row["verdict"] = row["verdict"] and row["lemma_A1"]["holds"]
        rows.append(row)
    return {"fixtures": rows, "passed": all(r["verdict"] for r in rows)}
