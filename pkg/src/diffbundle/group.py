"""Groups used as structure groups: descriptors, charts, representations."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .config import tolerance
from .errors import GroupMismatchError, PreconditionError

TWO_PI = 2.0 * math.pi
Element = Any


@dataclass(frozen=True)
class Chart:
    """Coordinates near the identity: ``embed`` R^k -> G and its local inverse."""

    dim: int
    embed: Callable[[np.ndarray], Element]
    local_inverse: Callable[[Element], np.ndarray]


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    name: str
    tag: str
    identity: Element
    multiply: Callable[[Element, Element], Element]
    invert: Callable[[Element], Element]
    distance: Callable[[Element, Element], float]
    sample: Callable[[np.random.Generator], Element]
    discrete: bool = False
    chart: Chart | None = None
    representation: Callable[[Element], np.ndarray] | None = None
    elements: tuple | None = None
    to_json: Callable[[Element], Any] = field(default=lambda g: g)
    from_json: Callable[[Any], Element] = field(default=lambda v: v)
    factors: tuple = ()

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupDescriptor) and other.name == self.name

    def __hash__(self) -> int:
        return hash(self.name)

    def __repr__(self) -> str:
        return f"GroupDescriptor({self.name!r})"

    def mul(self, *elements: Element) -> Element:
        out = self.identity
        for g in elements:
            out = self.multiply(out, g)
        return out

    def inv(self, g: Element) -> Element:
        return self.invert(g)

    def divide(self, a: Element, b: Element) -> Element:
        """``a^{-1} b``, the element taking ``a`` to ``b`` by right multiplication."""
        return self.multiply(self.invert(a), b)

    def equal(self, a: Element, b: Element, tol: float | None = None) -> bool:
        if self.discrete:
            return self.distance(a, b) == 0.0
        tol = tolerance("element_eq") if tol is None else tol
        return self.distance(a, b) <= tol

    def is_identity(self, g: Element) -> bool:
        return self.equal(g, self.identity)

    def random(self, rng: np.random.Generator, count: int | None = None):
        if count is None:
            return self.sample(rng)
        return [self.sample(rng) for _ in range(count)]


def require_same(a: GroupDescriptor, b: GroupDescriptor) -> None:
    if a != b:
        raise GroupMismatchError(f"group {a.name} does not match {b.name}")


def _wrap(theta: float) -> float:
    r = math.fmod(theta, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return 0.0 if r >= TWO_PI else r


def _centered(theta: float) -> float:
    r = _wrap(theta)
    return r - TWO_PI if r > math.pi else r


def angle_distance(a: float, b: float) -> float:
    return abs(_centered(a - b))


def real_line() -> GroupDescriptor:
    return GroupDescriptor(
        name="R", tag="real", identity=0.0,
        multiply=lambda a, b: a + b, invert=lambda a: -a,
        distance=lambda a, b: abs(a - b),
        sample=lambda rng: float(rng.normal(0.0, 2.0)),
        chart=Chart(1, lambda v: float(v[0]), lambda g: np.array([g])),
        representation=lambda a: np.array([[math.exp(a)]]),
        to_json=float, from_json=float)


def positive_reals() -> GroupDescriptor:
    def check(v):
        v = float(v)
        if not v > 0.0:
            raise PreconditionError(f"{v} is not a positive real")
        return v

    return GroupDescriptor(
        name="R>0", tag="positive-real", identity=1.0,
        multiply=lambda a, b: a * b, invert=lambda a: 1.0 / a,
        distance=lambda a, b: abs(math.log(a) - math.log(b)),
        sample=lambda rng: float(math.exp(rng.normal(0.0, 1.0))),
        chart=Chart(1, lambda v: math.exp(float(v[0])), lambda g: np.array([math.log(g)])),
        representation=lambda a: np.array([[a]]),
        to_json=float, from_json=check)


def integers() -> GroupDescriptor:
    return GroupDescriptor(
        name="Z", tag="integer", identity=0,
        multiply=lambda a, b: a + b, invert=lambda a: -a,
        distance=lambda a, b: 0.0 if a == b else 1.0,
        sample=lambda rng: int(rng.integers(-5, 6)),
        discrete=True, to_json=int, from_json=int)


def integer_lattice(n: int) -> GroupDescriptor:
    if n < 1:
        raise PreconditionError("lattice rank must be positive")
    return GroupDescriptor(
        name=f"Z^{n}", tag="integer-vector", identity=(0,) * n,
        multiply=lambda a, b: tuple(x + y for x, y in zip(a, b)),
        invert=lambda a: tuple(-x for x in a),
        distance=lambda a, b: 0.0 if tuple(a) == tuple(b) else 1.0,
        sample=lambda rng: tuple(int(v) for v in rng.integers(-5, 6, size=n)),
        discrete=True, to_json=list, from_json=lambda v: tuple(int(x) for x in v))


def signs() -> GroupDescriptor:
    def check(v):
        v = int(v)
        if v not in (1, -1):
            raise PreconditionError(f"{v} is not a sign")
        return v

    return GroupDescriptor(
        name="Z/2", tag="sign", identity=1,
        multiply=lambda a, b: a * b, invert=lambda a: a,
        distance=lambda a, b: 0.0 if a == b else 2.0,
        sample=lambda rng: 1 if rng.integers(0, 2) == 0 else -1,
        discrete=True, representation=lambda s: np.array([[float(s)]]),
        elements=(1, -1), to_json=int, from_json=check)


def circle() -> GroupDescriptor:
    def rotation(a: float) -> np.ndarray:
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s], [s, c]])

    return GroupDescriptor(
        name="S1", tag="angle", identity=0.0,
        multiply=lambda a, b: _wrap(a + b), invert=lambda a: _wrap(-a),
        distance=angle_distance,
        sample=lambda rng: float(rng.uniform(0.0, TWO_PI)),
        chart=Chart(1, lambda v: _wrap(float(v[0])), lambda g: np.array([_centered(g)])),
        representation=rotation, to_json=float, from_json=lambda v: _wrap(float(v)))


def general_linear(n: int) -> GroupDescriptor:
    """GL(n, R) with matrices as numpy arrays; the target of representations."""

    def sample(rng):
        while True:
            m = np.eye(n) + 0.5 * rng.normal(size=(n, n))
            if abs(np.linalg.det(m)) > 1e-2:
                return m

    return GroupDescriptor(
        name=f"GL{n}", tag="matrix", identity=np.eye(n),
        multiply=lambda a, b: np.asarray(a) @ np.asarray(b),
        invert=lambda a: np.linalg.inv(a),
        distance=lambda a, b: float(np.max(np.abs(np.asarray(a) - np.asarray(b)))),
        sample=sample,
        to_json=lambda m: np.asarray(m).tolist(), from_json=lambda v: np.array(v, dtype=float))


def product(g1: GroupDescriptor, g2: GroupDescriptor) -> GroupDescriptor:
    """Componentwise product with the max metric."""
    parts = (g1.factors or (g1,)) + (g2.factors or (g2,))
    return _product_of(parts)


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    k = 0
    for b in blocks:
        d = b.shape[0]
        out[k:k + d, k:k + d] = b
        k += d
    return out


def _product_of(parts: tuple[GroupDescriptor, ...]) -> GroupDescriptor:
    name = "x".join(p.name for p in parts)
    discrete = all(p.discrete for p in parts)

    chart = None
    if not discrete and all(p.discrete or p.chart is not None for p in parts):
        dims = [0 if p.discrete else p.chart.dim for p in parts]

        def embed(v):
            v = np.asarray(v, dtype=float)
            out, k = [], 0
            for p, d in zip(parts, dims):
                out.append(p.identity if d == 0 else p.chart.embed(v[k:k + d]))
                k += d
            return tuple(out)

        def local_inverse(g):
            pieces = [p.chart.local_inverse(x) for p, d, x in zip(parts, dims, g) if d > 0]
            return np.concatenate(pieces)

        chart = Chart(sum(dims), embed, local_inverse)

    rep = None
    if all(p.representation is not None for p in parts):
        def rep(g):
            return _block_diag([p.representation(x) for p, x in zip(parts, g)])

    elements = None
    if all(p.elements is not None for p in parts):
        elements = tuple(itertools.product(*(p.elements for p in parts)))

    return GroupDescriptor(
        name=name, tag="product", identity=tuple(p.identity for p in parts),
        multiply=lambda a, b: tuple(p.multiply(x, y) for p, x, y in zip(parts, a, b)),
        invert=lambda a: tuple(p.invert(x) for p, x in zip(parts, a)),
        distance=lambda a, b: max(p.distance(x, y) for p, x, y in zip(parts, a, b)),
        sample=lambda rng: tuple(p.sample(rng) for p in parts),
        discrete=discrete, chart=chart, representation=rep, elements=elements,
        to_json=lambda g: [p.to_json(x) for p, x in zip(parts, g)],
        from_json=lambda v: tuple(p.from_json(x) for p, x in zip(parts, v)),
        factors=parts)


_SIMPLE = {"R": real_line, "R>0": positive_reals, "Z": integers, "Z/2": signs, "S1": circle}


def get_group(name: str) -> GroupDescriptor:
    """Look up a group by name; products are written like ``Z/2xS1``."""
    parts = name.split("x")
    if len(parts) > 1:
        return _product_of(tuple(get_group(p) for p in parts))
    if name in _SIMPLE:
        return _SIMPLE[name]()
    m = re.fullmatch(r"Z\^(\d+)", name)
    if m:
        return integer_lattice(int(m.group(1)))
    m = re.fullmatch(r"GL(\d+)", name)
    if m:
        return general_linear(int(m.group(1)))
    raise PreconditionError(f"unknown group {name!r}")


def builtin_groups() -> list[GroupDescriptor]:
    return [real_line(), positive_reals(), integers(), integer_lattice(2), signs(), circle(),
            get_group("Z/2xS1"), get_group("RxZ")]


@dataclass(frozen=True)
class AxiomReport:
    group: str
    associativity: float
    identity: float
    inverse: float
    samples: int

    @property
    def max_violation(self) -> float:
        return max(self.associativity, self.identity, self.inverse)

    @property
    def passed(self) -> bool:
        return self.max_violation <= tolerance("group_axioms")

    def to_dict(self) -> dict:
        return {"group": self.group, "associativity": self.associativity,
                "identity": self.identity, "inverse": self.inverse,
                "samples": self.samples, "passed": self.passed}


def check_axioms(desc: GroupDescriptor, n: int = 1000, seed: int = 0) -> AxiomReport:
    rng = np.random.default_rng(seed)
    assoc = ident = inv = 0.0
    e = desc.identity
    for _ in range(n):
        a, b, c = desc.sample(rng), desc.sample(rng), desc.sample(rng)
        assoc = max(assoc, desc.distance(desc.multiply(desc.multiply(a, b), c),
                                         desc.multiply(a, desc.multiply(b, c))))
        ident = max(ident, desc.distance(desc.multiply(a, e), a), desc.distance(desc.multiply(e, a), a))
        inv = max(inv, desc.distance(desc.multiply(a, desc.invert(a)), e),
                  desc.distance(desc.multiply(desc.invert(a), a), e))
    return AxiomReport(desc.name, assoc, ident, inv, n)


def check_representation(desc: GroupDescriptor, n: int = 1000, seed: int = 0) -> float:
    """Max entrywise gap between rep(gh) and rep(g) rep(h) on random pairs."""
    if desc.representation is None:
        raise PreconditionError(f"group {desc.name} has no representation")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        g, h = desc.sample(rng), desc.sample(rng)
        lhs = desc.representation(desc.multiply(g, h))
        rhs = desc.representation(g) @ desc.representation(h)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def check_chart(desc: GroupDescriptor, n: int = 100, radius: float = 0.5, seed: int = 0) -> float:
    """Round-trip error of local_inverse after embed near 0."""
    if desc.chart is None:
        raise PreconditionError(f"group {desc.name} has no chart")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        v = rng.uniform(-radius, radius, size=desc.chart.dim)
        worst = max(worst, float(np.max(np.abs(desc.chart.local_inverse(desc.chart.embed(v)) - v))))
    return worst


@dataclass(frozen=True)
class SmoothnessReport:
    verdict: str
    multiply_gradient: tuple | None = None
    invert_gradient: tuple | None = None
    max_instability: float = 0.0

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "multiply_gradient": self.multiply_gradient,
                "invert_gradient": self.invert_gradient, "max_instability": self.max_instability}


def _jacobian(fn, x: np.ndarray, h: float) -> np.ndarray:
    cols = []
    for k in range(len(x)):
        dx = np.zeros_like(x)
        dx[k] = h
        cols.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def smoothness_probe_action(desc: GroupDescriptor, action=None, n_points: int = 5,
                            h: float = 1e-4, radius: float = 0.2, seed: int = 0) -> SmoothnessReport:
    """Finite-difference gradients of multiply and invert in chart coordinates.

    ``action`` optionally replaces multiplication as a map of chart coordinates
    ``(x, y) -> z``. Discrete groups report ``not-applicable``.
    """
    chart = desc.chart
    if chart is None or chart.dim == 0:
        return SmoothnessReport("not-applicable")
    k = chart.dim
    if action is None:
        def action(x, y):
            return chart.local_inverse(desc.multiply(chart.embed(x), chart.embed(y)))

    def mult(v):
        return action(v[:k], v[k:])

    def inv(v):
        return chart.local_inverse(desc.invert(chart.embed(v)))

    rng = np.random.default_rng(seed)
    instability = 0.0
    first_mult = first_inv = None
    for _ in range(n_points):
        x = rng.uniform(-radius, radius, size=2 * k)
        for fn, pt in ((mult, x), (inv, x[:k])):
            coarse, fine = _jacobian(fn, pt, h), _jacobian(fn, pt, 0.5 * h)
            if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
                return SmoothnessReport("fail", max_instability=math.inf)
            instability = max(instability, float(np.max(np.abs(coarse - fine))))
        if first_mult is None:
            first_mult = _jacobian(mult, x, h)
            first_inv = _jacobian(inv, x[:k], h)
    verdict = "pass" if instability < 1e-5 else "fail"
    return SmoothnessReport(verdict, tuple(np.round(first_mult, 10).ravel().tolist()),
                            tuple(np.round(first_inv, 10).ravel().tolist()), instability)
