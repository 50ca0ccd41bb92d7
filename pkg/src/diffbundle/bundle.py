"""Principal bundles given by a cover, a subordinate partition and a cocycle.

Convention: ``g_ij(b)`` is the chart-``i`` coordinate of the chart-``j``
point with coordinate ``e``, so ``(j, b, g)`` and ``(i, b, g_ij(b) g)`` are
the same point of the total space and ``g_ij g_jk = g_ik``. The group acts on
fibre coordinates from the right.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping

import numpy as np

from .config import tolerance
from .errors import MembershipError, PreconditionError, ValidationError
from .group import GroupDescriptor, general_linear, require_same
from .milnor import (BGPoint, MilnorPoint, bg_cover_member, bg_partition_values, bg_section,
                     eg_act, eg_divide, eg_project, point_gap)
from .partition import BaseSpace, PartitionOfUnity

Transition = Callable[[Any], Any]


@dataclass(frozen=True)
class TotalPoint:
    chart: Hashable
    base: Any
    fiber: Any


def _cached(fn):
    cache: dict = {}

    def call(b):
        try:
            return cache[b]
        except KeyError:
            value = cache[b] = fn(b)
            return value
        except TypeError:
            return fn(b)

    return call


@dataclass(eq=False)
class CocycleBundle:
    name: str
    base: BaseSpace
    group: GroupDescriptor
    index_set: tuple
    cover: Mapping[Hashable, Callable[[Any], bool]]
    transitions: Mapping[tuple, Transition]
    partition: PartitionOfUnity | None = None
    description: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.index_set = tuple(self.index_set)
        missing = [i for i in self.index_set if i not in self.cover]
        if missing:
            raise PreconditionError(f"charts without cover sets: {missing}")
        if self.partition is not None and tuple(self.partition.index_set) != self.index_set:
            raise PreconditionError("partition and cover are indexed differently")

    def charts_at(self, b) -> tuple:
        return tuple(i for i in self.index_set if self.cover[i](b))

    def transition(self, i, j, b):
        if i == j:
            return self.group.identity
        fn = self.transitions.get((i, j))
        if fn is not None:
            return fn(b)
        fn = self.transitions.get((j, i))
        if fn is not None:
            return self.group.invert(fn(b))
        raise PreconditionError(f"no transition between charts {i} and {j}")

    def change_chart(self, x: TotalPoint, i) -> TotalPoint:
        if not self.cover[i](x.base):
            raise MembershipError(f"base point {x.base!r} is not in chart {i}")
        g = self.group.multiply(self.transition(i, x.chart, x.base), x.fiber)
        return TotalPoint(i, x.base, g)

    def act(self, x: TotalPoint, h) -> TotalPoint:
        return TotalPoint(x.chart, x.base, self.group.multiply(x.fiber, h))

    def same_point(self, x: TotalPoint, y: TotalPoint, tol: float | None = None) -> bool:
        tol = tolerance("cocycle") if tol is None else tol
        if x.base != y.base:
            return False
        return self.group.distance(self.change_chart(x, y.chart).fiber, y.fiber) <= tol

    def random_total_point(self, rng: np.random.Generator) -> TotalPoint:
        b = self.base.points[int(rng.integers(len(self.base)))]
        charts = self.charts_at(b)
        return TotalPoint(charts[int(rng.integers(len(charts)))], b, self.group.sample(rng))


@dataclass(frozen=True)
class BundleReport:
    name: str
    cocycle_violation: float
    identity_violation: float
    inverse_violation: float
    uncovered_points: tuple
    worst_point: Any
    partition: dict | None
    passed: bool

    @property
    def max_violation(self) -> float:
        return max(self.cocycle_violation, self.identity_violation, self.inverse_violation)

    def to_dict(self) -> dict:
        return {"name": self.name, "cocycle_violation": self.cocycle_violation,
                "identity_violation": self.identity_violation,
                "inverse_violation": self.inverse_violation,
                "uncovered_points": [list(p) for p in self.uncovered_points[:10]],
                "worst_point": None if self.worst_point is None else list(self.worst_point),
                "partition": self.partition, "passed": self.passed}


def validate(bundle: CocycleBundle) -> BundleReport:
    """Grid audit of the cocycle identities and of the partition, if any."""
    grp = bundle.group
    worst, worst_at, ident, inv = 0.0, None, 0.0, 0.0
    uncovered = []
    for b in bundle.base:
        charts = bundle.charts_at(b)
        if not charts:
            uncovered.append(b)
            continue
        g = {(i, j): bundle.transition(i, j, b) for i in charts for j in charts}
        for i in charts:
            ident = max(ident, grp.distance(g[i, i], grp.identity))
        for i, j in itertools.combinations(charts, 2):
            if (i, j) in bundle.transitions and (j, i) in bundle.transitions:
                gap = grp.distance(grp.multiply(g[i, j], g[j, i]), grp.identity)
                if gap > inv:
                    inv = gap
                    if gap > worst:
                        worst_at = b
        for i, j, k in itertools.product(charts, repeat=3):
            gap = grp.distance(grp.multiply(g[i, j], g[j, k]), g[i, k])
            if gap > worst:
                worst, worst_at = gap, b
    part = None
    part_ok = True
    if bundle.partition is not None:
        audit = bundle.partition.audit(bundle.base)
        part = audit.to_dict()
        bad = [(i, x) for i, x in audit.subordination_violations]
        part_ok = audit.passed and not bad
    tol = tolerance("cocycle")
    passed = max(worst, ident, inv) <= tol and not uncovered and part_ok
    if worst_at is None and max(worst, inv) > 0:
        worst_at = bundle.base.points[0]
    return BundleReport(bundle.name, worst, ident, inv, tuple(uncovered),
                        worst_at if max(worst, inv) > tol else None, part, passed)


def pullback(bundle: CocycleBundle, phi: Callable, source: BaseSpace,
             name: str | None = None) -> CocycleBundle:
    """Pull the cover, partition and cocycle back along ``phi: source -> base``."""
    phi = _cached(phi)
    for b in source:
        if not bundle.charts_at(phi(b)):
            raise PreconditionError(f"image of {b!r} escapes the charts of {bundle.name}")
    cover = {i: (lambda b, pred=pred: pred(phi(b))) for i, pred in bundle.cover.items()}
    transitions = {ij: (lambda b, fn=fn: fn(phi(b))) for ij, fn in bundle.transitions.items()}
    partition = None
    if bundle.partition is not None:
        src = bundle.partition
        partition = PartitionOfUnity(
            src.index_set, {i: (lambda b, f=f: f(phi(b))) for i, f in src.functions.items()},
            cover, lambda b: src.values(phi(b)))
    return CocycleBundle(name or f"pullback({bundle.name})", source, bundle.group,
                         bundle.index_set, cover, transitions, partition)


@dataclass
class GaugeTransformation:
    """Per-chart maps ``lambda_i: B_i -> G`` sending chart-``i`` coordinates
    ``g`` of one bundle to ``lambda_i(b) g`` in the other."""

    functions: dict

    def __call__(self, i, b):
        return self.functions[i](b)

    @classmethod
    def identity(cls, bundle: CocycleBundle) -> "GaugeTransformation":
        e = bundle.group.identity
        return cls({i: (lambda b, e=e: e) for i in bundle.index_set})

    @classmethod
    def constant(cls, values: Mapping) -> "GaugeTransformation":
        return cls({i: (lambda b, v=v: v) for i, v in values.items()})

    def inverse(self, group: GroupDescriptor) -> "GaugeTransformation":
        return GaugeTransformation({i: (lambda b, f=f: group.invert(f(b)))
                                    for i, f in self.functions.items()})

    def then(self, other: "GaugeTransformation", group: GroupDescriptor) -> "GaugeTransformation":
        """Apply ``self`` first, then ``other``: pointwise product ``other_i * self_i``."""
        return GaugeTransformation({i: (lambda b, f=f, g=other.functions[i]:
                                        group.multiply(g(b), f(b)))
                                    for i, f in self.functions.items()})


@dataclass(frozen=True)
class GaugeReport:
    max_violation: float
    worst: tuple | None
    checked: int
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "checked": self.checked,
                "worst": None if self.worst is None else repr(self.worst),
                "passed": self.passed, "tol": self.tol}


def _check_shared_cover(b1: CocycleBundle, b2: CocycleBundle) -> None:
    require_same(b1.group, b2.group)
    if b1.index_set != b2.index_set:
        raise PreconditionError("bundles are indexed by different covers")
    if len(b1.base) != len(b2.base):
        raise PreconditionError("bundles live on different base grids")
    for b in b1.base:
        if b1.charts_at(b) != b2.charts_at(b):
            raise PreconditionError(f"cover membership differs at {b!r}")


def gauge_check(b1: CocycleBundle, b2: CocycleBundle, lam: GaugeTransformation,
                tol: float | None = None) -> GaugeReport:
    """Max over overlaps of ``d(g2_ij, lambda_i g1_ij lambda_j^-1)``."""
    _check_shared_cover(b1, b2)
    tol = tolerance("gauge") if tol is None else tol
    grp = b1.group
    worst, where, count = 0.0, None, 0
    for b in b1.base:
        charts = b1.charts_at(b)
        lam_b = {i: lam(i, b) for i in charts}
        for i in charts:
            for j in charts:
                lhs = b2.transition(i, j, b)
                rhs = grp.mul(lam_b[i], b1.transition(i, j, b), grp.invert(lam_b[j]))
                gap = grp.distance(lhs, rhs)
                count += 1
                if gap > worst:
                    worst, where = gap, (i, j, b)
    return GaugeReport(worst, where, count, worst <= tol, tol)


def find_constant_gauge(b1: CocycleBundle, b2: CocycleBundle):
    """Exhaustive search over constant gauges of a finite group.

    Returns ``(gauge or None, number of candidates tried)``.
    """
    grp = b1.group
    if grp.elements is None:
        raise PreconditionError(f"group {grp.name} is not finite")
    tried = 0
    for values in itertools.product(grp.elements, repeat=len(b1.index_set)):
        tried += 1
        lam = GaugeTransformation.constant(dict(zip(b1.index_set, values)))
        if gauge_check(b1, b2, lam).passed:
            return lam, tried
    return None, tried


def cocycle_distance(b1: CocycleBundle, b2: CocycleBundle) -> float:
    """Largest transition discrepancy between two bundles on the same cover."""
    return gauge_check(b1, b2, GaugeTransformation.identity(b1), tol=math.inf).max_violation


def trivial_like(bundle: CocycleBundle, name: str = "trivial") -> CocycleBundle:
    """The product bundle on the same base and cover."""
    e = bundle.group.identity
    transitions = {(i, j): (lambda b, e=e: e)
                   for i, j in itertools.combinations(bundle.index_set, 2)}
    return CocycleBundle(name, bundle.base, bundle.group, bundle.index_set, bundle.cover,
                         transitions, bundle.partition)


def common_refinement(b1: CocycleBundle, b2: CocycleBundle,
                      name: str = "refined") -> tuple[CocycleBundle, CocycleBundle]:
    """Re-express both bundles over the pair cover ``B_i & B'_j``.

    Pairs that never meet on the grid are dropped; the partition is the
    product partition when both are present.
    """
    require_same(b1.group, b2.group)
    pairs = []
    for i in b1.index_set:
        for j in b2.index_set:
            if any(b1.cover[i](b) and b2.cover[j](b) for b in b1.base):
                pairs.append((i, j))
    cover = {p: (lambda b, i=p[0], j=p[1]: b1.cover[i](b) and b2.cover[j](b)) for p in pairs}
    partition = None
    if b1.partition is not None and b2.partition is not None:
        pos1 = {i: k for k, i in enumerate(b1.index_set)}
        pos2 = {j: k for k, j in enumerate(b2.index_set)}

        def evaluate(b):
            v1, v2 = b1.partition.values(b), b2.partition.values(b)
            out = np.array([v1[pos1[i]] * v2[pos2[j]] for i, j in pairs])
            return out / out.sum()

        partition = PartitionOfUnity(
            tuple(pairs), {p: (lambda b, k=k: float(evaluate(b)[k])) for k, p in enumerate(pairs)},
            cover, evaluate)

    def lift(bundle, side):
        transitions = {(p, q): (lambda b, a=p[side], c=q[side]: bundle.transition(a, c, b))
                       for p, q in itertools.permutations(pairs, 2)}
        return CocycleBundle(f"{name}:{bundle.name}", b1.base, bundle.group, tuple(pairs),
                             cover, transitions, partition)

    return lift(b1, 0), lift(b2, 1)


def universal_bundle(group: GroupDescriptor, n: int, space: BaseSpace) -> CocycleBundle:
    """EG_n -> BG_n over a sample of BG points, with the standard cover and partition."""
    idx = tuple(range(n + 1))
    cover = {i: (lambda b, i=i: bg_cover_member(i, b)) for i in idx}

    def evaluate(b):
        vals = bg_partition_values(b)
        return np.array([vals.get(i, 0.0) for i in idx])

    partition = PartitionOfUnity(idx, {i: (lambda b, i=i: float(evaluate(b)[i])) for i in idx},
                                 cover, evaluate)

    def g(i, j):
        return lambda b: eg_divide(bg_section(i, b), bg_section(j, b))

    transitions = {(i, j): g(i, j) for i, j in itertools.permutations(idx, 2)}
    return CocycleBundle(f"E{group.name}_{n}", space, group, idx, cover, transitions, partition)


@dataclass
class Classification:
    bundle: CocycleBundle
    n: int
    position: dict

    def f(self, x: TotalPoint) -> MilnorPoint:
        """Equivariant map to EG: weight ``tau_i(b)`` and entry ``g_ik(b) g`` at slot ``i``."""
        bundle = self.bundle
        vals = bundle.partition.values(x.base)
        items = []
        for i, v in zip(bundle.index_set, vals):
            if v > 0.0:
                g = bundle.group.multiply(bundle.transition(i, x.chart, x.base), x.fiber)
                items.append((self.position[i], float(v), g))
        return MilnorPoint.build(bundle.group, items, self.n)

    def c(self, b) -> BGPoint:
        charts = self.bundle.charts_at(b)
        if not charts:
            raise MembershipError(f"{b!r} lies in no chart")
        return eg_project(self.f(TotalPoint(charts[0], b, self.bundle.group.identity)))


def classify(bundle: CocycleBundle, n: int | None = None, check: bool = True) -> Classification:
    if bundle.partition is None:
        raise PreconditionError(f"{bundle.name} carries no partition of unity")
    if check:
        report = validate(bundle)
        if not report.passed:
            raise ValidationError(f"{bundle.name} fails validation: {report.to_dict()}")
    size = len(bundle.index_set)
    n = size if n is None else n
    if n < size - 1:
        raise PreconditionError(f"truncation {n} is too small for {size} charts")
    return Classification(bundle, n, {i: k for k, i in enumerate(bundle.index_set)})


@dataclass(frozen=True)
class ClassificationReport:
    name: str
    gauge: GaugeReport
    square_violations: int
    equivariance: float
    representative_gap: float
    weight_sum: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "gauge": self.gauge.to_dict(),
                "square_violations": self.square_violations, "equivariance": self.equivariance,
                "representative_gap": self.representative_gap, "weight_sum": self.weight_sum,
                "passed": self.passed}


def verify_classification(bundle: CocycleBundle, n: int | None = None, samples: int = 200,
                          seed: int = 0) -> ClassificationReport:
    """Pull the universal bundle back along the classifying map and gauge-check it.

    The gauge on the pair cover ``(a, i)`` is ``eg_divide(s_i(c(b)), f(a, b, e))``.
    """
    cls = classify(bundle, n)
    grp = bundle.group
    c = _cached(cls.c)
    univ = universal_bundle(grp, cls.n, BaseSpace("BG-image", [c(b) for b in bundle.base], "bg"))
    pulled = pullback(univ, c, bundle.base, name=f"c*E{grp.name}")
    orig, pb = common_refinement(bundle, pulled, name="classify")

    def lam_for(pair):
        a, i = pair
        return lambda b: eg_divide(bg_section(i, c(b)), cls.f(TotalPoint(a, b, grp.identity)))

    lam = GaugeTransformation({p: lam_for(p) for p in orig.index_set})
    gauge = gauge_check(orig, pb, lam, tol=tolerance("classification"))

    rng = np.random.default_rng(seed)
    square = 0
    equiv = rep_gap = wsum = 0.0
    for _ in range(samples):
        x = bundle.random_total_point(rng)
        fx = cls.f(x)
        wsum = max(wsum, abs(math.fsum(fx.weights.values()) - 1.0))
        if eg_project(fx) != c(x.base) and not eg_project(fx).close(c(x.base), tolerance("element_eq")):
            square += 1
        h = grp.sample(rng)
        equiv = max(equiv, point_gap(cls.f(bundle.act(x, h)), eg_act(fx, h)))
        for j in bundle.charts_at(x.base):
            rep_gap = max(rep_gap, point_gap(cls.f(bundle.change_chart(x, j)), fx))
    tol = tolerance("equivariance")
    passed = (gauge.passed and square == 0 and equiv <= tol and rep_gap <= tol
              and wsum <= tolerance("partition_sum"))
    return ClassificationReport(bundle.name, gauge, square, equiv, rep_gap, wsum, passed)


@dataclass
class AssociatedBundle:
    """Vector bundle ``E x_G R^d`` at cocycle level; fibre maps are linear callables."""

    principal: CocycleBundle
    rep: Callable[[Any], np.ndarray]
    dim: int

    def fiber_transition(self, i, j, b) -> Callable[[np.ndarray], np.ndarray]:
        m = self.rep(self.principal.transition(i, j, b))
        return lambda v: m @ np.asarray(v, dtype=float)

    def frame_bundle(self) -> CocycleBundle:
        """Principal GL(d) bundle of frames: transitions read off from basis vectors."""
        p = self.principal
        basis = np.eye(self.dim)

        def matrix(i, j):
            def fn(b):
                t = self.fiber_transition(i, j, b)
                return np.column_stack([t(e) for e in basis])
            return fn

        transitions = {(i, j): matrix(i, j) for i, j in itertools.permutations(p.index_set, 2)}
        return CocycleBundle(f"Fr({p.name})", p.base, general_linear(self.dim), p.index_set,
                             p.cover, transitions, p.partition)


def associated_bundle(principal: CocycleBundle, rep=None) -> AssociatedBundle:
    rep = principal.group.representation if rep is None else rep
    if rep is None:
        raise PreconditionError(f"group {principal.group.name} has no representation")
    dim = np.asarray(rep(principal.group.identity)).shape[0]
    return AssociatedBundle(principal, rep, dim)


def pushforward(principal: CocycleBundle, rep) -> CocycleBundle:
    """The GL(d) cocycle ``rep(g_ij)`` computed directly from the principal data."""
    dim = np.asarray(rep(principal.group.identity)).shape[0]
    transitions = {(i, j): (lambda b, i=i, j=j: rep(principal.transition(i, j, b)))
                   for i, j in itertools.permutations(principal.index_set, 2)}
    return CocycleBundle(f"{principal.name}[rep]", principal.base, general_linear(dim),
                         principal.index_set, principal.cover, transitions, principal.partition)


def frame_roundtrip_check(principal: CocycleBundle, rep=None) -> GaugeReport:
    """Associated vector bundle, then its frame bundle, against ``rep(g_ij)``."""
    assoc = associated_bundle(principal, rep)
    frames = assoc.frame_bundle()
    direct = pushforward(principal, assoc.rep)
    return gauge_check(direct, frames, GaugeTransformation.identity(direct),
                       tol=tolerance("rep_homomorphism"))
