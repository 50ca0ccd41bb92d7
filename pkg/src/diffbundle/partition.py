"""Smooth partitions of unity on sampled base spaces."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Sequence

import numpy as np

from .config import tolerance
from .errors import PreconditionError
from .smooth import make_flat_bump

Point = Any
Predicate = Callable[[Point], bool]

_phi = make_flat_bump()


def _perturb_vector(point, radius: float, rng: np.random.Generator):
    x = np.asarray(point, dtype=float)
    direction = rng.normal(size=x.shape)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return tuple(x)
    return tuple(x + radius * rng.uniform() * direction / norm)


@dataclass
class BaseSpace:
    """A finite sample standing in for a diffeological space.

    Points are opaque to this module; vector-like spaces use tuples of floats
    whose coordinate names are listed in ``coords``. ``perturb`` draws a point
    from a probe ball and is what the local-finiteness audit uses.
    """

    name: str
    points: Sequence[Point]
    point_type: str = "vector"
    coords: tuple[str, ...] = ()
    charts: dict | None = None
    perturb: Callable[[Point, float, np.random.Generator], Point] | None = None

    def __post_init__(self):
        if len(self.points) == 0:
            raise PreconditionError(f"base space {self.name!r} has an empty sample grid")
        if self.perturb is None and self.point_type == "vector":
            self.perturb = _perturb_vector

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


@dataclass(frozen=True)
class PartitionAudit:
    min_value: float
    max_sum_error: float
    subordination_violations: tuple
    max_support_count: int
    passed: bool

    def to_dict(self) -> dict:
        return {"min_value": self.min_value, "max_sum_error": self.max_sum_error,
                "subordination_violations": [repr(v) for v in self.subordination_violations[:10]],
                "n_subordination_violations": len(self.subordination_violations),
                "max_support_count": self.max_support_count, "passed": self.passed}


@dataclass(frozen=True)
class PartitionOfUnity:
    """Functions ``mu_i`` indexed by ``index_set`` with cover predicates ``X_i``.

    ``evaluate`` returns all values at a point in ``index_set`` order; when
    absent it is assembled from the individual functions.
    """

    index_set: tuple
    functions: Mapping[Hashable, Callable[[Point], float]]
    cover: Mapping[Hashable, Predicate]
    evaluate: Callable[[Point], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        missing = [i for i in self.index_set if i not in self.functions or i not in self.cover]
        if missing:
            raise PreconditionError(f"indices without function or cover set: {missing}")

    def __call__(self, i, x) -> float:
        return float(self.functions[i](x))

    def values(self, x) -> np.ndarray:
        if self.evaluate is not None:
            return self.evaluate(x)
        return np.array([float(self.functions[i](x)) for i in self.index_set])

    def support(self, x, floor: float = 0.0) -> tuple:
        vals = self.values(x)
        return tuple(i for i, v in zip(self.index_set, vals) if v > floor)

    def audit(self, space: BaseSpace) -> PartitionAudit:
        sum_tol = tolerance("partition_sum")
        floor = tolerance("support_floor")
        cap = int(tolerance("max_support_count"))
        min_value, max_err, worst_count = np.inf, 0.0, 0
        violations = []
        for x in space:
            vals = self.values(x)
            min_value = min(min_value, float(vals.min()))
            max_err = max(max_err, abs(float(vals.sum()) - 1.0))
            worst_count = max(worst_count, int(np.sum(vals > floor)))
            for i, v in zip(self.index_set, vals):
                if v > 0.0 and not self.cover[i](x):
                    violations.append((i, x))
        passed = (min_value >= 0.0 and max_err <= sum_tol and not violations
                  and worst_count <= cap)
        return PartitionAudit(float(min_value), max_err, tuple(violations), worst_count, passed)


def _positivity(f) -> Predicate:
    return lambda x: float(f(x)) > 0.0


def normalize(family: Mapping[Hashable, Callable[[Point], float]], space: BaseSpace,
              cover: Mapping[Hashable, Predicate] | None = None) -> PartitionOfUnity:
    """Scale nonnegative functions with nowhere-vanishing sum into a partition."""
    index_set = tuple(family)
    funcs = [family[i] for i in index_set]
    floor = tolerance("support_floor")
    for x in space:
        vals = np.array([float(f(x)) for f in funcs])
        if np.any(vals < 0.0):
            raise PreconditionError(f"family takes a negative value at {x!r}")
        if vals.sum() <= floor:
            raise PreconditionError(f"family sum vanishes at {x!r}")

    def evaluate(x) -> np.ndarray:
        vals = np.array([float(f(x)) for f in funcs])
        return vals / vals.sum()

    def component(k: int):
        return lambda x: float(evaluate(x)[k])

    functions = {i: component(k) for k, i in enumerate(index_set)}
    if cover is None:
        cover = {i: _positivity(family[i]) for i in index_set}
    return PartitionOfUnity(index_set, functions, dict(cover), evaluate)


def shrink_supports(rho: PartitionOfUnity, space: BaseSpace) -> PartitionOfUnity:
    """Partition subordinate to the positivity sets of ``rho``.

    Uses ``mu_i = phi(rho_i - sigma/2)`` with ``sigma = sum rho_j^2``; the
    largest ``rho_j`` always clears ``sigma/2``, so the sum never vanishes.
    """

    def raw(x) -> np.ndarray:
        vals = rho.values(x)
        sigma = float(np.dot(vals, vals))
        return np.array([_phi(v - 0.5 * sigma) for v in vals])

    family = {i: (lambda x, k=k: float(raw(x)[k])) for k, i in enumerate(rho.index_set)}
    cover = {i: (lambda x, i=i: rho(i, x) > 0.0) for i in rho.index_set}
    shrunk = normalize(family, space, cover)

    def evaluate(x) -> np.ndarray:
        vals = raw(x)
        return vals / vals.sum()

    return PartitionOfUnity(shrunk.index_set, shrunk.functions, shrunk.cover, evaluate)


@dataclass(frozen=True)
class RefinedPartition(PartitionOfUnity):
    """Countable refinement; index ``n`` collects the disjoint blocks ``B_J``, ``|J| = n``."""

    source: PartitionOfUnity | None = field(default=None, compare=False)

    def block_values(self, x) -> dict[frozenset, float]:
        return _block_values(self.source, x)

    def blocks(self, x) -> dict[int, frozenset]:
        """For each level ``n`` the unique ``J`` with ``x`` in ``B_J``, if any."""
        out: dict[int, frozenset] = {}
        for J, v in self.block_values(x).items():
            if v > 0.0:
                out.setdefault(len(J), J)
        return out

    def chart_for(self, n: int, x):
        """An index ``i`` of the source partition with ``B_J`` inside ``rho_i > 0``."""
        J = self.blocks(x).get(n)
        if J is None:
            raise PreconditionError(f"point {x!r} is not in level {n}")
        return min(J, key=self.source.index_set.index)


def _block_values(rho: PartitionOfUnity, x) -> dict[frozenset, float]:
    vals = rho.values(x)
    total = float(vals.sum())
    supp = [k for k, v in enumerate(vals) if v > 0.0]
    out = {}
    for size in range(1, len(supp) + 1):
        for combo in itertools.combinations(supp, size):
            inside = float(sum(vals[k] for k in combo))
            outside = total - inside
            prod = 1.0
            for k in combo:
                prod *= _phi(vals[k] - outside)
                if prod == 0.0:
                    break
            out[frozenset(rho.index_set[k] for k in combo)] = prod
    return out


def countable_refine(rho: PartitionOfUnity, max_cardinality: int,
                     space: BaseSpace) -> RefinedPartition:
    """Refine ``rho`` into a partition indexed by ``1..max_cardinality``.

    Only subsets ``J`` of a point's support can have ``sigma_J > 0``, so the
    power set is never enumerated beyond what the point realises.
    """
    if max_cardinality < 1:
        raise PreconditionError("max_cardinality must be at least 1")
    for x in space:
        count = len(rho.support(x))
        if count > max_cardinality:
            raise PreconditionError(
                f"support of size {count} at {x!r} exceeds max_cardinality={max_cardinality}")

    levels = tuple(range(1, max_cardinality + 1))

    def raw(x) -> np.ndarray:
        tau = np.zeros(max_cardinality)
        for J, v in _block_values(rho, x).items():
            if len(J) <= max_cardinality:
                tau[len(J) - 1] += v
        return tau

    def evaluate(x) -> np.ndarray:
        tau = raw(x)
        total = tau.sum()
        if total <= 0.0:
            raise PreconditionError(f"refined family vanishes at {x!r}")
        return tau / total

    functions = {n: (lambda x, k=n - 1: float(evaluate(x)[k])) for n in levels}
    cover = {n: (lambda x, k=n - 1: raw(x)[k] > 0.0) for n in levels}
    for x in space:
        evaluate(x)
    return RefinedPartition(levels, functions, cover, evaluate, source=rho)


@dataclass(frozen=True)
class RefinementAudit:
    disjointness_violations: int
    containment_violations: int
    coverage_failures: int

    @property
    def passed(self) -> bool:
        return not (self.disjointness_violations or self.containment_violations
                    or self.coverage_failures)

    def to_dict(self) -> dict:
        return {"disjointness_violations": self.disjointness_violations,
                "containment_violations": self.containment_violations,
                "coverage_failures": self.coverage_failures, "passed": self.passed}


def audit_refinement(refined: RefinedPartition, space: BaseSpace) -> RefinementAudit:
    """Same-size blocks are disjoint and every block sits inside its charts."""
    disjoint = contain = uncovered = 0
    for x in space:
        blocks = refined.block_values(x)
        sizes: dict[int, int] = {}
        for J, v in blocks.items():
            if v > 0.0:
                sizes[len(J)] = sizes.get(len(J), 0) + 1
                if any(refined.source(j, x) <= 0.0 for j in J):
                    contain += 1
        disjoint += sum(c - 1 for c in sizes.values() if c > 1)
        if not sizes:
            uncovered += 1
    return RefinementAudit(disjoint, contain, uncovered)


@dataclass(frozen=True)
class FinitenessReport:
    counts: tuple[int, ...]
    max_count: int
    probe_radius: float

    def to_dict(self) -> dict:
        return {"max_count": self.max_count, "probe_radius": self.probe_radius}


def audit_local_finiteness(cover: Mapping[Hashable, Predicate], space: BaseSpace,
                           probe_radius: float, n_probes: int = 8,
                           seed: int = 0) -> FinitenessReport:
    """Count, per grid point, the cover sets meeting a sampled probe ball.

    Sampling can miss sets that meet the ball only between probes; the count
    is a lower bound on the true one.
    """
    rng = np.random.default_rng(seed)
    counts = []
    for x in space:
        probes = [x]
        if space.perturb is not None:
            probes += [space.perturb(x, probe_radius, rng) for _ in range(n_probes)]
        hits = {i for i, pred in cover.items() if any(pred(p) for p in probes)}
        counts.append(len(hits))
    return FinitenessReport(tuple(counts), max(counts), probe_radius)
