"""Finite truncations of the Milnor join EG and its quotient BG.

A point of EG is a finitely supported list of ``(index, weight, element)``
entries with weights summing to 1. Zero weights are dropped, since their
group entries carry no information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .config import tolerance
from .errors import MembershipError, PreconditionError
from .group import GroupDescriptor, get_group, require_same
from .smooth import BumpSpec, make_step, make_strict_ramp

_step = make_step(BumpSpec())
_ramp = make_strict_ramp()


@dataclass(frozen=True)
class MilnorPoint:
    """A point of EG_n: entries sorted by index, all weights positive.

    ``n`` is the truncation bound; it does not take part in equality.
    """

    group: GroupDescriptor
    entries: tuple[tuple[int, float, Any], ...]
    n: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise PreconditionError("a Milnor point needs at least one positive weight")
        last = -1
        for i, t, _ in self.entries:
            if i <= last:
                raise PreconditionError("entries must have strictly increasing indices")
            if not t > 0.0:
                raise PreconditionError(f"stored weight at index {i} is not positive: {t}")
            last = i
        if last > self.n:
            object.__setattr__(self, "n", last)
        total = math.fsum(t for _, t, _ in self.entries)
        if abs(total - 1.0) > tolerance("weight_sum"):
            raise PreconditionError(f"weights sum to {total}, not 1")

    @classmethod
    def build(cls, group: GroupDescriptor, items: Iterable[tuple[int, float, Any]],
              n: int = 0) -> "MilnorPoint":
        """Sort, drop zero weights, and construct."""
        kept = sorted((int(i), float(t), g) for i, t, g in items if t > 0.0)
        return cls(group, tuple(kept), n)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _, _ in self.entries)

    @property
    def weights(self) -> dict[int, float]:
        return {i: t for i, t, _ in self.entries}

    @property
    def elements(self) -> dict[int, Any]:
        return {i: g for i, _, g in self.entries}

    def weight(self, i: int) -> float:
        return self.weights.get(i, 0.0)

    def weight_vector(self, length: int | None = None) -> np.ndarray:
        length = self.n + 1 if length is None else length
        out = np.zeros(length)
        for i, t, _ in self.entries:
            out[i] = t
        return out

    def close(self, other: "MilnorPoint", tol: float) -> bool:
        if self.indices != other.indices:
            return False
        for (_, t, g), (_, s, h) in zip(self.entries, other.entries):
            if abs(t - s) > tol or self.group.distance(g, h) > tol:
                return False
        return True

    def to_dict(self) -> dict:
        return {"group": self.group.name, "n": self.n,
                "entries": [[i, t, self.group.to_json(g)] for i, t, g in self.entries]}

    @classmethod
    def from_dict(cls, data: dict) -> "MilnorPoint":
        group = get_group(data["group"])
        return cls.build(group, ((i, t, group.from_json(g)) for i, t, g in data["entries"]),
                         int(data.get("n", 0)))


@dataclass(frozen=True)
class BGPoint:
    """A Milnor point in canonical gauge: identity at the smallest stored index."""

    point: MilnorPoint

    def __post_init__(self):
        first = self.point.entries[0][2]
        if first is not self.point.group.identity and not self.point.group.equal(
                first, self.point.group.identity, 0.0):
            raise PreconditionError("BG point is not in canonical gauge")

    @property
    def group(self) -> GroupDescriptor:
        return self.point.group

    @property
    def weights(self) -> dict[int, float]:
        return self.point.weights

    @property
    def n(self) -> int:
        return self.point.n

    def weight(self, i: int) -> float:
        return self.point.weight(i)

    def close(self, other: "BGPoint", tol: float) -> bool:
        return self.point.close(other.point, tol)

    def to_dict(self) -> dict:
        return self.point.to_dict()


def variation_distance(p: MilnorPoint, q: MilnorPoint) -> float:
    """Total-variation distance between the weight vectors."""
    wp, wq = p.weights, q.weights
    return 0.5 * sum(abs(wp.get(i, 0.0) - wq.get(i, 0.0)) for i in set(wp) | set(wq))


def random_point(group: GroupDescriptor, n: int, rng: np.random.Generator,
                 support: int | None = None) -> MilnorPoint:
    """Random point of EG_n with Dirichlet weights on a random index subset."""
    size = int(rng.integers(1, n + 2)) if support is None else support
    idx = sorted(int(i) for i in rng.choice(n + 1, size=size, replace=False))
    w = rng.dirichlet(np.ones(size))
    w = w / math.fsum(w)
    return MilnorPoint.build(group, ((i, float(t), group.sample(rng)) for i, t in zip(idx, w)), n)


def eg_act(p: MilnorPoint, g) -> MilnorPoint:
    """Right action: every stored group entry is multiplied on the right by ``g``."""
    mul = p.group.multiply
    return MilnorPoint(p.group, tuple((i, t, mul(x, g)) for i, t, x in p.entries), p.n)


def eg_divide(p: MilnorPoint, q: MilnorPoint, tol: float | None = None):
    """The ``g`` with ``q = p.g``, or ``None`` when no such element exists."""
    require_same(p.group, q.group)
    tol = tolerance("equivariance") if tol is None else tol
    if p.indices != q.indices:
        return None
    if any(abs(t - s) > tolerance("weight_sum") for (_, t, _), (_, s, _) in zip(p.entries, q.entries)):
        return None
    grp = p.group
    g = grp.divide(p.entries[0][2], q.entries[0][2])
    for (_, _, a), (_, _, b) in zip(p.entries[1:], q.entries[1:]):
        if grp.discrete:
            if grp.distance(grp.multiply(a, g), b) != 0.0:
                return None
        elif grp.distance(grp.multiply(a, g), b) > tol:
            return None
    return g


def eg_project(p: MilnorPoint) -> BGPoint:
    grp = p.group
    shift = grp.invert(p.entries[0][2])
    entries = [(p.entries[0][0], p.entries[0][1], grp.identity)]
    entries += [(i, t, grp.multiply(x, shift)) for i, t, x in p.entries[1:]]
    return BGPoint(MilnorPoint(grp, tuple(entries), p.n))


def cover_threshold(i: int) -> float:
    return 1.0 / 2 ** (i + 2)


def support_threshold(i: int) -> float:
    return 1.0 / 2 ** (i + 1)


def bg_cover_member(i: int, b: BGPoint | MilnorPoint) -> bool:
    return b.weight(i) > cover_threshold(i)


def _rho(i: int, t: float) -> float:
    return _ramp(t - support_threshold(i))


def bg_partition_values(b: BGPoint | MilnorPoint) -> dict[int, float]:
    """All nonzero ``tau_i(b)``; the denominator is a finite sum over stored indices."""
    raw = {i: _rho(i, t) for i, t in b.weights.items()}
    total = math.fsum(raw.values())
    if total <= 0.0:
        raise PreconditionError("partition denominator vanishes; weights cannot sum to 1")
    return {i: v / total for i, v in raw.items() if v > 0.0}


def bg_partition_value(i: int, b: BGPoint | MilnorPoint) -> float:
    return bg_partition_values(b).get(i, 0.0)


def bg_section(i: int, b: BGPoint) -> MilnorPoint:
    """Local section over ``B_i``: the representative with identity at index ``i``."""
    if not bg_cover_member(i, b):
        raise MembershipError(f"point is not in cover set B_{i} (t_{i} = {b.weight(i)})")
    grp = b.group
    p = b.point
    shift = grp.invert(p.elements[i])
    entries = tuple((j, t, grp.identity if j == i else grp.multiply(x, shift))
                    for j, t, x in p.entries)
    return MilnorPoint(grp, entries, p.n)


def _out_n(p: MilnorPoint) -> int:
    return 2 * p.n + 1


def _shuffle_level(t: float) -> int:
    m = int(math.floor(1.0 / t))
    while t < 1.0 / (m + 1):
        m += 1
    while m > 1 and t >= 1.0 / m:
        m -= 1
    return m


def odd_shuffle_homotopy(p: MilnorPoint, t: float) -> MilnorPoint:
    """Moves all weight onto even indices as ``t`` runs from 0 to 1.

    On ``[1/(m+1), 1/m)`` indices below ``m`` are frozen and the tail is
    split between ``m + 2j`` and ``m + 2j + 1``.
    """
    if t <= 0.0:
        return p
    n_out = _out_n(p)
    if t >= 1.0:
        return MilnorPoint(p.group, tuple((2 * i, w, g) for i, w, g in p.entries), n_out)
    if t < 1.0 / (p.entries[-1][0] + 2):
        # every stored index is below the level, so nothing moves yet
        return MilnorPoint(p.group, p.entries, n_out)
    m = _shuffle_level(t)
    lo, hi = 1.0 / (m + 1), 1.0 / m
    alpha = _step((t - lo) / (hi - lo))
    items = []
    for i, w, g in p.entries:
        if i < m:
            items.append((i, w, g))
        else:
            j = i - m
            items.append((m + 2 * j, (1.0 - alpha) * w, g))
            items.append((m + 2 * j + 1, alpha * w, g))
    return MilnorPoint.build(p.group, items, n_out)


def even_shuffle_homotopy(p: MilnorPoint, t: float) -> MilnorPoint:
    """Moves all weight onto odd indices; index ``j`` ends at ``2j + 1``.

    The first half runs the odd shuffle at double speed, the second half
    slides each even index ``2j`` onto ``2j + 1``.
    """
    if t <= 0.0:
        return p
    n_out = _out_n(p)
    if t <= 0.5:
        return odd_shuffle_homotopy(p, 2.0 * t)
    if t >= 1.0:
        return MilnorPoint(p.group, tuple((2 * i + 1, w, g) for i, w, g in p.entries), n_out)
    beta = _step(2.0 * t - 1.0)
    items = []
    for i, w, g in p.entries:
        items.append((2 * i, (1.0 - beta) * w, g))
        items.append((2 * i + 1, beta * w, g))
    return MilnorPoint.build(p.group, items, n_out)


def interpolate_disjoint(p: MilnorPoint, q: MilnorPoint, t: float) -> MilnorPoint:
    """Convex mix of an even-supported ``p`` and an odd-supported ``q``."""
    require_same(p.group, q.group)
    if any(i % 2 for i in p.indices) or any(i % 2 == 0 for i in q.indices):
        raise PreconditionError("interpolation needs p on even indices and q on odd indices")
    r = _step(t)
    n_out = max(p.n, q.n)
    if r <= 0.0:
        return p
    if r >= 1.0:
        return q
    items = [(i, (1.0 - r) * w, g) for i, w, g in p.entries]
    items += [(i, r * w, g) for i, w, g in q.entries]
    return MilnorPoint.build(p.group, items, n_out)


STAGES = (
    ("odd-shuffle of h0", 0.0, 1.0 / 3.0),
    ("interpolation", 1.0 / 3.0, 2.0 / 3.0),
    ("even-shuffle of h1, reversed", 2.0 / 3.0, 1.0),
)


@dataclass(frozen=True)
class EquivariantHomotopy:
    """Three-stage homotopy from ``h0`` to ``h1``, each stage on a third of [0, 1]."""

    h0: Callable[[Any], MilnorPoint]
    h1: Callable[[Any], MilnorPoint]
    group: GroupDescriptor
    act: Callable[[Any, Any], Any]
    stages: tuple = STAGES

    def __call__(self, x, t: float) -> MilnorPoint:
        if t <= 1.0 / 3.0:
            return odd_shuffle_homotopy(self.h0(x), 3.0 * t)
        if t < 2.0 / 3.0:
            p = odd_shuffle_homotopy(self.h0(x), 1.0)
            q = even_shuffle_homotopy(self.h1(x), 1.0)
            return interpolate_disjoint(p, q, 3.0 * t - 1.0)
        return even_shuffle_homotopy(self.h1(x), 3.0 - 3.0 * t)

    def audit(self, samples: Sequence, times: Sequence[float], elements: Sequence) -> dict:
        """Normalisation, equivariance and endpoint errors over sampled triples."""
        norm = equiv = endpoint = 0.0
        for x in samples:
            endpoint = max(endpoint, _point_gap(self(x, 0.0), self.h0(x)),
                           _point_gap(self(x, 1.0), self.h1(x)))
            for t in times:
                p = self(x, t)
                norm = max(norm, abs(math.fsum(p.weights.values()) - 1.0))
                for g in elements:
                    equiv = max(equiv, _point_gap(self(self.act(x, g), t), eg_act(p, g)))
        return {"normalization": norm, "equivariance": equiv, "endpoint": endpoint,
                "passed": norm <= tolerance("weight_sum")
                and equiv <= tolerance("equivariance") and endpoint == 0.0}


def _point_gap(p: MilnorPoint, q: MilnorPoint) -> float:
    """Largest weight or element discrepancy; infinite if supports differ."""
    if p.indices != q.indices:
        return math.inf
    gap = 0.0
    for (_, t, g), (_, s, h) in zip(p.entries, q.entries):
        gap = max(gap, abs(t - s), p.group.distance(g, h))
    return gap


def point_gap(p: MilnorPoint, q: MilnorPoint) -> float:
    return _point_gap(p, q)


def equivariant_homotopy(h0, h1, group: GroupDescriptor, act, samples: Sequence,
                         elements: Sequence) -> EquivariantHomotopy:
    """Build the composite homotopy after checking ``h0``, ``h1`` are equivariant on samples."""
    tol = tolerance("equivariance")
    for name, h in (("h0", h0), ("h1", h1)):
        for x in samples:
            hx = h(x)
            for g in elements:
                if _point_gap(h(act(x, g)), eg_act(hx, g)) > tol:
                    raise PreconditionError(f"{name} is not equivariant at sample {x!r}")
    return EquivariantHomotopy(h0, h1, group, act)


def contraction(group: GroupDescriptor) -> Callable[[MilnorPoint, float], MilnorPoint]:
    """Homotopy from the identity of EG to the constant map at ``[(0, 1, e)]``.

    Built on ``E = EG x G`` with the action on the second factor, then
    restricted to the identity element.
    """
    e = group.identity
    base = MilnorPoint(group, ((0, 1.0, e),))

    def act(x, g):
        return (x[0], group.multiply(x[1], g))

    homotopy = EquivariantHomotopy(lambda x: eg_act(x[0], x[1]),
                                   lambda x: eg_act(base, x[1]), group, act)

    def evaluate(p: MilnorPoint, t: float) -> MilnorPoint:
        require_same(p.group, group)
        return homotopy((p, e), t)

    evaluate.homotopy = homotopy  # type: ignore[attr-defined]
    return evaluate
