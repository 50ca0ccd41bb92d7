"""Transport of a bundle over B x R from time 0 to time 1.

The cylinder's partition is turned into a cover of B by multi-indices
``k = (k(1), ..., k(n))``: ``b`` lies in ``B_k`` when chart ``k(i)`` is
positive on the whole slab ``{b} x [(i - 3/2)/n, (i + 1/2)/n]``. Positivity
is tested with the zero-detecting functional, and the resulting weights
``prod_i F(...)`` are kept as ``L_k = sum_i exp(s_i)`` with ``s_i`` the
log-log values, since the products underflow immediately.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .bundle import (CocycleBundle, GaugeReport, GaugeTransformation, TotalPoint,
                     common_refinement, gauge_check)
from .config import tolerance
from .errors import IncreaseTruncation, MembershipError, PreconditionError
from .partition import BaseSpace, PartitionOfUnity, normalize
from .smooth import BumpSpec, make_step
from .zero_detect import functional_F

_step = make_step(BumpSpec())
_SLAB_GRID = np.linspace(0.0, 1.0, 1001)


def slab(n: int, i: int) -> tuple[float, float]:
    return (i - 1.5) / n, (i + 0.5) / n


@dataclass
class CylinderBundle:
    """A bundle over ``B x R`` sampled on ``base x times``; points are ``(b, t)``."""

    bundle: CocycleBundle
    base: BaseSpace
    times: tuple = tuple(np.linspace(0.0, 1.0, 11))
    name: str = "cylinder"

    def __post_init__(self):
        if self.bundle.partition is None:
            raise PreconditionError("a cylinder needs a partition of unity")

    @property
    def index_set(self) -> tuple:
        return self.bundle.index_set

    def rho(self, b, t: float) -> np.ndarray:
        return self.bundle.partition.values((b, t))

    def restriction(self, t: float, name: str | None = None) -> CocycleBundle:
        """The bundle over ``B x {t}`` as a bundle over ``B``."""
        cyl = self.bundle
        cover = {i: (lambda b, p=p: p((b, t))) for i, p in cyl.cover.items()}
        transitions = {ij: (lambda b, fn=fn: fn((b, t))) for ij, fn in cyl.transitions.items()}
        src = cyl.partition
        partition = PartitionOfUnity(
            src.index_set, {i: (lambda b, f=f: f((b, t))) for i, f in src.functions.items()},
            cover, lambda b: src.values((b, t)))
        return CocycleBundle(name or f"{self.name}@t={t}", self.base, cyl.group, cyl.index_set,
                             cover, transitions, partition)


def cylinder_from_homotopy(target: CocycleBundle, F: Callable[[Any, float], Any],
                           base: BaseSpace, times=None, name: str = "cylinder") -> CylinderBundle:
    """Pull ``target`` back along ``F: B x R -> B'`` without materialising B x R."""
    if target.partition is None:
        raise PreconditionError(f"{target.name} carries no partition of unity")
    cache: dict = {}

    def phi(bt):
        try:
            return cache[bt]
        except KeyError:
            v = cache[bt] = F(bt[0], bt[1])
            return v

    times = tuple(np.linspace(0.0, 1.0, 11)) if times is None else tuple(times)
    grid = BaseSpace(f"{base.name}xR", [(b, float(t)) for b in base for t in times], "product")
    cover = {i: (lambda bt, p=p: p(phi(bt))) for i, p in target.cover.items()}
    transitions = {ij: (lambda bt, fn=fn: fn(phi(bt))) for ij, fn in target.transitions.items()}
    src = target.partition
    partition = PartitionOfUnity(
        src.index_set, {i: (lambda bt, f=f: f(phi(bt))) for i, f in src.functions.items()},
        cover, lambda bt: src.values(phi(bt)))
    bundle = CocycleBundle(f"F*{target.name}", grid, target.group, target.index_set, cover,
                           transitions, partition)
    return CylinderBundle(bundle, base, times, name)


@dataclass
class SliceCover:
    """Realised multi-indices with their log-domain weights, per base point."""

    n_max: int
    index_set: tuple
    slab_values: dict = field(default_factory=dict)   # (b, n, i, j) -> log-log value
    members: dict = field(default_factory=dict)       # b -> {k: tuple of log-log values}

    def multi_indices(self, b) -> list[tuple]:
        return sorted(self.members.get(b, {}), key=lambda k: (len(k), k))

    def contains(self, b, k: tuple) -> bool:
        return k in self.members.get(b, {})

    def log_weight(self, b, k: tuple) -> float:
        """``log L_k(b)``; ``rho_hat_k(b) = exp(-L_k(b))``. Slab values can exceed
        the float exponent range, hence the extra logarithm."""
        vals = self.members.get(b, {}).get(k)
        if vals is None:
            return math.inf
        m = max(vals)
        return m + math.log(math.fsum(math.exp(s - m) for s in vals))

    def weights(self, b) -> dict[tuple, float]:
        """Normalised ``rho_k(b)``, computed from differences ``L_k - L_ref``."""
        ks = self.multi_indices(b)
        if not ks:
            raise IncreaseTruncation(f"no multi-index covers {b!r} at n <= {self.n_max}")
        vals = self.members[b]
        logs = {k: self.log_weight(b, k) for k in ks}
        ref = min(ks, key=lambda k: (logs[k], len(k), k))

        def diff(k):
            if k == ref:
                return 0.0
            if len(k) == len(ref) and max(vals[k] + vals[ref]) < 700.0:
                return math.fsum(math.exp(r) * math.expm1(s - r) for s, r in zip(vals[k], vals[ref]))
            gap = logs[k] - logs[ref]
            if gap == 0.0:
                return 0.0
            ld = logs[ref] + math.log(math.expm1(gap)) if gap < 700.0 else math.inf
            return math.exp(ld) if ld < 700.0 else math.inf

        expo = {k: math.exp(-diff(k)) for k in ks}
        total = math.fsum(expo.values())
        return {k: v / total for k, v in expo.items()}


def _slab_log_value(cyl: CylinderBundle, b, n: int, i: int, pos: int) -> float:
    lo, hi = slab(n, i)

    def rho_tilde(s: float) -> float:
        return float(cyl.rho(b, lo + (hi - lo) * s)[pos])

    return functional_F(rho_tilde, cap=math.inf).log_log_value


def slice_cover(cyl: CylinderBundle, n_max: int = 4, points=None) -> SliceCover:
    """Enumerate ``B_k`` for ``|k| <= n_max`` at each base grid point."""
    idx = cyl.index_set
    cover = SliceCover(n_max, idx)
    points = cyl.base.points if points is None else points
    for b in points:
        found = {}
        for n in range(1, n_max + 1):
            allowed = []
            for i in range(1, n + 1):
                ok = []
                for pos, j in enumerate(idx):
                    s = _slab_log_value(cyl, b, n, i, pos)
                    cover.slab_values[b, n, i, j] = s
                    if math.isfinite(s):
                        ok.append((j, s))
                allowed.append(ok)
            for combo in itertools.product(*allowed):
                found[tuple(j for j, _ in combo)] = tuple(s for _, s in combo)
        if not found:
            raise IncreaseTruncation(f"no multi-index covers {b!r} at n <= {n_max}; increase n")
        cover.members[b] = found
    return cover


def slab_positive(cyl: CylinderBundle, b, n: int, i: int, j) -> bool:
    """Oracle: chart ``j`` is positive at every point of a fine slab grid."""
    pos = cyl.index_set.index(j)
    lo, hi = slab(n, i)
    return all(float(cyl.rho(b, lo + (hi - lo) * s)[pos]) > 0.0 for s in _SLAB_GRID)


def slice_cover_audit(cyl: CylinderBundle, cover: SliceCover) -> dict:
    """Membership in ``B_k`` against closed-slab positivity, for every ``k``."""
    violations, checked = [], 0
    for b in cover.members:
        positive = {(n, i, j): slab_positive(cyl, b, n, i, j)
                    for n in range(1, cover.n_max + 1) for i in range(1, n + 1)
                    for j in cover.index_set}
        for n in range(1, cover.n_max + 1):
            for k in itertools.product(cover.index_set, repeat=n):
                checked += 1
                expect = all(positive[n, i + 1, j] for i, j in enumerate(k))
                if expect != cover.contains(b, k):
                    violations.append((b, k))
    return {"checked": checked, "violations": len(violations),
            "examples": [repr(v) for v in violations[:5]], "passed": not violations}


def _freeze(t: float, start: float, stop: float) -> float:
    """Smooth clamp: identity near ``start``, constant from the last quarter to ``stop``."""
    if t <= start:
        return t
    width = stop - start
    u = min((t - start) / width, 1.0)
    return start + width * _freeze_profile(u)


_PROFILE_NODES, _PROFILE_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _freeze_profile(u: float) -> float:
    """``K(u) = int_0^u (1 - step(v)) dv``; equals ``u`` for ``u <= 1/4``."""
    if u <= 0.25:
        return u
    a, b = 0.25, min(u, 0.75)
    half = 0.5 * (b - a)
    nodes = a + half * (_PROFILE_NODES + 1.0)
    tail = half * float(np.dot(_PROFILE_WEIGHTS, [1.0 - _step(v) for v in nodes]))
    return 0.25 + tail


@dataclass
class SliceTrivialization:
    """A section ``sigma`` of the cylinder bundle over ``{b} x [0, 1]``.

    ``sigma(t)`` is described in chart ``k(i)`` up to the switch time of the
    ``i``-th overlap, then in chart ``k(i+1)`` through a frozen transition.
    """

    cyl: CylinderBundle
    b: Any
    k: tuple
    _corrections: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.k)

    def _switch(self, i: int) -> tuple[float, float, float]:
        """Switch time and freezing window for the overlap of slabs ``i`` and ``i + 1``."""
        start = slab(self.n, i + 1)[0]
        w = 1.0 / self.n
        return start + w / 3.0, start + w / 3.0, start + 2.0 * w / 3.0

    def _segment(self, t: float) -> int:
        for i in range(1, self.n):
            if t < self._switch(i)[0]:
                return i
        return self.n

    def coordinate(self, t: float) -> tuple[Any, Any]:
        """``(chart, c)`` with ``sigma(t)`` having coordinate ``c`` in ``chart``."""
        seg = self._segment(t)
        return self.k[seg - 1], self._correction(seg, t)

    def _correction(self, seg: int, t: float):
        grp = self.cyl.bundle.group
        if seg == 1:
            return grp.identity
        _, a, stop = self._switch(seg - 1)
        s = _freeze(t, a, stop)
        prev = self._correction(seg - 1, s)
        g = self.cyl.bundle.transition(self.k[seg - 1], self.k[seg - 2], (self.b, s))
        return grp.multiply(g, prev)

    def point(self, t: float, g) -> TotalPoint:
        chart, c = self.coordinate(t)
        return TotalPoint(chart, (self.b, t), self.cyl.bundle.group.multiply(c, g))

    def local_coordinate(self, x: TotalPoint):
        """The ``g`` with ``x = sigma(t) g``."""
        if x.base[0] != self.b:
            raise MembershipError("point is not over this slice")
        chart, c = self.coordinate(x.base[1])
        y = self.cyl.bundle.change_chart(x, chart)
        return self.cyl.bundle.group.divide(c, y.fiber)


def switch_jumps(triv: SliceTrivialization, delta: float = 1e-12) -> float:
    """Largest gap between ``sigma(s - delta)`` and ``sigma(s + delta)`` at the switch times."""
    bundle = triv.cyl.bundle
    worst = 0.0
    for i in range(1, triv.n):
        s = triv._switch(i)[0]
        e = bundle.group.identity
        left, right = triv.point(s - delta, e), triv.point(s + delta, e)
        right = TotalPoint(right.chart, left.base, right.fiber)
        worst = max(worst, bundle.group.distance(bundle.change_chart(right, left.chart).fiber,
                                                 left.fiber))
    return worst


def cylinder_trivialize(cyl: CylinderBundle, cover: SliceCover, b, k: tuple) -> SliceTrivialization:
    if not cover.contains(b, k):
        raise MembershipError(f"{b!r} is not in B_{k}")
    return SliceTrivialization(cyl, b, tuple(k))


@dataclass
class TransportResult:
    gauge: GaugeTransformation
    source: CocycleBundle
    target: CocycleBundle
    report: GaugeReport
    composite_log: dict
    base_composite_ok: bool
    apply: Callable[[TotalPoint], TotalPoint] = field(repr=False)

    def to_dict(self) -> dict:
        return {"gauge": self.report.to_dict(), "base_composite_ok": self.base_composite_ok,
                "factors_per_point": max(len(v) for v in self.composite_log.values())}


def _h(s: float, t: float) -> float:
    return (1.0 - t) * s + t


def endpoint_transport(cyl: CylinderBundle, n_max: int = 4, cover: SliceCover | None = None,
                       extra_factors: tuple = ()) -> TransportResult:
    """Move fibres over ``t = 0`` to ``t = 1`` by the composite of the ``f_k``.

    ``extra_factors`` inserts multi-indices whose ``u_k`` is forced to 0; they
    must act as the identity.
    """
    cover = slice_cover(cyl, n_max) if cover is None else cover
    grp = cyl.bundle.group
    plans: dict = {}
    log: dict = {}
    base_ok = True
    for b in cyl.base:
        rho = cover.weights(b)
        sigma = math.fsum(v * v for v in rho.values())
        u = {k: _step(v / sigma) for k, v in rho.items()}
        if max(u.values()) < 1.0:
            raise PreconditionError(f"sup_k u_k < 1 at {b!r}")
        order = [k for k in sorted(u, key=lambda k: (len(k), k)) if u[k] > 0.0]
        factors = [(k, u[k]) for k in order]
        for k in extra_factors:
            factors.append((k, 0.0))
        factors.sort(key=lambda kv: (len(kv[0]), kv[0]))
        plans[b] = factors
        log[b] = tuple((k, v) for k, v in factors)
        for t0 in np.linspace(0.0, 1.0, 11):
            t = float(t0)
            for _, v in factors:
                t = _h(v, t)
            base_ok &= t == 1.0

    def apply(x: TotalPoint) -> TotalPoint:
        b, t = x.base
        for k, v in plans[b]:
            if v == 0.0:
                continue
            triv = cylinder_trivialize(cyl, cover, b, k)
            g = triv.local_coordinate(x)
            x = triv.point(_h(v, t), g)
            t = x.base[1]
        return x

    e0 = cyl.restriction(0.0, f"{cyl.name}@0")
    e1 = cyl.restriction(1.0, f"{cyl.name}@1")
    r0, r1 = common_refinement(e0, e1, name="transport")

    def lam(pair):
        i, j = pair

        def fn(b):
            y = apply(TotalPoint(i, (b, 0.0), grp.identity))
            return cyl.bundle.change_chart(y, j).fiber
        return fn

    cache = {p: _memo(lam(p)) for p in r0.index_set}
    gauge = GaugeTransformation(cache)
    report = gauge_check(r0, r1, gauge, tol=tolerance("transport"))
    return TransportResult(gauge, r0, r1, report, log, bool(base_ok), apply)


def _memo(fn):
    store: dict = {}

    def call(b):
        if b not in store:
            store[b] = fn(b)
        return store[b]
    return call


def transport_equivariance(cyl: CylinderBundle, result: TransportResult, samples: int = 50,
                           seed: int = 0) -> float:
    grp = cyl.bundle.group
    rng = np.random.default_rng(seed)
    worst = 0.0
    pts = cyl.base.points
    for _ in range(samples):
        b = pts[int(rng.integers(len(pts)))]
        charts = [i for i in cyl.index_set if cyl.bundle.cover[i]((b, 0.0))]
        x = TotalPoint(charts[0], (b, 0.0), grp.sample(rng))
        h = grp.sample(rng)
        lhs = result.apply(cyl.bundle.act(x, h))
        rhs = cyl.bundle.act(result.apply(x), h)
        rhs = cyl.bundle.change_chart(rhs, lhs.chart)
        worst = max(worst, grp.distance(lhs.fiber, rhs.fiber))
    return worst


def reversed_cylinder(target: CocycleBundle, F, base: BaseSpace, times=None,
                      name: str = "reversed") -> CylinderBundle:
    return cylinder_from_homotopy(target, lambda b, t: F(b, 1.0 - t), base, times, name)


def inverse_gap(forward: TransportResult, backward: TransportResult, cyl: CylinderBundle) -> float:
    """Max distance from the identity of ``backward o forward`` on fibres over ``t = 0``."""
    grp = cyl.bundle.group
    worst = 0.0
    for b in cyl.base:
        for i in cyl.index_set:
            if not cyl.bundle.cover[i]((b, 0.0)):
                continue
            y = forward.apply(TotalPoint(i, (b, 0.0), grp.identity))
            # the reversed cylinder reads time backwards, so (b, 1) there is (b, 0) here
            z = backward.apply(TotalPoint(y.chart, (b, 0.0), y.fiber))
            z = cyl.bundle.change_chart(TotalPoint(z.chart, (b, 0.0), z.fiber), i)
            worst = max(worst, grp.distance(z.fiber, grp.identity))
    return worst


def homotopy_pullback_iso(target: CocycleBundle, F, base: BaseSpace, n_max: int = 4,
                          times=None) -> TransportResult:
    """Gauge between ``F(., 0)^* target`` and ``F(., 1)^* target``."""
    return endpoint_transport(cylinder_from_homotopy(target, F, base, times), n_max)


def _rotation(angle: float):
    def F(b, t):
        return (float((b[0] + angle * t) % (2.0 * math.pi)),)
    return F


def mobius_rotation_cylinder(grid: int = 48, angle: float = math.pi) -> tuple:
    """Moebius bundle pulled back along the rotation homotopy ``theta + angle * t``."""
    from .spaces import circle_space
    from .zoo import mobius_fixture

    target = mobius_fixture()
    base = circle_space(grid)
    F = _rotation(angle)
    return cylinder_from_homotopy(target, F, base, name="mobius_rotation"), target, F, base


def product_cylinder(grid: int = 24) -> CylinderBundle:
    from .spaces import circle_space
    from .zoo import mobius_fixture
    return cylinder_from_homotopy(mobius_fixture(), lambda b, t: b, circle_space(grid),
                                  name="product")


def time_swap_cylinder(early_end: float = 0.8, late_start: float = 0.2,
                       transition: str = "2") -> CylinderBundle:
    """One base point, chart 0 on ``t < early_end`` and chart 1 on ``t > late_start``.

    ``transition`` is ``g_10`` in R>0 as an expression in ``t``; the constant
    default makes gluing offsets easy to read off.
    """
    from .bundle_io import bundle_from_dict

    target = bundle_from_dict({
        "name": "time_swap", "group": "R>0",
        "base": {"type": "interval", "lo": -1.0, "hi": 2.0, "n": 31, "coord": "t"},
        "cover": {"0": {"kind": "interval", "hi": early_end},
                  "1": {"kind": "interval", "lo": late_start}},
        "partition": {"margin": 0.0},
        "transitions": [{"i": "1", "j": "0", "expr": transition}]})
    base = BaseSpace("point", [(0.0,)], coords=("x",))
    return cylinder_from_homotopy(target, lambda b, t: (t,), base, name="time_swap")


CYLINDER_FIXTURES = {
    "mobius_rotation": {
        "anchor": "homotopy invariance of pullbacks",
        "summary": "Moebius bundle over S^1 pulled back along theta + pi t; transport "
                   "relates the Moebius cocycle to its rotation",
        "expected": {"slice_cover_violations": 0, "gauge_passes": True, "reverse_inverts": True}},
    "time_swap": {
        "anchor": "gluing interval trivialisations",
        "summary": "one base point, chart 0 on t < 0.8 and chart 1 on t > 0.2, g_10 = 2 in R>0; "
                   "only k = (0, 1) is realised at n <= 2",
        "expected": {"realised": [["0", "1"]], "late_offset": 0.0}},
    "product_cylinder": {
        "anchor": "time-independent cylinder",
        "summary": "Moebius bundle pulled back along the projection S^1 x R -> S^1",
        "expected": {"gauge_passes": True}},
}
