"""Concrete bundles used as fixtures, including a bundle with no partition."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .bundle import (CocycleBundle, GaugeTransformation, find_constant_gauge, gauge_check,
                     trivial_like, validate)
from .bundle_io import bundle_from_dict, defining_function
from .config import tolerance
from .errors import NotNumerableError, PreconditionError
from .group import GroupDescriptor, get_group
from .milnor import MilnorPoint, bg_partition_values, eg_act, eg_project, random_point
from .partition import PartitionOfUnity, normalize
from .smooth import BumpSpec, make_step
from .spaces import canonical_doubled

HALF_PI = 0.5 * math.pi


@dataclass
class Fixture:
    name: str
    build: Callable[..., Any]
    expected: dict
    anchor: str
    summary: str
    kind: str = "bundle"
    extra: dict = field(default_factory=dict)


def _arc_cover() -> dict:
    r = 5.0 * math.pi / 6.0
    return {"0": {"kind": "arc", "center": HALF_PI, "radius": r},
            "1": {"kind": "arc", "center": 3.0 * HALF_PI, "radius": r}}


def trivial_description(grid: int = 128) -> dict:
    return {"name": "trivial", "group": "Z/2", "base": {"type": "circle", "n": grid},
            "cover": {"0": {"kind": "all"}}, "partition": {"margin": 0.0}, "transitions": []}


def mobius_description(grid: int = 256) -> dict:
    # +1 on the overlap around pi, -1 on the overlap around 0
    return {"name": "mobius", "group": "Z/2", "base": {"type": "circle", "n": grid},
            "cover": _arc_cover(), "partition": {"margin": 0.05},
            "transitions": [{"i": "0", "j": "1", "expr": "-sign(cos(theta))"}]}


def winding_description(grid: int = 256) -> dict:
    # R -> R/Z with chart lifts; the lifts differ by one on the overlap around 0
    return {"name": "winding", "group": "Z", "base": {"type": "circle", "n": grid},
            "cover": _arc_cover(), "partition": {"margin": 0.05},
            "transitions": [{"i": "0", "j": "1", "expr": "(1 + sign(cos(theta)))/2"}]}


def projective_description(n: int, grid: int = 1000, seed: int = 0) -> dict:
    if not 1 <= n <= 6:
        raise PreconditionError("projective fixtures exist for 1 <= n <= 6")
    coords = [f"x{k}" for k in range(n + 1)]
    cover = {str(j): {"kind": "abs_coordinate", "coordinate": coords[j],
                      "threshold": 1.0 / (2 * j + 2)} for j in range(n + 1)}
    transitions = [{"i": str(i), "j": str(j), "expr": f"sign({coords[i]}*{coords[j]})"}
                   for i in range(n + 1) for j in range(i + 1, n + 1)]
    return {"name": f"rp{n}", "group": "Z/2",
            "base": {"type": "sphere", "dim": n, "n": grid, "seed": seed, "coords": coords},
            "cover": cover, "partition": {"margin": 0.0}, "transitions": transitions}


def hopf_description(n: int, grid: int = 600, seed: int = 0) -> dict:
    if not 1 <= n <= 2:
        raise PreconditionError("hopf fixtures exist for n = 1, 2")
    coords = [c for k in range(n + 1) for c in (f"x{k}", f"y{k}")]
    cover = {str(j): {"kind": "modulus", "coordinates": [f"x{j}", f"y{j}"],
                      "threshold": 1.0 / (2 * j + 2)} for j in range(n + 1)}
    transitions = [{"i": str(i), "j": str(j),
                    "expr": f"atan2(y{i}, x{i}) - atan2(y{j}, x{j})"}
                   for i in range(n + 1) for j in range(i + 1, n + 1)]
    return {"name": f"hopf-{n}", "group": "S1",
            "base": {"type": "sphere", "dim": 2 * n + 1, "n": grid, "seed": seed,
                     "coords": coords},
            "cover": cover, "partition": {"margin": 0.0}, "transitions": transitions}


def doubled_line_description(grid: int = 41) -> dict:
    return {"name": "doubled_line", "group": "R>0", "base": {"type": "doubled_line", "n": grid},
            "cover": {"0": {"kind": "sheet", "sheet": 0}, "1": {"kind": "sheet", "sheet": 1}},
            "partition": None,
            "transitions": [{"i": "1", "j": "0", "expr": "x"}]}


def trivial_fixture(grid: int = 128) -> CocycleBundle:
    return bundle_from_dict(trivial_description(grid))


def mobius_fixture(grid: int = 256) -> CocycleBundle:
    return bundle_from_dict(mobius_description(grid))


def circle_from_reals_fixture(grid: int = 256) -> CocycleBundle:
    return bundle_from_dict(winding_description(grid))


def projective_space_fixture(n: int, grid: int = 1000) -> CocycleBundle:
    return bundle_from_dict(projective_description(n, grid))


def hopf_fixture(n: int, grid: int = 600) -> CocycleBundle:
    return bundle_from_dict(hopf_description(n, grid))


def doubled_line_bundle(grid: int = 41) -> CocycleBundle:
    return bundle_from_dict(doubled_line_description(grid))


def mobius_search(grid: int = 256) -> dict:
    """Exhaustive constant-gauge search between Moebius and the product bundle.

    With Z/2 and connected overlap components, a gauge can only change the
    sign class of each component through its constant values, so the
    constant search is complete at grid scale.
    """
    mob = mobius_fixture(grid)
    target = trivial_like(mob)
    lam, tried = find_constant_gauge(mob, target)
    worst = math.inf
    for vals in itertools.product(mob.group.elements, repeat=len(mob.index_set)):
        gauge = GaugeTransformation.constant(dict(zip(mob.index_set, vals)))
        worst = min(worst, gauge_check(mob, target, gauge, tol=math.inf).max_violation)
    return {"candidates": tried, "trivializing_gauge_found": lam is not None,
            "min_violation": worst, "certificate": "no constant gauge" if lam is None else None}


def winding_comparison(p: MilnorPoint) -> float:
    """EZ -> R, ``[t_i, n_i] -> sum t_i n_i``."""
    return math.fsum(t * g for _, t, g in p.entries)


def winding_comparison_check(samples: int = 1000, n: int = 4, seed: int = 0) -> dict:
    grp = get_group("Z")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = random_point(grp, n, rng)
        m = grp.sample(rng)
        worst = max(worst, abs(winding_comparison(eg_act(p, m)) - winding_comparison(p) - m))
    single = winding_comparison(MilnorPoint(grp, ((0, 1.0, 5),)))
    return {"equivariance": worst, "single_point_value": single,
            "passed": worst <= 1e-12 and single == 5.0}


def sphere_comparison(p: MilnorPoint) -> np.ndarray:
    """EZ/2 -> S^infinity, ``[t_i, g_i] -> (g_i t_i / |t|)``."""
    v = p.weight_vector()
    for i, _, g in p.entries:
        v[i] *= g
    return v / math.sqrt(float(np.dot(v, v)))


def sphere_comparison_check(samples: int = 1000, n: int = 4, seed: int = 0) -> dict:
    grp = get_group("Z/2")
    rng = np.random.default_rng(seed)
    norm = equiv = 0.0
    for _ in range(samples):
        p = random_point(grp, n, rng)
        s = sphere_comparison(p)
        norm = max(norm, abs(float(np.linalg.norm(s)) - 1.0))
        g = grp.sample(rng)
        equiv = max(equiv, float(np.max(np.abs(sphere_comparison(eg_act(p, g)) - g * s))))
    return {"unit_norm": norm, "equivariance": equiv, "passed": norm <= 1e-12 and equiv <= 1e-12}


def product_group_check(g: GroupDescriptor, h: GroupDescriptor, samples: int = 1000, n: int = 4,
                        seed: int = 0) -> dict:
    """E(G x H) -> EG x EH: weight preservation, equivariance, product partition sum."""
    prod = get_group(f"{g.name}x{h.name}")
    rng = np.random.default_rng(seed)

    def split(p: MilnorPoint):
        a = MilnorPoint(g, tuple((i, t, x[0]) for i, t, x in p.entries), p.n)
        b = MilnorPoint(h, tuple((i, t, x[1]) for i, t, x in p.entries), p.n)
        return a, b

    weights_exact = True
    equiv = psum = 0.0
    for _ in range(samples):
        p = random_point(prod, n, rng)
        a, b = split(p)
        weights_exact &= a.weights == p.weights == b.weights
        el = prod.sample(rng)
        a2, b2 = split(eg_act(p, el))
        for lhs, rhs, grp in ((a2, eg_act(a, el[0]), g), (b2, eg_act(b, el[1]), h)):
            for (_, s, x), (_, t, y) in zip(lhs.entries, rhs.entries):
                equiv = max(equiv, abs(s - t), grp.distance(x, y))
        sig = bg_partition_values(eg_project(a))
        tau = bg_partition_values(eg_project(b))
        psum = max(psum, abs(math.fsum(s * t for s in sig.values() for t in tau.values()) - 1.0))
    return {"group": prod.name, "weights_preserved": bool(weights_exact), "equivariance": equiv,
            "product_partition_sum": psum,
            "passed": bool(weights_exact) and equiv <= 1e-12 and psum <= tolerance("partition_sum")}


DOUBLED_PROBES = tuple(10.0 ** -k for k in range(1, 7))


def _candidate_gauges() -> dict[str, Callable[[float], float]]:
    return {"one": lambda x: 1.0, "exp": math.exp, "quadratic": lambda x: 1.0 + x * x,
            "wave": lambda x: 2.0 + math.sin(3.0 * x), "steep": lambda x: math.exp(5.0 * x)}


def doubled_line_certificate(floor: float = 1e-3) -> dict:
    """Non-extension certificate for the doubled line.

    A trivialisation ``(alpha_0, alpha_1)`` must satisfy the gauge relation on
    the overlap; for each candidate ``alpha_1`` we solve for ``alpha_0`` and
    record ``alpha_0 / alpha_1``. The ratio equals ``x`` at every probe, so it
    leaves every compact subset of R>0 as ``x -> 0`` and cannot extend.
    """
    bundle = doubled_line_bundle()
    grp = bundle.group
    rows = []
    max_ulps = 0.0
    for name, a1 in _candidate_gauges().items():
        ratios = []
        for x in DOUBLED_PROBES:
            b = canonical_doubled(x, 0)
            # trivial target: e = a1 * g_10 * a0^{-1}  =>  a0 = a1 * g_10
            a0 = grp.multiply(a1(x), bundle.transition("1", "0", b))
            ratio = grp.divide(a1(x), a0)
            ratios.append(ratio)
            max_ulps = max(max_ulps, abs(ratio - x) / math.ulp(x))
        rows.append({"alpha_1": name, "ratios": ratios})
    final = [r["ratios"][-1] for r in rows]
    monotone = all(all(a > b for a, b in zip(r["ratios"], r["ratios"][1:])) for r in rows)
    exits = all(v < floor for v in final) and monotone
    return {"probes": list(DOUBLED_PROBES), "candidates": rows, "max_ulp_error": max_ulps,
            "ratio_matches_x": max_ulps <= 4.0, "below_floor": exits, "floor": floor,
            "certificate": "non-extension" if exits and max_ulps <= 4.0 else None,
            "validates": validate(bundle).passed}


def register_partition(bundle: CocycleBundle, family: dict, probe: float = 1e-6,
                       tol: float = 1e-6) -> PartitionOfUnity:
    """Accept a candidate partition for the doubled line only if it survives the
    subordination and continuity-at-the-branch-point probes."""
    part = normalize(family, bundle.base, bundle.cover)
    audit = part.audit(bundle.base)
    if not audit.passed:
        raise NotNumerableError(f"candidate partition is not subordinate: {audit.to_dict()}")
    limit = part.values(canonical_doubled(probe, 0))
    for sheet in (0, 1):
        at_zero = part.values(canonical_doubled(0.0, sheet))
        if float(np.max(np.abs(at_zero - limit))) > tol:
            raise NotNumerableError(
                f"candidate partition jumps at the branch point on sheet {sheet}")
    return part


def doubled_line_candidates() -> dict[str, dict]:
    """Partition candidates built from the cover vocabulary; all must be rejected."""
    step = make_step(BumpSpec())
    sheet0 = defining_function({"kind": "sheet", "sheet": 0}, ("x", "sheet"))
    sheet1 = defining_function({"kind": "sheet", "sheet": 1}, ("x", "sheet"))
    return {
        "indicator": {"0": lambda b: float(sheet0(b) > 0), "1": lambda b: float(sheet1(b) > 0)},
        "ramp": {"0": lambda b: float(sheet0(b) > 0) * (1.0 - step(0.5 + b[0])),
                 "1": lambda b: float(sheet1(b) > 0) * step(0.5 + b[0]) + 1e-3 * float(b[1] == 1)},
        "favor_sheet0": {"0": lambda b: float(sheet0(b) > 0),
                         "1": lambda b: float(sheet1(b) > 0) * float(b[1] == 1)},
    }


def doubled_line_partition_attempts() -> dict:
    bundle = doubled_line_bundle()
    out = {}
    for name, family in doubled_line_candidates().items():
        try:
            register_partition(bundle, family)
            out[name] = "accepted"
        except (NotNumerableError, PreconditionError) as exc:
            out[name] = f"rejected: {exc}"
    return out


def doubled_line_contraction(t: float, point) -> tuple:
    """The base contraction ``(x, i, t) -> (rho(t) + (1 - rho(t)) x, i)``."""
    r = make_step(BumpSpec())(t)
    return canonical_doubled(r + (1.0 - r) * point[0], point[1])


FIXTURES: dict[str, Fixture] = {
    "trivial": Fixture("trivial", trivial_fixture, {"validates": True, "classifies": True},
                       "product bundle", "one chart covering S^1, group Z/2, g_00 = e"),
    "mobius": Fixture("mobius", mobius_fixture,
                      {"validates": True, "classifies": True, "constant_gauge": "none"},
                      "standard nontrivial fixture",
                      "two arcs on S^1, group Z/2, transition +1 on the overlap near pi "
                      "and -1 near 0"),
    "rp1": Fixture("rp1", lambda grid=400: projective_space_fixture(1, grid),
                   {"validates": True, "classifies": True}, "real projective space comparison",
                   "S^1 -> RP^1, group Z/2, charts |x_j| > 1/(2j+2)"),
    "rp2": Fixture("rp2", lambda grid=1000: projective_space_fixture(2, grid),
                   {"validates": True, "classifies": True}, "real projective space comparison",
                   "S^2 -> RP^2, group Z/2, charts |x_j| > 1/(2j+2)"),
    "hopf-1": Fixture("hopf-1", lambda grid=600: hopf_fixture(1, grid),
                      {"validates": True, "classifies": True}, "complex projective space comparison",
                      "S^3 -> CP^1, group S1, 2 charts |z_j| > 1/(2j+2)"),
    "winding": Fixture("winding", circle_from_reals_fixture,
                       {"validates": True, "classifies": True}, "lattice classifying space comparison",
                       "R -> S^1, group Z, transition counts the winding"),
    "doubled_line": Fixture("doubled_line", doubled_line_bundle,
                            {"validates": True, "numerable": False, "certificate": "non-extension"},
                            "doubled line counterexample",
                            "two copies of R glued along x > 0, group R>0, g_10(x) = x; "
                            "no subordinate partition exists, so no classifying map applies",
                            kind="certificate"),
    "product_group": Fixture("product_group",
                             lambda grid=0: product_group_check(get_group("Z/2"), get_group("S1")),
                             {"passed": True}, "product of classifying spaces",
                             "E(Z/2 x S1) compared with EZ/2 x ES1", kind="comparison"),
}


def fixture_names() -> list[str]:
    from .homotopy import CYLINDER_FIXTURES
    return sorted(set(FIXTURES) | set(CYLINDER_FIXTURES))


def describe(name: str) -> str:
    from .homotopy import CYLINDER_FIXTURES
    if name in CYLINDER_FIXTURES:
        fx = CYLINDER_FIXTURES[name]
        return "\n".join([f"fixture: {name}", f"kind: cylinder", f"anchor: {fx['anchor']}",
                          f"summary: {fx['summary']}", f"expected: {fx['expected']}"])
    if name not in FIXTURES:
        raise KeyError(name)
    fx = FIXTURES[name]
    lines = [f"fixture: {fx.name}", f"kind: {fx.kind}", f"anchor: {fx.anchor}",
             f"summary: {fx.summary}"]
    if fx.kind in ("bundle", "certificate"):
        bundle = fx.build()
        lines.append(f"group: {bundle.group.name}")
        lines.append(f"charts: {len(bundle.index_set)} ({', '.join(bundle.index_set)})")
        desc = bundle.description or {}
        for k, spec in desc.get("cover", {}).items():
            lines.append(f"  chart {k}: {spec}")
        for t in desc.get("transitions", []):
            lines.append(f"  g_{t['i']}{t['j']} = {t['expr']}")
        lines.append(f"partition: {'none registered' if bundle.partition is None else desc.get('partition')}")
    if fx.name == "doubled_line":
        lines.append("certificate: any trivialisation forces alpha_0(x) = alpha_1(x) * x on x > 0;"
                     " the ratio alpha_0/alpha_1 tends to 0 and leaves every compact subset"
                     " of R>0, so no smooth extension to x = 0 exists")
    lines.append(f"expected: {fx.expected}")
    return "\n".join(lines)
