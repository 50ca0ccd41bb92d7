"""Named checks grouped into suites, shared by the CLI and the acceptance tests.

A check returns ``(verdict, max_violation, details)``. Each check draws its
randomness from ``seed + crc32(name)`` so results do not depend on which
other checks ran or in which order.
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from .config import tolerance

SUITES = ("zero_detect", "partition", "group", "milnor", "bundle", "homotopy", "zoo")
CLASSIFIED = ("trivial", "mobius", "rp1", "rp2", "hopf-1", "winding")


@dataclass
class RunContext:
    seed: int = 0
    grid: int | None = None

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng((self.seed + zlib.crc32(name.encode())) % 2 ** 32)

    def seed_for(self, name: str) -> int:
        return (self.seed + zlib.crc32(name.encode())) % 2 ** 32


@dataclass
class Check:
    name: str
    suite: str
    anchor: str
    fn: Callable[[RunContext], tuple[bool, float | None, dict]]
    fixture: str | None = None


@dataclass
class CheckResult:
    name: str
    suite: str
    anchor: str
    verdict: bool
    max_violation: float | None
    details: dict = field(default_factory=dict)
    runtime: float = 0.0
    fixture: str | None = None

    def to_dict(self, timings: bool = False) -> dict:
        out = {"name": self.name, "suite": self.suite, "anchor": self.anchor,
               "fixture": self.fixture, "verdict": "pass" if self.verdict else "fail",
               "max_violation": jsonable(self.max_violation), "details": jsonable(self.details)}
        if timings:
            out["runtime"] = round(self.runtime, 3)
        return out


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if value is None or isinstance(value, str):
        return value
    return repr(value)


def run_check(check: Check, ctx: RunContext) -> CheckResult:
    start = time.perf_counter()
    try:
        verdict, worst, details = check.fn(ctx)
    except Exception as exc:  # a crashing check is a failing check, reported as such
        verdict, worst, details = False, None, {"error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(check.name, check.suite, check.anchor, bool(verdict), worst, details,
                       time.perf_counter() - start, check.fixture)


# --- zero_detect ---------------------------------------------------------------------------

def _zero_rows():
    from .zero_detect import load_fixture_suite, run_fixture_suite
    return run_fixture_suite(load_fixture_suite())


def check_zero_fixtures(ctx):
    out = _zero_rows()
    rows = out["fixtures"]
    agree = [r["zero_detected"] == r["expected_zero"] for r in rows]
    return all(agree), float(len(agree) - sum(agree)), {
        "matched": sum(agree), "total": len(rows),
        "mismatches": [r["name"] for r, ok in zip(rows, agree) if not ok]}


def check_closed_form(ctx):
    from .config import override_tolerances
    from .zero_detect import functional_F
    with override_tolerances(quad_tol=1e-9):
        f1 = functional_F(lambda x: 1.0).f_value
        f2 = functional_F(lambda x: 2.0).f_value
    e1 = abs(f1 - math.exp(-math.e))
    e2 = abs(f2 - math.exp(-math.exp(0.5)))
    return max(e1, e2) <= 1e-6, max(e1, e2), {"F(1)": f1, "F(2)": f2}


def check_lower_bound(ctx):
    rows = [r for r in _zero_rows()["fixtures"] if "lemma_A1" in r]
    gaps = {r["name"]: r["lemma_A1"]["lhs"] - r["lemma_A1"]["rhs"] for r in rows}
    holds = all(r["lemma_A1"]["holds"] for r in rows)
    return holds, max(0.0, max(gaps.values())), {"positive_fixtures": len(rows),
                                                  "largest_lhs_minus_rhs": max(gaps.values())}


def check_blowup_rate(ctx):
    from .zero_detect import check_lemma_A3
    rep = check_lemma_A3(lambda t, x: t * t + (x - 0.5) ** 2, 0.0, 0.5, (-0.1, 0.1))
    floor = 2.0 * math.atan(5.0) - 0.05
    return rep.c_fit >= floor, max(0.0, floor - rep.c_fit), {"c_fit": rep.c_fit, "floor": floor}


def check_flatness(ctx):
    from .zero_detect import flatness_probe
    rep = flatness_probe(lambda t, x: t * t + (x - 0.5) ** 2, 0.0, 3, h=1e-2, tol=1e-4)
    worst = max(abs(d) for _, d, _ in rep.derivative_estimates)
    return rep.verdict, worst, rep.to_dict()


# --- partition ----------------------------------------------------------------------------

def _three_interval_partition(n: int):
    from .partition import normalize
    from .smooth import make_flat_bump
    from .spaces import interval_space
    phi = make_flat_bump()
    space = interval_space(0.0, 1.0, n)
    bounds = {"a": (-0.1, 0.45), "b": (0.3, 0.75), "c": (0.6, 1.1)}
    cover = {k: (lambda x, lo=lo, hi=hi: lo < x[0] < hi) for k, (lo, hi) in bounds.items()}
    family = {k: (lambda x, lo=lo, hi=hi: phi(min(x[0] - lo, hi - x[0]))) for k, (lo, hi) in bounds.items()}
    return normalize(family, space, cover), space


def check_partition_example(ctx):
    from .partition import normalize
    from .spaces import interval_space
    space = interval_space(0.0, 1.0, 1000)
    rho = normalize({"0": lambda x: x[0] ** 2, "1": lambda x: (1.0 - x[0]) ** 2}, space)
    audit = rho.audit(space)
    mid = rho.values((0.5,))
    gap = abs(mid[0] - 0.5)
    return audit.passed and gap <= 1e-12, max(audit.max_sum_error, gap), audit.to_dict()


def check_shrink_and_refine(ctx):
    from .partition import audit_refinement, countable_refine, shrink_supports
    rho, space = _three_interval_partition(ctx.grid or 1000)
    shrunk = shrink_supports(rho, space)
    sa = shrunk.audit(space)
    refined = countable_refine(rho, 3, space)
    ra = refined.audit(space)
    blocks = audit_refinement(refined, space)
    passed = sa.passed and ra.passed and blocks.passed
    return passed, max(sa.max_sum_error, ra.max_sum_error), {
        "shrunk": sa.to_dict(), "refined": ra.to_dict(), "blocks": blocks.to_dict()}


def check_local_finiteness(ctx):
    from .partition import audit_local_finiteness
    rho, space = _three_interval_partition(200)
    rep = audit_local_finiteness(rho.cover, space, 0.05, seed=ctx.seed_for("local_finiteness"))
    return rep.max_count <= 3, float(rep.max_count), rep.to_dict()


# --- group --------------------------------------------------------------------------------

def check_group_axioms(ctx):
    from .group import builtin_groups, check_axioms
    reports = [check_axioms(g, 1000, ctx.seed_for("axioms:" + g.name)) for g in builtin_groups()]
    worst = max(r.max_violation for r in reports)
    return all(r.passed for r in reports), worst, {r.group: r.to_dict() for r in reports}


def check_group_structure(ctx):
    from .group import builtin_groups, check_chart, check_representation, smoothness_probe_action
    out, worst, ok = {}, 0.0, True
    for g in builtin_groups():
        seed = ctx.seed_for("structure:" + g.name)
        row = {}
        if g.representation is not None:
            row["representation"] = check_representation(g, 200, seed)
            ok &= row["representation"] <= tolerance("rep_homomorphism")
            worst = max(worst, row["representation"])
        if g.chart is not None and g.chart.dim > 0:
            row["chart"] = check_chart(g, 100, seed=seed)
            ok &= row["chart"] <= tolerance("chart_roundtrip")
        probe = smoothness_probe_action(g)
        row["smoothness"] = probe.verdict
        ok &= probe.verdict in ("pass", "not-applicable")
        out[g.name] = row
    return ok, worst, out


# --- milnor -------------------------------------------------------------------------------

def check_bg_structure(ctx, samples: int = 10_000):
    from .group import builtin_groups
    from .milnor import (bg_cover_member, bg_partition_values, bg_section, eg_act, eg_project,
                         point_gap, random_point, support_threshold)
    out, ok, worst = {}, True, 0.0
    for grp in builtin_groups():
        rng = ctx.rng("bg:" + grp.name)
        neg = support = section = indep = 0
        sum_err = gauge_gap = 0.0
        for _ in range(samples):
            p = random_point(grp, 4, rng)
            b = eg_project(p)
            tau = bg_partition_values(b)
            neg += sum(v < 0.0 for v in tau.values())
            sum_err = max(sum_err, abs(math.fsum(tau.values()) - 1.0))
            support += sum(b.weight(i) < support_threshold(i) for i in tau)
            b2 = eg_project(eg_act(p, grp.sample(rng)))
            for i in b.weights:
                if not bg_cover_member(i, b):
                    continue
                s = bg_section(i, b)
                back = eg_project(s)
                same = back == b if grp.discrete else back.close(b, tolerance("element_eq"))
                section += not same
                gauge_gap = max(gauge_gap, point_gap(s, bg_section(i, b2)))
        indep = gauge_gap <= 1e-12
        row_ok = neg == 0 and sum_err <= 1e-9 and support == 0 and section == 0 and indep
        ok &= row_ok
        worst = max(worst, sum_err, gauge_gap)
        out[grp.name] = {"negative": neg, "sum_error": sum_err, "support_violations": support,
                         "section_failures": section, "section_gauge_gap": gauge_gap,
                         "passed": row_ok}
    return ok, worst, {"samples_per_group": samples, "groups": out}


def check_shuffles(ctx, samples: int = 1000):
    from .group import builtin_groups
    from .milnor import (eg_act, even_shuffle_homotopy, interpolate_disjoint,
                         odd_shuffle_homotopy, point_gap, random_point)
    out, ok, worst = {}, True, 0.0
    for grp in builtin_groups():
        rng = ctx.rng("shuffle:" + grp.name)
        norm = equiv = 0.0
        endpoints = True
        for _ in range(samples):
            p, q = random_point(grp, 4, rng), random_point(grp, 4, rng)
            t = float(rng.uniform())
            g = grp.sample(rng)
            a, c = odd_shuffle_homotopy(p, 1.0), even_shuffle_homotopy(q, 1.0)
            for h, args in ((odd_shuffle_homotopy, (p,)), (even_shuffle_homotopy, (p,)),
                            (interpolate_disjoint, (a, c))):
                x = h(*args, t)
                norm = max(norm, abs(math.fsum(x.weights.values()) - 1.0))
                moved = h(*(eg_act(y, g) for y in args), t)
                equiv = max(equiv, point_gap(moved, eg_act(x, g)))
            endpoints &= odd_shuffle_homotopy(p, 0.0) == p
            endpoints &= odd_shuffle_homotopy(p, 1.0).indices == tuple(2 * i for i in p.indices)
            endpoints &= even_shuffle_homotopy(p, 1.0).indices == tuple(2 * i + 1 for i in p.indices)
            endpoints &= interpolate_disjoint(a, c, 0.0) == a and interpolate_disjoint(a, c, 1.0) == c
        row_ok = norm <= 1e-12 and equiv <= tolerance("equivariance") and endpoints
        ok &= row_ok
        worst = max(worst, norm, equiv)
        out[grp.name] = {"normalization": norm, "equivariance": equiv, "endpoints_exact": endpoints,
                         "passed": row_ok}
    return ok, worst, {"samples_per_group": samples, "groups": out}


def check_contraction(ctx):
    from .group import get_group
    from .milnor import MilnorPoint, contraction, point_gap, random_point
    out, ok = {}, True
    for name in ("Z/2", "S1", "R>0"):
        grp = get_group(name)
        h = contraction(grp)
        rng = ctx.rng("contraction:" + name)
        base = MilnorPoint(grp, ((0, 1.0, grp.identity),))
        gap0 = gap1 = 0.0
        for _ in range(50):
            p = random_point(grp, 4, rng)
            gap0 = max(gap0, point_gap(h(p, 0.0), p))
            gap1 = max(gap1, point_gap(h(p, 1.0), base))
        audit = h.homotopy.audit([(random_point(grp, 3, rng), grp.identity) for _ in range(20)],
                                 np.linspace(0.0, 1.0, 13), [grp.sample(rng) for _ in range(3)])
        row_ok = gap0 == 0.0 and gap1 == 0.0 and audit["passed"]
        ok &= row_ok
        out[name] = {"start_gap": gap0, "end_gap": gap1, **audit}
    return ok, None, out


# --- bundle -------------------------------------------------------------------------------

def _fixture(name: str, grid: int | None):
    from .zoo import FIXTURES
    build = FIXTURES[name].build
    return build(grid) if grid else build()


def classify_check(name: str):
    def fn(ctx):
        from .bundle import validate, verify_classification
        bundle = _fixture(name, ctx.grid)
        val = validate(bundle)
        rep = verify_classification(bundle, seed=ctx.seed_for("classify:" + name))
        return val.passed and rep.passed, rep.gauge.max_violation, {
            "validates": val.passed, **rep.to_dict()}
    return fn


def check_frame_roundtrip(ctx):
    from .bundle import frame_roundtrip_check
    out, ok = {}, True
    for name in ("mobius", "hopf-1"):
        rep = frame_roundtrip_check(_fixture(name, ctx.grid))
        out[name] = rep.to_dict()
        ok &= rep.passed
    return ok, None, out


# --- homotopy -----------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _rotation(grid: int):
    from .homotopy import endpoint_transport, mobius_rotation_cylinder, slice_cover
    cyl, target, F, base = mobius_rotation_cylinder(grid)
    cover = slice_cover(cyl, 4)
    return cyl, target, F, base, cover, endpoint_transport(cyl, 4, cover)


def _rotation_grid(ctx) -> int:
    return min(ctx.grid, 64) if ctx.grid else 24


def check_slice_cover(ctx):
    from .homotopy import slice_cover_audit
    cyl, *_, cover, _ = _rotation(_rotation_grid(ctx))
    audit = slice_cover_audit(cyl, cover)
    return audit["passed"], float(audit["violations"]), audit


def check_rotation_transport(ctx):
    from .homotopy import transport_equivariance
    cyl, *_, res = _rotation(_rotation_grid(ctx))
    equiv = transport_equivariance(cyl, res, seed=ctx.seed_for("rotation_transport"))
    ok = res.report.passed and res.base_composite_ok and equiv <= tolerance("equivariance")
    return ok, res.report.max_violation, {**res.to_dict(), "equivariance": equiv}


def check_reverse_time(ctx):
    from .homotopy import endpoint_transport, inverse_gap, reversed_cylinder
    cyl, target, F, base, _, res = _rotation(_rotation_grid(ctx))
    back = endpoint_transport(reversed_cylinder(target, F, base), 4)
    gap = inverse_gap(res, back, cyl)
    ok = back.report.passed and gap <= tolerance("transport")
    return ok, gap, {"reverse_gauge": back.report.to_dict(), "inverse_gap": gap}


def check_time_swap(ctx):
    from .homotopy import (SliceTrivialization, endpoint_transport, slice_cover, switch_jumps,
                           time_swap_cylinder)
    cyl = time_swap_cylinder()
    b = cyl.base.points[0]
    cover = slice_cover(cyl, 2)
    realised = cover.multi_indices(b)
    glued = SliceTrivialization(cyl, b, ("0", "1"))
    late = [glued.coordinate(t) for t in np.linspace(0.6, 1.0, 9)]
    offset = max(abs(c - 2.0) for chart, c in late if chart == "1")
    ts = np.linspace(0.0, 1.0, 2001)
    pts = [glued.point(float(t), 1.0) for t in ts]
    # adjacent grid points compared in the chart of the earlier one
    jumps = max(abs(cyl.bundle.change_chart(q, p.chart).fiber - p.fiber)
                for p, q in zip(pts, pts[1:]))
    res = endpoint_transport(cyl, 2, cover)
    moving = time_swap_cylinder(transition="1 + t*t")
    switch = switch_jumps(SliceTrivialization(moving, b, ("0", "1")))
    jumps = max(jumps, switch)
    ok = (("0", "1") in realised and all(len(k) == 2 for k in realised) and offset == 0.0
          and jumps < tolerance("glue_continuity") and res.report.passed)
    return ok, max(offset, jumps), {"realised": [list(k) for k in realised], "late_offset": offset,
                                    "max_adjacent_jump": jumps, "switch_jump": switch, "gauge": res.report.to_dict()}


def check_product_cylinder(ctx):
    from .homotopy import endpoint_transport, product_cylinder
    cyl = product_cylinder(16)
    res = endpoint_transport(cyl, 2)
    return res.report.passed, res.report.max_violation, res.to_dict()


# --- zoo ----------------------------------------------------------------------------------

def check_doubled_line(ctx):
    from .zoo import doubled_line_certificate, doubled_line_contraction, doubled_line_partition_attempts
    cert = doubled_line_certificate()
    attempts = doubled_line_partition_attempts()
    ends = {doubled_line_contraction(1.0, (x, s)) for x in (-1.0, -0.3, 0.0, 0.4, 2.0) for s in (0, 1)}
    ok = (cert["certificate"] == "non-extension" and cert["validates"]
          and all(v.startswith("rejected") for v in attempts.values()) and len(ends) == 1)
    return ok, cert["max_ulp_error"], {"certificate": cert, "partition_attempts": attempts,
                                       "contraction_endpoint": sorted(ends)}


def check_mobius_search(ctx):
    from .zoo import mobius_search
    out = mobius_search(ctx.grid or 256)
    return not out["trivializing_gauge_found"], None, out


def check_comparisons(ctx):
    from .group import get_group
    from .zoo import product_group_check, sphere_comparison_check, winding_comparison_check
    s = ctx.seed_for("comparisons")
    out = {"winding": winding_comparison_check(seed=s), "sphere": sphere_comparison_check(seed=s),
           "product": product_group_check(get_group("Z/2"), get_group("S1"), seed=s)}
    return all(v["passed"] for v in out.values()), None, out


def all_checks() -> list[Check]:
    checks = [
        Check("zero_detector_fixtures", "zero_detect", "zero test: F(f) = 0 exactly when f has a zero",
              check_zero_fixtures),
        Check("closed_form_values", "zero_detect", "zero test: constant inputs", check_closed_form),
        Check("positive_lower_bound", "zero_detect", "lower bound for positive functions",
              check_lower_bound),
        Check("reciprocal_blowup_rate", "zero_detect", "reciprocal integral growth near a zero",
              check_blowup_rate),
        Check("flatness_at_zero_crossing", "zero_detect", "smoothness of the zero test",
              check_flatness),
        Check("normalize_example", "partition", "normalising a positive family",
              check_partition_example),
        Check("shrink_and_refine", "partition", "shrinking supports and countable refinement",
              check_shrink_and_refine),
        Check("local_finiteness", "partition", "local finiteness audit", check_local_finiteness),
        Check("group_axioms", "group", "diffeological group axioms", check_group_axioms),
        Check("group_structure", "group", "representations, charts and smooth structure",
              check_group_structure),
        Check("bg_partition_and_sections", "milnor", "classifying space partition and sections",
              check_bg_structure),
        Check("shuffle_homotopies", "milnor", "equivariant shuffle homotopies", check_shuffles),
        Check("contraction", "milnor", "contractibility of the universal total space",
              check_contraction),
        Check("frame_roundtrip", "bundle", "associated bundles and frame bundles",
              check_frame_roundtrip),
        Check("slice_cover_biconditional", "homotopy", "slice cover over B x R",
              check_slice_cover, "mobius_rotation"),
        Check("mobius_rotation_transport", "homotopy", "endpoint transport over a cylinder",
              check_rotation_transport, "mobius_rotation"),
        Check("reverse_time_inverse", "homotopy", "homotopy invariance of pullbacks",
              check_reverse_time, "mobius_rotation"),
        Check("time_swap_gluing", "homotopy", "gluing interval trivialisations",
              check_time_swap, "time_swap"),
        Check("product_cylinder", "homotopy", "time-independent cylinder", check_product_cylinder,
              "product_cylinder"),
        Check("doubled_line_certificate", "zoo", "doubled line counterexample", check_doubled_line,
              "doubled_line"),
        Check("mobius_constant_gauge_search", "zoo", "standard nontrivial fixture",
              check_mobius_search, "mobius"),
        Check("comparison_maps", "zoo", "classifying space comparison maps", check_comparisons,
              "product_group"),
    ]
    for name in CLASSIFIED:
        checks.append(Check(f"classify:{name}", "bundle", "classification by pullback of the "
                            "universal bundle", classify_check(name), name))
    return sorted(checks, key=lambda c: c.name)


def select(suites: list[str] | None = None, fixtures: list[str] | None = None) -> list[Check]:
    """Checks in the named suites (all by default), optionally limited to fixtures."""
    chosen = set(SUITES) if not suites or "all" in suites else set(suites)
    unknown = chosen - set(SUITES)
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    checks = [c for c in all_checks() if c.suite in chosen]
    if fixtures:
        checks = [c for c in checks if c.fixture in fixtures]
    return checks
