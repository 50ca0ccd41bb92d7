import math

import numpy as np
import pytest

from diffbundle.errors import PreconditionError
from diffbundle.partition import (BaseSpace, PartitionOfUnity, audit_local_finiteness,
                                  audit_refinement, countable_refine, normalize, shrink_supports)
from diffbundle.smooth import make_flat_bump
from diffbundle.spaces import interval_space

phi = make_flat_bump()


def three_intervals(n=400):
    space = interval_space(0.0, 1.0, n)
    bounds = {"a": (-0.1, 0.45), "b": (0.3, 0.75), "c": (0.6, 1.1)}
    cover = {k: (lambda x, lo=lo, hi=hi: lo < x[0] < hi) for k, (lo, hi) in bounds.items()}
    family = {k: (lambda x, lo=lo, hi=hi: phi(min(x[0] - lo, hi - x[0])))
              for k, (lo, hi) in bounds.items()}
    return normalize(family, space, cover), space


def test_normalize_two_squares():
    space = interval_space(0.0, 1.0, 101)
    rho = normalize({"0": lambda x: x[0] ** 2, "1": lambda x: (1.0 - x[0]) ** 2}, space)
    assert rho.audit(space).passed
    assert rho.values((0.5,)) == pytest.approx([0.5, 0.5], abs=1e-15)
    assert rho("0", (1.0,)) == 1.0
    assert rho.support((0.0,)) == ("1",)


def test_normalize_rejects_vanishing_sum():
    space = interval_space(0.0, 1.0, 11)
    with pytest.raises(PreconditionError):
        normalize({"0": lambda x: x[0]}, space)


def test_normalize_rejects_negative_values():
    space = interval_space(0.0, 1.0, 11)
    with pytest.raises(PreconditionError):
        normalize({"0": lambda x: x[0] - 0.5, "1": lambda x: 2.0}, space)


def test_partition_requires_cover_for_every_index():
    with pytest.raises(PreconditionError):
        PartitionOfUnity(("a", "b"), {"a": lambda x: 1.0}, {"a": lambda x: True})


def test_audit_catches_subordination_violation():
    space = interval_space(0.0, 1.0, 11)
    rho = normalize({"0": lambda x: 1.0}, space, {"0": lambda x: x[0] < 0.5})
    audit = rho.audit(space)
    assert not audit.passed and audit.subordination_violations


def test_shrink_supports_stays_inside_positivity_sets():
    rho, space = three_intervals()
    shrunk = shrink_supports(rho, space)
    audit = shrunk.audit(space)
    assert audit.passed
    for x in space:
        for i, v in zip(shrunk.index_set, shrunk.values(x)):
            if v > 0.0:
                assert rho(i, x) > 0.0


def test_refine_blocks_for_two_element_point():
    space = BaseSpace("point", [(0.0,)])
    rho = normalize({0: lambda x: 0.9, 1: lambda x: 0.1}, space)
    refined = countable_refine(rho, 2, space)
    blocks = refined.block_values((0.0,))
    positive = {J for J, v in blocks.items() if v > 0.0}
    assert positive == {frozenset({0}), frozenset({0, 1})}
    assert blocks[frozenset({0})] == pytest.approx(math.exp(-1.0 / 0.8))
    assert refined.blocks((0.0,)) == {1: frozenset({0}), 2: frozenset({0, 1})}
    assert refined.chart_for(1, (0.0,)) == 0


def test_refine_three_intervals():
    rho, space = three_intervals()
    refined = countable_refine(rho, 3, space)
    assert refined.audit(space).passed
    assert audit_refinement(refined, space).passed
    assert refined.index_set == (1, 2, 3)


def test_refine_rejects_small_cardinality():
    rho, space = three_intervals()
    with pytest.raises(PreconditionError):
        countable_refine(rho, 1, space)
    with pytest.raises(PreconditionError):
        countable_refine(rho, 0, space)


def test_local_finiteness_counts():
    rho, space = three_intervals(100)
    rep = audit_local_finiteness(rho.cover, space, 0.05, seed=3)
    assert 1 <= rep.max_count <= 3
    assert len(rep.counts) == len(space)


def test_empty_space_rejected():
    with pytest.raises(PreconditionError):
        BaseSpace("empty", [])


def test_values_sum_to_one_everywhere():
    rho, space = three_intervals(97)
    sums = np.array([rho.values(x).sum() for x in space])
    assert np.max(np.abs(sums - 1.0)) <= 1e-12
