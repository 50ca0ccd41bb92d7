"""Central tolerance table.

Every module reads its thresholds through :func:`tolerance` at call time, so
CLI overrides (``--tol-override KEY=VAL``) reach all of them.
"""

from __future__ import annotations

import contextlib
from typing import Iterator

DEFAULTS: dict[str, float] = {
    # smooth_core
    "quad_tol": 1e-9,
    "divergence_cap": 1e6,
    "quad_max_depth": 48,
    "quad_rel_tol": 1e-12,
    "quad_max_evals": 200000,
    # zero_detect
    "zero_grid": 1e-12,
    "lemma_slack": 1e-9,
    "flat_step": 1e-2,
    "flat_tol": 1e-4,
    # partition
    "partition_sum": 1e-9,
    "support_floor": 1e-12,
    "max_support_count": 64,
    # group
    "group_axioms": 1e-12,
    "chart_roundtrip": 1e-9,
    "rep_homomorphism": 1e-10,
    "element_eq": 1e-12,
    # milnor
    "weight_sum": 1e-12,
    "equivariance": 1e-9,
    # bundle
    "cocycle": 1e-10,
    "gauge": 1e-9,
    "classification": 1e-8,
    # homotopy
    "transport": 1e-6,
    "glue_continuity": 1e-8,
}

_active: dict[str, float] = dict(DEFAULTS)


def tolerance(name: str) -> float:
    try:
        return _active[name]
    except KeyError:
        raise KeyError(f"unknown tolerance {name!r}") from None


def set_tolerances(**values: float) -> None:
    for key, val in values.items():
        if key not in DEFAULTS:
            raise KeyError(f"unknown tolerance {key!r}")
        _active[key] = float(val)


def reset_tolerances() -> None:
    _active.clear()
    _active.update(DEFAULTS)


@contextlib.contextmanager
def override_tolerances(**values: float) -> Iterator[None]:
    saved = dict(_active)
    try:
        set_tolerances(**values)
        yield
    finally:
        _active.clear()
        _active.update(saved)


def parse_override(text: str) -> tuple[str, float]:
    """Parse ``KEY=VAL`` as given on the command line."""
    key, sep, val = text.partition("=")
    if not sep:
        raise ValueError(f"expected KEY=VAL, got {text!r}")
    key = key.strip()
    if key not in DEFAULTS:
        raise KeyError(f"unknown tolerance {key!r}")
    value = float(val)
    if not value >= 0.0:
        raise ValueError(f"tolerance {key!r} must be nonnegative, got {val!r}")
    return key, value


def active() -> dict[str, float]:
    """A copy of the tolerance table currently in force."""
    return dict(_active)
