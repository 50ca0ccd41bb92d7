"""Sample grids for the base spaces that fixtures live on."""

from __future__ import annotations

import math

import numpy as np

from .errors import PreconditionError
from .group import TWO_PI
from .partition import BaseSpace


def _perturb_angle(point, radius, rng):
    return (float((point[0] + rng.uniform(-radius, radius)) % TWO_PI),)


def circle_space(n: int = 256, name: str = "S1") -> BaseSpace:
    pts = [(TWO_PI * k / n,) for k in range(n)]
    return BaseSpace(name, pts, point_type="angle", coords=("theta",), perturb=_perturb_angle)


def interval_space(lo: float, hi: float, n: int, coord: str = "x", name: str = "") -> BaseSpace:
    pts = [(float(v),) for v in np.linspace(lo, hi, n)]
    return BaseSpace(name or f"[{lo},{hi}]", pts, coords=(coord,))


def box_space(ranges, counts, coords, name: str = "box") -> BaseSpace:
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(ranges, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = [tuple(float(v) for v in row) for row in np.stack([m.ravel() for m in mesh], axis=1)]
    return BaseSpace(name, pts, coords=tuple(coords))


def _perturb_sphere(point, radius, rng):
    x = np.asarray(point) + radius * rng.uniform() * rng.normal(size=len(point)) / math.sqrt(len(point))
    return tuple(x / np.linalg.norm(x))


def sphere_space(dim: int, n: int, seed: int = 0, coords=None, name: str = "") -> BaseSpace:
    """``n`` points on the unit sphere in R^(dim+1): fixed-seed Gaussian draws
    plus the coordinate axes and their negatives, so every chart is hit."""
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(n, dim + 1))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    axes = np.vstack([np.eye(dim + 1), -np.eye(dim + 1)])
    pts = [tuple(float(v) for v in row) for row in np.vstack([axes, raw])]
    coords = tuple(coords) if coords else tuple(f"x{k}" for k in range(dim + 1))
    return BaseSpace(name or f"S{dim}", pts, point_type="vector", coords=coords,
                     perturb=_perturb_sphere)


def _perturb_doubled(point, radius, rng):
    x = point[0] + rng.uniform(-radius, radius)
    return canonical_doubled(x, point[1])


def canonical_doubled(x: float, sheet: int) -> tuple[float, int]:
    """Points of the doubled line; the sheets agree (label 0) for x > 0."""
    return (float(x), 0 if x > 0 else int(sheet))


def doubled_line_space(n: int = 41, lo: float = -1.0, hi: float = 1.0) -> BaseSpace:
    pts = []
    for x in np.linspace(lo, hi, n):
        pts.append(canonical_doubled(x, 0))
        if x <= 0:
            pts.append(canonical_doubled(x, 1))
    return BaseSpace("doubled-line", pts, point_type="quotient-class", coords=("x", "sheet"),
                     perturb=_perturb_doubled)


def space_from_spec(spec: dict) -> BaseSpace:
    kind = spec.get("type")
    if kind == "circle":
        return circle_space(int(spec.get("n", 256)), spec.get("name", "S1"))
    if kind == "interval":
        return interval_space(float(spec["lo"]), float(spec["hi"]), int(spec.get("n", 101)),
                              spec.get("coord", "x"))
    if kind == "box":
        return box_space(spec["ranges"], spec["n"], spec["coords"], spec.get("name", "box"))
    if kind == "sphere":
        return sphere_space(int(spec["dim"]), int(spec.get("n", 400)), int(spec.get("seed", 0)),
                            spec.get("coords"), spec.get("name", ""))
    if kind == "doubled_line":
        return doubled_line_space(int(spec.get("n", 41)))
    if kind == "points":
        coords = tuple(spec["coords"])
        return BaseSpace(spec.get("name", "points"), [tuple(map(float, p)) for p in spec["points"]],
                         coords=coords)
    raise PreconditionError(f"unknown base grid type {kind!r}")
