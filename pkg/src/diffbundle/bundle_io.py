"""Bundle description files: a small declarative vocabulary compiled to bundles.

Layout (schema ``diffbundle.bundle/1``)::

    {"name": ..., "group": "Z/2",
     "base": {"type": "circle", "n": 256},
     "cover": {"0": {"kind": "arc", "center": 1.57, "radius": 2.6}, ...},
     "partition": {"margin": 0.05}  |  {"functions": {"0": "expr", ...}}  |  null,
     "transitions": [{"i": "0", "j": "1", "expr": "-sign(cos(theta))"}]}

Chart ids are strings in the file and in the built bundle. Cover kinds each
carry a defining function ``d`` with ``B = {d > 0}``; a ``margin`` partition
normalises ``phi(d_i - margin)``. Transition ``expr`` gives the group element
``g_ij`` (a list of expressions for product groups).
"""

from __future__ import annotations

import json
import math
from typing import Any, Callable

from .bundle import CocycleBundle
from .errors import PreconditionError
from .expressions import compile_scalar
from .group import get_group
from .partition import normalize
from .smooth import make_flat_bump
from .spaces import space_from_spec

SCHEMA = "diffbundle.bundle/1"
COVER_KINDS = ("interval", "arc", "halfplane", "abs_coordinate", "modulus", "sheet", "all")
_phi = make_flat_bump()


def _coord(coords: tuple, name: str) -> int:
    try:
        return coords.index(name)
    except ValueError:
        raise PreconditionError(f"unknown coordinate {name!r}; have {coords}") from None


def defining_function(spec: dict, coords: tuple) -> Callable[[Any], float]:
    """A function positive exactly on the described open set."""
    kind = spec.get("kind")
    if kind == "interval":
        k = _coord(coords, spec.get("coordinate", coords[0]))
        lo, hi = float(spec.get("lo", -math.inf)), float(spec.get("hi", math.inf))
        return lambda b: min(b[k] - lo, hi - b[k])
    if kind == "arc":
        k = _coord(coords, spec.get("coordinate", coords[0]))
        c, r = float(spec["center"]), float(spec["radius"])
        if not 0.0 < r < math.pi:
            raise PreconditionError("arc radius must lie in (0, pi)")
        cr = math.cos(r)
        return lambda b: math.cos(b[k] - c) - cr
    if kind == "halfplane":
        normal = [float(v) for v in spec["normal"]]
        offset = float(spec.get("offset", 0.0))
        return lambda b: sum(n * x for n, x in zip(normal, b)) - offset
    if kind == "abs_coordinate":
        k = _coord(coords, spec["coordinate"])
        thr = float(spec["threshold"])
        return lambda b: abs(b[k]) - thr
    if kind == "modulus":
        ks = [_coord(coords, c) for c in spec["coordinates"]]
        thr = float(spec["threshold"])
        return lambda b: math.sqrt(sum(b[k] ** 2 for k in ks)) - thr
    if kind == "sheet":
        # doubled line: sheet s plus the glued half x > 0
        s = int(spec["sheet"])
        return lambda b: 1.0 if (b[1] == s or b[0] > 0) else -1.0
    if kind == "all":
        return lambda b: 1.0
    raise PreconditionError(f"unknown cover kind {kind!r}; expected one of {COVER_KINDS}")


def _element_fn(expr, group, coords):
    if isinstance(expr, list):
        parts = [compile_scalar(e, coords) for e in expr]
        factors = group.factors or (group,)
        if len(parts) != len(factors):
            raise PreconditionError(f"{group.name} needs {len(factors)} component expressions")
        return lambda b: group.from_json([_cast(f, p(*b)) for f, p in zip(factors, parts)])
    fn = compile_scalar(expr, coords)
    return lambda b: group.from_json(_cast(group, fn(*b)))


def _cast(group, value: float):
    if group.discrete and not group.factors:
        r = round(value)
        if abs(r - value) > 1e-9:
            raise PreconditionError(f"{group.name} transition evaluated to non-integer {value}")
        return int(r)
    return value


def bundle_from_dict(data: dict) -> CocycleBundle:
    if data.get("schema", SCHEMA) != SCHEMA:
        raise PreconditionError(f"unsupported bundle schema {data.get('schema')!r}")
    group = get_group(data["group"])
    space = space_from_spec(data["base"])
    coords = space.coords
    index_set = tuple(str(i) for i in data["cover"])
    defining = {str(i): defining_function(spec, coords) for i, spec in data["cover"].items()}
    cover = {i: (lambda b, d=d: d(b) > 0.0) for i, d in defining.items()}
    transitions = {}
    for item in data.get("transitions", []):
        transitions[str(item["i"]), str(item["j"])] = _element_fn(item["expr"], group, coords)
    partition = None
    part = data.get("partition")
    if part is not None:
        if "functions" in part:
            family = {i: (lambda b, f=compile_scalar(part["functions"][i], coords): max(f(*b), 0.0))
                      for i in index_set}
        else:
            m = float(part.get("margin", 0.0))
            family = {i: (lambda b, d=defining[i]: _phi(d(b) - m)) for i in index_set}
        partition = normalize(family, space, cover)
    return CocycleBundle(data.get("name", "bundle"), space, group, index_set, cover, transitions,
                         partition, description=data)


def load_bundle(path) -> CocycleBundle:
    with open(path, encoding="utf-8") as fh:
        return bundle_from_dict(json.load(fh))


def bundle_to_json(bundle: CocycleBundle) -> str:
    if bundle.description is None:
        raise PreconditionError(f"{bundle.name} was not built from a description")
    data = {"schema": SCHEMA, **{k: v for k, v in bundle.description.items() if k != "schema"}}
    return json.dumps(data, indent=2, sort_keys=True)
