"""JSON and CSV formats used by the command line and the bundled fixtures.

Gram matrices are ``{"n": int, "entries": [...]}`` with the entries row-major,
each either a number, ``[re]`` or ``[re, im]``. Path files add a space tag
and a list of waypoints; polyhedra are split into a complex file, a
configuration file and an edge-length file.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .continuation import ComplexPath
from .errors import ArgumentError
from .gram import GramMatrix, Space, as_array
from .polyhedra import Configuration, EdgeLengthSet, PseudoManifold


def dumps(obj: Any) -> str:
    """Canonical JSON text (sorted keys, fixed indentation) so that runs are byte-identical."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ArgumentError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"{path}: invalid JSON ({exc})") from None


def data_path(name: str) -> Path:
    """Location of a bundled fixture."""
    return Path(str(resources.files("flexvol") / "data" / name))


def load_data(name: str) -> Any:
    return load_json(data_path(name))


# --------------------------------------------------------------------------
# Gram matrices and paths


def _is_scalar(x) -> bool:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return True
    return isinstance(x, list) and len(x) in (1, 2) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)


def _scalar(x) -> complex:
    if _is_scalar(x):
        if isinstance(x, list):
            return complex(x[0], x[1] if len(x) == 2 else 0.0)
        return complex(x)
    raise ArgumentError(f"bad matrix entry {x!r}; expected a number, [re] or [re, im]")


def gram_to_json(c) -> dict:
    a = np.asarray(as_array(c))
    if np.iscomplexobj(a):
        flat = [[float(z.real), float(z.imag)] for z in a.ravel()]
    else:
        flat = [[float(z)] for z in a.ravel()]
    return {"n": a.shape[0] - 1, "entries": flat}


def gram_from_json(obj) -> GramMatrix:
    """Accepts the object form, or a bare (possibly nested) list of entries."""
    if isinstance(obj, dict):
        if "entries" not in obj:
            raise ArgumentError("Gram matrix object needs an 'entries' field")
        entries, n = obj["entries"], obj.get("n")
    else:
        entries, n = obj, None
    if not isinstance(entries, list) or not entries:
        raise ArgumentError("Gram matrix entries must be a non-empty list")
    size = int(round(len(entries) ** 0.5))
    if size * size == len(entries) and all(_is_scalar(x) for x in entries):
        rows = [entries[i * size:(i + 1) * size] for i in range(size)]
    elif all(isinstance(r, list) and len(r) == len(entries) for r in entries):
        rows = entries
    else:
        raise ArgumentError("entries must be a row-major list of (n+1)^2 values or a list of rows")
    vals = np.array([[_scalar(x) for x in r] for r in rows], dtype=complex)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ArgumentError("Gram matrix must be square")
    if n is not None and vals.shape[0] != int(n) + 1:
        raise ArgumentError(f"n = {n} does not match a {vals.shape[0]}x{vals.shape[0]} matrix")
    if np.all(vals.imag == 0):
        vals = vals.real
    return GramMatrix(vals)


def path_to_json(path: ComplexPath, space: Space | str) -> dict:
    return {"n": path.n, "space": Space.parse(space).value,
            "samples_per_segment": path.samples_per_segment,
            "waypoints": [gram_to_json(w)["entries"] for w in path.waypoints]}


def path_from_json(obj) -> tuple[ComplexPath, Space]:
    if not isinstance(obj, dict) or "waypoints" not in obj:
        raise ArgumentError("path file needs a 'waypoints' list")
    space = Space.parse(obj.get("space", "hyperbolic"))
    wps = [gram_from_json(w) for w in obj["waypoints"]]
    if len(wps) < 2:
        raise ArgumentError("a path needs at least two waypoints")
    if "n" in obj and any(w.n != int(obj["n"]) for w in wps):
        raise ArgumentError("waypoint sizes do not match n")
    return ComplexPath(tuple(wps), int(obj.get("samples_per_segment", 8))), space


# --------------------------------------------------------------------------
# polyhedra


def _vertex_lookup(vertices) -> dict[str, Any]:
    return {str(v): v for v in vertices}


def complex_to_json(k: PseudoManifold) -> dict:
    return {"n": k.n, "vertices": list(k.vertices), "facets": [list(f) for f in k.facets]}


def complex_from_json(obj) -> PseudoManifold:
    try:
        return PseudoManifold(int(obj["n"]), tuple(obj["vertices"]),
                              tuple(tuple(f) for f in obj["facets"]))
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"complex file needs n, vertices and facets ({exc})") from None


def configuration_to_json(p: Configuration) -> dict:
    return {"coords": {str(v): [float(t) for t in x] for v, x in p.coords.items()}}


def configuration_from_json(obj, k: PseudoManifold) -> Configuration:
    coords = obj.get("coords") if isinstance(obj, dict) else None
    if not isinstance(coords, dict):
        raise ArgumentError("configuration file needs a 'coords' object")
    lookup = _vertex_lookup(k.vertices)
    out = {}
    for key, x in coords.items():
        if key not in lookup:
            raise ArgumentError(f"configuration names unknown vertex {key!r}")
        out[lookup[key]] = np.asarray(x, dtype=float)
    missing = [str(v) for v in k.vertices if v not in out]
    if missing:
        raise ArgumentError(f"configuration misses vertices {missing}")
    return Configuration(out)


def lengths_to_json(lengths: EdgeLengthSet) -> dict:
    edges = {"-".join(sorted(map(str, e))): l for e, l in lengths.lengths.items()}
    return {"edges": dict(sorted(edges.items()))}


def lengths_from_json(obj, k: PseudoManifold) -> EdgeLengthSet:
    edges = obj.get("edges") if isinstance(obj, dict) else None
    if not isinstance(edges, dict):
        raise ArgumentError("edge-length file needs an 'edges' object")
    lookup = _vertex_lookup(k.vertices)
    out = {}
    for key, l in edges.items():
        pair = None
        # vertex names may themselves contain '-', so try every split
        for i, ch in enumerate(key):
            if ch == "-" and key[:i] in lookup and key[i + 1:] in lookup:
                pair = (lookup[key[:i]], lookup[key[i + 1:]])
                break
        if pair is None:
            raise ArgumentError(f"cannot read edge {key!r} as 'u-v' with known vertices")
        out[frozenset(pair)] = float(l)
    return EdgeLengthSet(out)
