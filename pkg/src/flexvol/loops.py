"""Closed loops in complex Gram space that encircle chosen components of the discriminant.

A circuit lives on a complex line ``C_b + z E`` through the basepoint. Along
that line every component polynomial is a polynomial in ``z``; its roots are
the punctures of the ``z``-plane. The loop walks from ``z = 0`` to a small
circle around one root of the chosen component, goes once around it
counter-clockwise (the positive direction, by our convention) and walks back
the same way. It therefore links the chosen component once and every other
component zero times, provided the circle isolates the root.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .continuation import ComplexPath
from .errors import ArgumentError, NumericError
from .gram import GramMatrix, HypersurfaceId, Space, as_array, components
from .volume import regular_simplex_gram

CIRCLE_POINTS = 48


def basepoint(n: int, space: Space | str) -> GramMatrix:
    """Regular simplex with edge 1."""
    return regular_simplex_gram(n, 1.0, space)


def _component_poly(base: np.ndarray, direction: np.ndarray, comp: HypersurfaceId) -> np.ndarray:
    """Coefficients (highest first) of the component polynomial along ``base + z * direction``."""
    idx = list(comp.index_set)
    if comp.sign is not None:
        j, k = idx
        return np.array([comp.sign * direction[j, k], 1 + comp.sign * base[j, k]])
    a = base[np.ix_(idx, idx)]
    e = direction[np.ix_(idx, idx)]
    m = len(idx) + 1
    z = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.linalg.det(a[None] + z[:, None, None] * e[None])
    coef = np.fft.fft(vals) / m  # coef[l] multiplies z**l
    return coef[::-1]


def _roots(coef: np.ndarray) -> np.ndarray:
    coef = np.trim_zeros(np.where(np.abs(coef) < 1e-13 * np.max(np.abs(coef)), 0, coef), "f")
    if len(coef) <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(coef).astype(complex)


def _segment_distance(p: complex, q: complex, x: np.ndarray) -> np.ndarray:
    d = q - p
    if d == 0:
        return np.abs(x - p)
    s = np.clip(((x - p) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(x - (p + s * d))


def _polyline_ok(points: Sequence[complex], punctures: np.ndarray, margin: float) -> bool:
    if not len(punctures):
        return True
    for p, q in zip(points[:-1], points[1:]):
        if np.min(_segment_distance(p, q, punctures)) < margin:
            return False
    return True


def _approach(target: complex, punctures: np.ndarray, margin: float):
    """A polyline from 0 to ``target`` that stays ``margin`` away from every puncture."""
    cands = [[0j, target]]
    scale = abs(target)
    for lift in (0.25, 0.5, 1.0, 2.0):
        for sgn in (1, -1):
            h = sgn * lift * scale
            cands.append([0j, 1j * h, target.real + 1j * h, target])
            cands.append([0j, 1j * h, target])
    for c in cands:
        if _polyline_ok(c, punctures, margin):
            return c
    return None


@dataclass(frozen=True)
class Circuit:
    """A generated loop with the data used to build it."""

    component: HypersurfaceId
    path: ComplexPath
    direction: np.ndarray
    root: complex
    radius: float

    @property
    def label(self) -> str:
        return f"circuit {self.component.label()}"


def circuit(component: HypersurfaceId, base, space: Space | str | None = None,
            direction=None, rng: np.random.Generator | None = None,
            points: int = CIRCLE_POINTS, radius_cap: float = 0.5,
            samples_per_segment: int = 8, attempts: int = 20) -> Circuit:
    """Lasso loop based at ``base`` going once around ``component``.

    When ``direction`` is not given, a random real symmetric direction with
    zero diagonal is drawn (for a signed two-element component the single
    entry is used first).
    """
    b = np.asarray(as_array(base), dtype=float)
    n = b.shape[0] - 1
    if max(component.index_set) > n:
        raise ArgumentError(f"component {component} does not fit n = {n}")
    rng = rng or np.random.default_rng(0)
    comps = components(n)
    dirs = []
    if direction is not None:
        dirs.append(np.asarray(direction, dtype=float))
    elif component.sign is not None:
        e = np.zeros_like(b)
        j, k = component.index_set
        e[j, k] = e[k, j] = 1.0
        dirs.append(e)
    for _ in range(attempts):
        e = rng.normal(size=b.shape)
        e = np.triu(e, 1)
        e = e + e.T
        dirs.append(e / np.max(np.abs(e)))
    for e in dirs:
        found = _circuit_on_line(component, comps, b, e, points, radius_cap)
        if found is None:
            continue
        zs, root, rho = found
        wps = tuple(GramMatrix(b + z * e) if z != 0 else GramMatrix(b) for z in zs)
        path = ComplexPath(wps, samples_per_segment)
        return Circuit(component, path, e, root, rho)
    raise NumericError(f"could not build a circuit around {component}")


def _circuit_on_line(component, comps, b, e, points, radius_cap):
    own = _roots(_component_poly(b, e, component))
    if not len(own):
        return None
    others = [r for c in comps if c != component for r in _roots(_component_poly(b, e, c))]
    others = np.array(others, dtype=complex)
    order = np.argsort(np.abs(own))
    for i in order:
        z0 = own[i]
        rest = np.concatenate([np.delete(own, i), others])
        sep = float(np.min(np.abs(rest - z0))) if len(rest) else math.inf
        rho = min(0.25 * sep, 0.25 * abs(z0), radius_cap)
        if rho < 1e-3:
            continue
        theta0 = cmath.phase(-z0)
        start = z0 + rho * complex(math.cos(theta0), math.sin(theta0))
        app = _approach(start, np.append(rest, z0), rho / 2)
        if app is None:
            continue
        ring = [z0 + rho * complex(math.cos(theta0 + 2 * math.pi * k / points),
                                   math.sin(theta0 + 2 * math.pi * k / points))
                for k in range(points + 1)]
        zs = app + ring[1:] + app[::-1][1:]
        return zs, complex(z0), rho
    return None


def double_circuit(c: Circuit) -> ComplexPath:
    return c.path.repeated(2)


def word(loops: Sequence[ComplexPath], inverse: Sequence[bool] | None = None) -> ComplexPath:
    """Concatenate loops based at the same point; ``inverse[i]`` reverses loop ``i``."""
    if not loops:
        raise ArgumentError("empty word")
    inverse = inverse or [False] * len(loops)
    out = None
    for p, inv in zip(loops, inverse):
        q = p.reversed() if inv else p
        out = q if out is None else out + q
    return out


@dataclass(frozen=True)
class LoopCase:
    label: str
    path: ComplexPath
    kind: str  # "single", "double" or "word"


def loop_family(n: int, space: Space | str, count: int, seed: int = 0,
                include_words: bool = True) -> list[LoopCase]:
    """Single circuits around every component, squares of half of them, and random words.

    Words of 2-3 letters are added until the family has at least ``count``
    loops (and at least three words).
    """
    space = Space.parse(space)
    rng = np.random.default_rng(seed)
    base = basepoint(n, space)
    comps = components(n)
    # full determinant first, then the proper minors by size
    comps.sort(key=lambda c: (-len(c.index_set), c.index_set, c.sign or 0))
    circuits = []
    for c in comps:
        try:
            circuits.append(circuit(c, base, space, rng=rng))
        except NumericError:
            continue
    if not circuits:
        raise NumericError("no circuits could be built")
    out = [LoopCase(c.label, c.path, "single") for c in circuits]
    for c in circuits[: max(1, (len(circuits) + 1) // 2)]:
        out.append(LoopCase("double " + c.label, double_circuit(c), "double"))
    words = max(3, count - len(out)) if include_words else 0
    for _ in range(words):
        size = int(rng.integers(2, 4))
        pick = rng.choice(len(circuits), size=size)
        inv = [bool(x) for x in rng.integers(0, 2, size=size)]
        label = " * ".join(circuits[i].component.label() + ("^-1" if v else "")
                           for i, v in zip(pick, inv))
        out.append(LoopCase("word " + label, word([circuits[i].path for i in pick], inv), "word"))
    return out
