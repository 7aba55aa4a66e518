"""Volumes and dihedral angles of simplices in ``H^n`` and ``S^n`` from their Gram matrices.

Dimensions 1 and 2 have closed forms. From dimension 3 on the volume is
``V(C*) + integral of dV`` along a path from the regular simplex ``C*`` with
edge 1, where ``dV = eps/(n-1) * sum_I V(C_I) d(alpha_I)`` runs over the
codimension-2 faces ``I``. ``V(C*)`` comes from the cubature oracle in
:mod:`flexvol.quadrature` and is cached per ``(n, space)``.
"""

from __future__ import annotations

import enum
import heapq
import json
import logging
import math
import os
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from . import quadrature
from ._segment import SegmentMinors, plan
from .errors import ArgumentError, DomainError, NumericError
from .gram import (GramMatrix, Space, as_array, dihedral_pair,
                   minor, normalize_index_set, require_chamber, triangular_factor,
                   vertices_from_gram)

log = logging.getLogger(__name__)

CACHE_ENV = "FLEXVOL_CACHE_DIR"


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    SCHLAFLI = "schlafli"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class VolumeResult:
    value: float
    method: Method
    error_estimate: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.error_estimate) or self.error_estimate < 0:
            raise ArgumentError("error estimate must be finite and non-negative")

    def to_json(self) -> dict:
        return {"value": float(self.value), "method": self.method.value,
                "error_estimate": float(self.error_estimate)}


@dataclass(frozen=True)
class DihedralAngle:
    face_index_set: tuple[int, ...]
    value: float


def _angle(d, d_face, d1, d2, mixed, eps: int, n: int) -> float:
    # atan2 of (sin, cos) scaled by the common positive factor sqrt(d1*d2)
    return math.atan2(math.sqrt(max(d * d_face, 0.0)), eps ** (n - 1) * mixed)


def dihedral_angle(c, index_set: Sequence[int], space: Space | str) -> DihedralAngle:
    """Interior dihedral angle at the codimension-2 face spanned by ``index_set``."""
    space = Space.parse(space)
    a = as_array(c)
    n = a.shape[0] - 1
    if n < 2:
        raise ArgumentError("dihedral angles need n >= 2")
    require_chamber(a, space)
    idx = normalize_index_set(index_set, n)
    rows, cols = dihedral_pair(idx, n)
    full = range(n + 1)
    d = minor(a, full, full)
    d_face = minor(a, set(idx), set(idx)) if idx else 1.0
    d1 = minor(a, set(rows), set(rows))
    d2 = minor(a, set(cols), set(cols))
    mixed = minor(a, rows, cols)
    return DihedralAngle(idx, _angle(d, d_face, d1, d2, mixed, space.epsilon, n))


def regular_simplex_gram(n: int, edge: float, space: Space | str) -> GramMatrix:
    """Gram matrix of the regular simplex with the given edge length."""
    space = Space.parse(space)
    if edge <= 0:
        raise ArgumentError("edge length must be positive")
    c = math.cos(edge) if space is Space.SPHERE else math.cosh(edge)
    a = np.full((n + 1, n + 1), c)
    np.fill_diagonal(a, 1.0)
    if space is Space.SPHERE and n >= 1:
        # eigenvalues 1 - c (multiplicity n) and 1 + n c
        if not (1 - c > 0 and 1 + n * c > 0):
            raise DomainError(f"regular spherical simplex with edge {edge} does not exist in S^{n}")
    return GramMatrix(a)


def _closed_value(a: np.ndarray, space: Space) -> float:
    n = a.shape[0] - 1
    eps = space.epsilon
    if n == 0:
        return 1.0
    if n == 1:
        c = float(a[0, 1])
        return math.acosh(c) if space is Space.HYPERBOLIC else math.acos(c)
    if n == 2:
        total = 0.0
        for i in range(3):
            j, k = [x for x in range(3) if x != i]
            # angle at vertex i: face I = {i}, complement {j, k}
            d = np.linalg.det(a)
            d1 = 1.0 - a[i, j] ** 2
            d2 = 1.0 - a[i, k] ** 2
            mixed = a[j, k] - a[j, i] * a[i, k]
            total += _angle(d, 1.0, d1, d2, mixed, eps, 2)
        return eps * (total - math.pi)
    raise ArgumentError("closed forms exist only for n <= 2")


def volume_closed_low_dim(c, space: Space | str) -> VolumeResult:
    """Length (``n = 1``) or area (``n = 2``) in closed form."""
    space = Space.parse(space)
    a = as_array(c)
    n = a.shape[0] - 1
    if n > 2:
        raise ArgumentError("closed forms exist only for n <= 2")
    if n >= 1:
        require_chamber(a, space)
    return VolumeResult(_closed_value(np.real(a), space), Method.CLOSED_FORM, 0.0)


def volume_oracle_points(points, space: Space | str, target_err: float = 1e-9) -> VolumeResult:
    """Cubature volume of the geodesic simplex with the given vertices (degenerate allowed)."""
    space = Space.parse(space)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[0] == 1:
        return VolumeResult(1.0, Method.QUADRATURE, 0.0)
    val, err = quadrature.integrate_geodesic_simplex(x, space, target_err)
    return VolumeResult(val, Method.QUADRATURE, err)


def volume_oracle_quadrature(c, space: Space | str, target_err: float = 1e-9) -> VolumeResult:
    """Independent cubature volume in the Klein (or gnomonic) chart."""
    space = Space.parse(space)
    a = as_array(c)
    n = a.shape[0] - 1
    if n > 4:
        raise ArgumentError("the cubature oracle supports n <= 4")
    if n == 0:
        return VolumeResult(1.0, Method.QUADRATURE, 0.0)
    x = vertices_from_gram(a, space)
    return volume_oracle_points(x, space, target_err)


# ---------------------------------------------------------------------------
# base volumes V* of the regular simplex with edge 1

_BASE_LOCK = threading.Lock()
_BASE: dict[tuple[int, Space], float] = {}
_BASE_TARGET = {3: 1e-13, 4: 1e-12}


def _cache_file() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    return Path(d) / "base_volumes.json" if d else None


def base_volume(n: int, space: Space | str) -> float:
    """Volume of the regular simplex with edge 1; computed once, then cached."""
    space = Space.parse(space)
    key = (n, space)
    if key in _BASE:
        return _BASE[key]
    with _BASE_LOCK:
        if key in _BASE:
            return _BASE[key]
        c = regular_simplex_gram(n, 1.0, space)
        if n <= 2:
            val = _closed_value(c.entries, space)
        else:
            path = _cache_file()
            label = f"{space.value}:{n}"
            stored = {}
            if path is not None and path.exists():
                try:
                    stored = json.loads(path.read_text())
                except (OSError, ValueError):
                    stored = {}
            if label in stored:
                val = float(stored[label])
            else:
                if n > 4:
                    raise NumericError(f"no base volume available for n = {n}")
                val = volume_oracle_quadrature(c, space, _BASE_TARGET[n]).value
                if path is not None:
                    stored[label] = val
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(json.dumps(stored, sort_keys=True, indent=1))
        _BASE[key] = val
        return val


# ---------------------------------------------------------------------------
# Schlafli integration on the real chamber


class _ChamberExit(DomainError):
    pass


@lru_cache(maxsize=None)
def _ridge_tables(n: int):
    mp = plan(n)
    whole = tuple(range(n + 1))
    ridges = mp.ridges[whole]
    faces = [r.face for r in ridges]
    face_row = np.array([mp.set_row[f] if len(f) >= 2 else -1 for f in faces])
    i1 = np.array([mp.set_row[tuple(sorted(r.face + (r.j,)))] for r in ridges])
    i2 = np.array([mp.set_row[tuple(sorted(r.face + (r.k,)))] for r in ridges])
    mixed = np.array([mp.mixed_row[r] for r in ridges])
    sizes = np.array([len(s) for s in mp.sets])
    return mp.set_row[whole], faces, face_row, i1, i2, mixed, sizes


def _face_volumes(mats: np.ndarray, faces, space: Space, tol: float) -> np.ndarray:
    """Volumes of the faces (rows) at each matrix of the stack (columns)."""
    out = np.empty((len(faces), mats.shape[0]))
    for i, f in enumerate(faces):
        m = len(f)
        if m <= 1:
            out[i] = 1.0
        elif m == 2:
            c = mats[:, f[0], f[1]]
            out[i] = np.arccosh(c) if space is Space.HYPERBOLIC else np.arccos(c)
        elif m == 3:
            sub = mats[:, list(f)][:, :, list(f)]
            out[i] = _triangle_area(sub, space)
        else:
            out[i] = [volume(mat[np.ix_(f, f)], space, tol).value for mat in mats]
    return out


def _triangle_area(sub: np.ndarray, space: Space) -> np.ndarray:
    eps = space.epsilon
    d = np.linalg.det(sub)
    total = 0.0
    for i in range(3):
        j, k = [x for x in range(3) if x != i]
        mixed = sub[:, j, k] - sub[:, j, i] * sub[:, i, k]
        total = total + np.arctan2(np.sqrt(np.maximum(d, 0.0)), eps * mixed)
    return eps * (total - math.pi)


def schlafli_rates(seg: SegmentMinors, ts, space: Space, tol: float = 1e-12,
                   check: bool = True) -> np.ndarray:
    """``dV/dt`` at the parameters ``ts`` of a real segment inside the chamber."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    n = seg.plan.n
    eps = space.epsilon
    whole, faces, face_row, i1, i2, mixed, sizes = _ridge_tables(n)
    vals = np.real(seg.values(ts))
    ders = np.real(seg.derivatives(ts))
    mats = np.real(seg.a[None] + ts[:, None, None] * (seg.b - seg.a)[None])
    if check:
        nsets = len(sizes)
        signed = (eps ** (sizes + 1))[:, None] * vals[:nsets]
        if np.any(signed <= 0):
            row, col = np.argwhere(signed <= 0)[0]
            s = seg.plan.sets[row]
            raise _ChamberExit(
                f"path leaves the chamber at t={ts[col]:.6f}: minor D_{{{','.join(map(str, s))}}} "
                f"= {vals[row, col]:.3e} has the wrong sign")
        if space is Space.HYPERBOLIC:
            iu = np.triu_indices(n + 1, 1)
            if np.any(mats[:, iu[0], iu[1]] <= 1.0):
                raise _ChamberExit("path leaves the chamber: an entry c_jk <= 1")
    d = vals[whole]
    d_face = np.where(face_row[:, None] >= 0, vals[np.maximum(face_row, 0)], 1.0)
    p = vals[i1] * vals[i2]
    dp = ders[i1] * vals[i2] + vals[i1] * ders[i2]
    rate = eps ** (n - 1) / np.sqrt(d[None] * d_face) * (vals[mixed] * dp / (2 * p) - ders[mixed])
    fv = _face_volumes(mats, faces, space, tol)
    return eps / (n - 1) * np.sum(fv * rate, axis=0)


def schlafli_rate(seg: SegmentMinors, t: float, space: Space, tol: float = 1e-12,
                  check: bool = True) -> float:
    return float(schlafli_rates(seg, [t], space, tol, check)[0])


def schlafli_form(c, direction, space: Space | str) -> float:
    """The volume 1-form at ``c`` applied to a tangent ``direction`` (symmetric, zero diagonal)."""
    space = Space.parse(space)
    a = np.asarray(as_array(c), dtype=float)
    e = np.asarray(direction, dtype=float)
    seg = SegmentMinors(a, a + e)
    return schlafli_rate(seg, 0.0, space)


_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


def _adaptive_gauss(f, tol: float, max_intervals: int = 4000) -> tuple[float, float]:
    """Integral of a vectorized ``f`` over ``[0, 1]`` by global adaptive Gauss-Legendre (10/20)."""
    def rule(a, b):
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        x = np.concatenate([mid + half * _GL_LO[0], mid + half * _GL_HI[0]])
        v = f(x)
        lo = half * (_GL_LO[1] @ v[:10])
        hi = half * (_GL_HI[1] @ v[10:])
        return hi, abs(hi - lo)

    val, err = rule(0.0, 1.0)
    heap = [(-err, 0.0, 1.0, val)]
    total_err = err
    count = 1
    while total_err > tol:
        if count >= max_intervals:
            best = math.fsum(item[3] for item in heap)
            raise NumericError(f"Schlafli quadrature stalled at error {total_err:.2e}", best=best)
        neg, a, b, v = heapq.heappop(heap)
        total_err += neg
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            cv, ce = rule(lo, hi)
            heapq.heappush(heap, (-ce, lo, hi, cv))
            total_err += ce
            count += 1
    return math.fsum(item[3] for item in heap), math.fsum(-item[0] for item in heap)


def _as_arrays(path) -> list[np.ndarray]:
    return [np.asarray(as_array(p), dtype=float) for p in path]


def check_path_in_chamber(path, space: Space, samples_per_segment: int = 16) -> None:
    """Sample each segment and test the chamber signs; raises :class:`DomainError` on the first exit."""
    pts = _as_arrays(path)
    n = pts[0].shape[0] - 1 if pts else 0
    if len(pts) < 2 or n < 2:
        return
    t = np.linspace(0.0, 1.0, samples_per_segment + 1)
    for a, b in zip(pts[:-1], pts[1:]):
        schlafli_rates(SegmentMinors(a, b, plan(n)), t, space)


def schlafli_integrate(path, space: Space | str, tol: float = 1e-11,
                       samples_per_segment: int = 16) -> float:
    """Integral of ``dV`` along a piecewise-linear real path inside the chamber.

    Each segment gets an absolute error budget proportional to its length
    and is integrated by adaptive Gauss-Legendre quadrature. Every quadrature
    node is also checked against the chamber signs.
    """
    space = Space.parse(space)
    pts = _as_arrays(path)
    if not pts:
        raise ArgumentError("empty path")
    n = pts[0].shape[0] - 1
    if n < 2:
        raise ArgumentError("Schlafli integration needs n >= 2")
    check_path_in_chamber(pts, space, samples_per_segment)
    mp = plan(n)
    lengths = [float(np.max(np.abs(b - a))) for a, b in zip(pts[:-1], pts[1:])]
    whole = sum(lengths) or 1.0
    total = 0.0
    for (a, b), length in zip(zip(pts[:-1], pts[1:]), lengths):
        if length == 0:
            continue
        seg = SegmentMinors(a, b, mp)
        seg_tol = tol * length / whole
        val, _ = _adaptive_gauss(lambda t: schlafli_rates(seg, t, space, seg_tol), seg_tol)
        total += val
    return total


def vertex_path(c_from, c_to, space: Space, waypoints: int) -> list[np.ndarray]:
    """Gram matrices along normalized straight interpolation of triangular vertex frames.

    Both frames are lower-triangular with positive diagonal, a convex set, so
    every intermediate simplex is non-degenerate.
    """
    eta = space.form(as_array(c_from).shape[0])
    x0 = triangular_factor(np.real(as_array(c_from)), eta)
    x1 = triangular_factor(np.real(as_array(c_to)), eta)
    out = []
    for t in np.linspace(0.0, 1.0, waypoints + 1):
        y = (1 - t) * x0 + t * x1
        norms = np.einsum("ij,j,ij->i", y, eta, y)
        y = y / np.sqrt(norms)[:, None]
        g = (y * eta) @ y.T
        np.fill_diagonal(g, 1.0)
        out.append(g)
    out[0] = np.array(as_array(c_from), dtype=float)
    out[-1] = np.array(as_array(c_to), dtype=float)
    return out


def volume_path(c_from, c_to, space: Space, attempt: int) -> list[np.ndarray]:
    """Candidate path for the given retry level (0: straight segment)."""
    if attempt == 0:
        return [np.asarray(as_array(c_from), float), np.asarray(as_array(c_to), float)]
    return vertex_path(c_from, c_to, space, 4 ** attempt * 2)


def volume(c, space: Space | str, tol: float = 1e-11) -> VolumeResult:
    """Volume of the simplex with Gram matrix ``c``."""
    space = Space.parse(space)
    a = as_array(c)
    if np.iscomplexobj(a):
        raise DomainError("volume() needs a real Gram matrix; use continuation for complex ones")
    n = a.shape[0] - 1
    if n == 0:
        return VolumeResult(1.0, Method.CLOSED_FORM, 0.0)
    require_chamber(a, space)
    if n <= 2:
        return VolumeResult(_closed_value(a, space), Method.CLOSED_FORM, 0.0)
    base = base_volume(n, space)
    start = regular_simplex_gram(n, 1.0, space).entries
    if np.allclose(a, start, rtol=0, atol=0):
        return VolumeResult(base, Method.SCHLAFLI, _BASE_TARGET.get(n, tol))
    last = None
    for attempt in range(4):
        path = volume_path(start, a, space, attempt)
        try:
            val = schlafli_integrate(path, space, tol)
        except _ChamberExit as exc:
            log.debug("path attempt %d failed: %s", attempt, exc)
            last = exc
            continue
        return VolumeResult(base + val, Method.SCHLAFLI, tol + _BASE_TARGET.get(n, 0.0))
    raise NumericError(f"could not build an admissible path to the target: {last}")
