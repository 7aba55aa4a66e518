"""Oriented pseudo-manifolds mapped into the hyperboloid model of ``H^n``.

A polyhedron is just the images of the vertices: faces are geodesic
simplices spanned by them, so volumes and angles never need the map on
interior points. The generalized oriented volume is the signed sum of cones
from an apex over the positively oriented facets; the indicator-function
form is estimated by Monte Carlo in the Klein ball.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, DomainError
from .gram import Space, classify_domain, gram_from_vertices, minor
from .volume import _closed_value, volume, volume_oracle_points

HYP = Space.HYPERBOLIC


def _perm_parity(seq: Sequence, ref: Sequence) -> int:
    """+1 if ``seq`` is an even permutation of ``ref``, -1 if odd."""
    pos = {v: i for i, v in enumerate(ref)}
    p = [pos[v] for v in seq]
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class PseudoManifold:
    """Oriented ``(n-1)``-dimensional simplicial complex given by its ordered facets."""

    n: int
    vertices: tuple
    facets: tuple[tuple, ...]
    ridges: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("polyhedra need n >= 2")
        facets = tuple(tuple(f) for f in self.facets)
        verts = tuple(self.vertices)
        object.__setattr__(self, "facets", facets)
        object.__setattr__(self, "vertices", verts)
        for f in facets:
            if len(f) != self.n:
                raise ArgumentError(f"facet {f} must have n = {self.n} vertices")
            if len(set(f)) != len(f):
                raise ArgumentError(f"facet {f} repeats a vertex")
            unknown = set(f) - set(verts)
            if unknown:
                raise ArgumentError(f"facet {f} uses unknown vertices {sorted(map(str, unknown))}")
        table: dict[frozenset, list[int]] = defaultdict(list)
        for i, f in enumerate(facets):
            for r in itertools.combinations(f, self.n - 1):
                table[frozenset(r)].append(i)
        object.__setattr__(self, "ridges", dict(table))

    def reversed(self) -> "PseudoManifold":
        """Same complex with every facet orientation flipped."""
        flipped = tuple((f[1], f[0]) + f[2:] for f in self.facets)
        return PseudoManifold(self.n, self.vertices, flipped)

    def edges(self) -> list[frozenset]:
        out = set()
        for f in self.facets:
            for e in itertools.combinations(f, 2):
                out.add(frozenset(e))
        return sorted(out, key=lambda e: sorted(map(str, e)))

    def induced(self, facet: int, ridge: frozenset) -> int:
        """Orientation sign the facet induces on the ridge, relative to its sorted order."""
        f = self.facets[facet]
        (i,) = [k for k, v in enumerate(f) if v not in ridge]
        rest = f[:i] + f[i + 1:]
        ref = sorted(rest, key=str)
        return (-1) ** i * _perm_parity(rest, ref)


def validate_pseudomanifold(k: PseudoManifold) -> list[str]:
    """Violations of the pseudo-manifold axioms and of orientation coherence (empty if valid)."""
    problems = []
    used = {v for f in k.facets for v in f}
    for v in k.vertices:
        if v not in used:
            problems.append(f"vertex {v} lies in no facet")
    for r, owners in sorted(k.ridges.items(), key=lambda kv: sorted(map(str, kv[0]))):
        label = "{" + ",".join(sorted(map(str, r))) + "}"
        if len(owners) != 2:
            problems.append(f"ridge {label} lies in {len(owners)} facets, expected 2")
            continue
        a, b = owners
        if k.induced(a, r) == k.induced(b, r):
            problems.append(f"ridge {label}: facets {k.facets[a]} and {k.facets[b]} induce the same orientation")
    if k.facets:
        adj = defaultdict(set)
        for owners in k.ridges.values():
            for a, b in itertools.combinations(owners, 2):
                adj[a].add(b)
                adj[b].add(a)
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in adj[x] - seen:
                seen.add(y)
                stack.append(y)
        if len(seen) != len(k.facets):
            problems.append(f"not strongly connected: {len(k.facets) - len(seen)} facets unreachable "
                            "through shared ridges")
    else:
        problems.append("no facets")
    return problems


def _check_point(x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    q = x[0] ** 2 - x[1:] @ x[1:]
    if abs(q - 1.0) > tol * max(1.0, x @ x):
        raise ArgumentError(f"point {x.tolist()} is not on the unit hyperboloid (norm {q})")
    if x[0] <= 0:
        raise ArgumentError("points must lie on the upper sheet (x0 > 0)")
    return x


@dataclass(frozen=True)
class Configuration:
    """Vertex positions on the upper sheet of the hyperboloid in ``R^{1,n}``."""

    coords: Mapping[Hashable, np.ndarray]
    tol: float = 1e-10

    def __post_init__(self):
        fixed = {}
        for v, x in self.coords.items():
            fixed[v] = _check_point(x, self.tol)
            fixed[v].setflags(write=False)
        object.__setattr__(self, "coords", fixed)

    def __getitem__(self, v) -> np.ndarray:
        return self.coords[v]

    @property
    def dim(self) -> int:
        return len(next(iter(self.coords.values()))) - 1

    def matrix(self, order: Sequence) -> np.ndarray:
        return np.stack([self.coords[v] for v in order])

    def transformed(self, g: np.ndarray) -> "Configuration":
        return Configuration({v: g @ x for v, x in self.coords.items()}, self.tol)


@dataclass(frozen=True)
class EdgeLengthSet:
    lengths: Mapping[frozenset, float]

    def __post_init__(self):
        fixed = {}
        for e, l in self.lengths.items():
            e = frozenset(e)
            if len(e) != 2:
                raise ArgumentError(f"edge {set(e)} must join two distinct vertices")
            if not l > 0:
                raise ArgumentError(f"edge length must be positive, got {l}")
            fixed[e] = float(l)
        object.__setattr__(self, "lengths", fixed)

    def cosh(self, e) -> float:
        return math.cosh(self.lengths[frozenset(e)])

    @classmethod
    def from_configuration(cls, k: PseudoManifold, p: Configuration) -> "EdgeLengthSet":
        out = {}
        for e in k.edges():
            u, v = tuple(e)
            c = p[u][0] * p[v][0] - p[u][1:] @ p[v][1:]
            out[e] = math.acosh(max(c, 1.0))
        return cls(out)


def minkowski_det(points: np.ndarray) -> float:
    return float(np.linalg.det(np.asarray(points, dtype=float)))


def oriented_cone_volume(apex, facet_points, tol: float = 1e-11) -> float:
    """Signed volume of the simplex ``[apex, facet_points...]``; the sign is that of the
    coordinate determinant, and degenerate simplices give 0.

    Nearly flat simplices (inside the classification band) are measured by the
    cubature oracle, which stays accurate down to zero volume.
    """
    x = np.vstack([np.atleast_2d(apex), np.atleast_2d(facet_points)]).astype(float)
    if x.shape[0] != x.shape[1]:
        raise ArgumentError("need n points in R^{1,n} besides the apex")
    det = minkowski_det(x)
    if det == 0.0:
        return 0.0
    c = gram_from_vertices(x, HYP)
    if classify_domain(c).matches(HYP):
        val = volume(c, HYP, tol).value
    else:
        val = volume_oracle_points(x, HYP, tol).value
    return math.copysign(val, det)


def _centroid(points: np.ndarray) -> np.ndarray:
    s = points.sum(axis=0)
    return s / math.sqrt(s[0] ** 2 - s[1:] @ s[1:])


def generalized_volume(k: PseudoManifold, p: Configuration, apex=None, tol: float = 1e-11) -> float:
    """Signed sum of the cones from ``apex`` over all positively oriented facets.

    The default apex is the normalized centroid of the vertices.
    """
    if apex is None:
        apex = _centroid(p.matrix(k.vertices))
    apex = _check_point(apex)
    return math.fsum(oriented_cone_volume(apex, p.matrix(f), tol) for f in k.facets)


def _ridge_frame(k: PseudoManifold, ridge: frozenset):
    """Vertices ``v0`` (opposite in the first facet), ``v1`` (opposite in the second), the ridge
    vertices, and the parity of ``(v1, ridge...)`` relative to the second facet's orientation."""
    owners = k.ridges.get(frozenset(ridge))
    if owners is None or len(owners) != 2:
        raise ArgumentError(f"{set(ridge)} is not a ridge shared by exactly two facets")
    s1, s2 = (k.facets[i] for i in owners)
    v0 = next(v for v in s1 if v not in ridge)
    v1 = next(v for v in s2 if v not in ridge)
    rest = [v for v in s2 if v != v1]
    return v0, v1, rest, _perm_parity([v1] + rest, s2)


def oriented_dihedral_angle(k: PseudoManifold, p: Configuration, ridge: Iterable) -> float:
    """Oriented dihedral angle at a ridge, as a representative in ``[0, 2 pi)``.

    With ``x_0`` opposite the ridge in one facet, ``x_1`` opposite in the
    other and ``x_2..x_n`` on the ridge (ordered so ``x_1..x_n`` is positive
    in its facet), ``cos`` is ``(-1)^(n-1) D_{I',I''} / sqrt(D_I' D_I'')`` and
    ``sin`` is ``sqrt((-1)^n D_I / (D_I' D_I'')) det(x_0..x_n)``.
    """
    ridge = frozenset(ridge)
    v0, v1, rest, parity = _ridge_frame(k, ridge)
    n = k.n
    x = p.matrix([v0, v1] + rest)
    c = (x * HYP.form(n + 1)) @ x.T
    np.fill_diagonal(c, 1.0)
    face = list(range(2, n + 1))
    i1 = [0] + face
    i2 = [1] + face
    d1 = minor(c, i1, i1)
    d2 = minor(c, i2, i2)
    tiny = 1e-13 * max(1.0, float(np.abs(c).max())) ** (n - 1)
    if (-1) ** n * d1 >= -tiny or (-1) ** n * d2 >= -tiny:
        raise DomainError(f"a facet at ridge {sorted(map(str, ridge))} is degenerate")
    d_face = minor(c, face, face)
    cos_part = (-1) ** (n - 1) * minor(c, i1, i2)
    sin_part = math.sqrt(max((-1) ** n * d_face, 0.0)) * minkowski_det(x) * parity
    return math.atan2(sin_part, cos_part) % (2 * math.pi)


def ridge_volume(p: Configuration, ridge: Iterable) -> float:
    """Unoriented ``(n-2)``-volume of the image of a ridge."""
    r = sorted(ridge, key=str)
    if len(r) == 1:
        return 1.0
    x = p.matrix(r)
    c = gram_from_vertices(x, HYP).entries
    if len(r) <= 3:
        return _closed_value(c, HYP)
    return volume(c, HYP).value


def dihedral_angles(k: PseudoManifold, p: Configuration,
                    previous: Mapping[frozenset, float] | None = None) -> dict[frozenset, float]:
    """All oriented dihedral angles, unwrapped toward ``previous`` when given."""
    out = {}
    for r in k.ridges:
        a = oriented_dihedral_angle(k, p, r)
        if previous is not None and r in previous:
            a += 2 * math.pi * round((previous[r] - a) / (2 * math.pi))
        out[r] = a
    return out


def total_mean_curvature(k: PseudoManifold, p: Configuration,
                         angles: Mapping[frozenset, float] | None = None) -> float:
    """``sum_F V_F (pi - alpha_F)``.

    Angles default to representatives in ``[0, 2 pi)``; pass unwrapped angles
    from :func:`dihedral_angles` to follow one continuous branch along a
    deformation.
    """
    if angles is None:
        angles = dihedral_angles(k, p)
    return math.fsum(ridge_volume(p, r) * (math.pi - angles[r]) for r in k.ridges)


# ---------------------------------------------------------------------------
# indicator function in the Klein ball


def klein(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    return points[:, 1:] / points[:, :1]


def _crossings(origins, dirs, tri, tol=1e-9):
    """Signed crossings of rays with one oriented triangle (Moller-Trumbore).

    Returns ``(signs, degenerate)``: ``signs`` is +-1 or 0 per ray and
    ``degenerate`` flags rays that graze an edge or start on the triangle.
    """
    a, b, c = tri
    e1, e2 = b - a, c - a
    normal = np.cross(e1, e2)
    pvec = np.cross(dirs, e2)
    det = pvec @ e1
    small = np.abs(det) < 1e-14
    inv = 1.0 / np.where(small, 1.0, det)
    tvec = origins - a
    qvec = np.cross(tvec, e1)
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    v = np.einsum("ij,ij->i", dirs, qvec) * inv
    t = (qvec @ e2) * inv
    w = 1 - u - v
    near = ~small & (u > -tol) & (v > -tol) & (w > -tol) & (t > -tol)
    hit = near & (u > tol) & (v > tol) & (w > tol) & (t > tol)
    signs = np.where(hit, np.sign(dirs @ normal), 0.0)
    return signs, near & ~hit


def indicator(k: PseudoManifold, p: Configuration, u: np.ndarray,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """Indicator function at Klein-ball points ``u`` (one random ray per point)."""
    if k.n != 3:
        raise ArgumentError("the ray-casting indicator is implemented for n = 3")
    rng = rng or np.random.default_rng(0)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    tris = [klein(p.matrix(f)) for f in k.facets]
    lam = np.zeros(len(u))
    todo = np.arange(len(u))
    for _ in range(50):
        if not len(todo):
            break
        d = rng.normal(size=(len(todo), 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        acc = np.zeros(len(todo))
        bad = np.zeros(len(todo), dtype=bool)
        for tri in tris:
            s, deg = _crossings(u[todo], d, tri)
            acc += s
            bad |= deg
        lam[todo[~bad]] = acc[~bad]
        todo = todo[bad]
    if len(todo):
        raise DomainError("could not find a generic ray for some points")
    return lam


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    samples: int


def indicator_volume_mc(k: PseudoManifold, p: Configuration, samples: int = 1_000_000,
                        seed: int = 0, chunk: int = 200_000, margin: float = 0.05) -> MonteCarloEstimate:
    """Monte Carlo estimate of the integral of the indicator function over ``H^3``.

    Points are drawn uniformly from a Klein ball that contains every vertex
    image (the indicator vanishes outside the convex hull) and weighted by
    the hyperbolic density ``(1 - |u|^2)^-2``. Points too close to a facet
    are redrawn.
    """
    if k.n != 3:
        raise ArgumentError("the Monte Carlo indicator is implemented for n = 3")
    rng = np.random.default_rng(seed)
    pts = klein(p.matrix(k.vertices))
    radius = float(np.max(np.linalg.norm(pts, axis=1)))
    radius = min(radius + margin * (1 - radius), 1 - 1e-9)
    ball = 4.0 / 3.0 * math.pi * radius ** 3
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        g = rng.normal(size=(m, 3))
        g /= np.linalg.norm(g, axis=1)[:, None]
        u = g * radius * rng.random(m)[:, None] ** (1.0 / 3.0)
        lam = indicator(k, p, u, rng)
        w = lam * (1 - np.sum(u * u, axis=1)) ** -2
        s1 += float(w.sum())
        s2 += float((w * w).sum())
        done += m
    mean = s1 / samples
    var = max(s2 / samples - mean ** 2, 0.0)
    return MonteCarloEstimate(ball * mean, ball * math.sqrt(var / samples), samples)
