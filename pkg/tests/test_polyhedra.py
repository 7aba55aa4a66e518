from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexvol.errors import ArgumentError, DomainError
from flexvol.flexion import hyperboloid_point, octahedron_complex
from flexvol.gram import Space
from flexvol.polyhedra import (Configuration, EdgeLengthSet, PseudoManifold, dihedral_angles,
                               generalized_volume, indicator, indicator_volume_mc, klein,
                               oriented_cone_volume, oriented_dihedral_angle, ridge_volume,
                               total_mean_curvature, validate_pseudomanifold)
from flexvol.volume import volume_oracle_points

H = Space.HYPERBOLIC
ETA = np.array([1.0, -1.0, -1.0, -1.0])
TETRA = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))


def mink(a, b):
    return float(a @ (ETA[: len(a)] * b))


def tetra_boundary(labels=(0, 1, 2, 3)) -> PseudoManifold:
    f = tuple(tuple(labels[i] for i in t) for t in TETRA)
    return PseudoManifold(3, tuple(labels), f)


def positive_tetra(rng, spread=0.6) -> np.ndarray:
    while True:
        x = np.stack([hyperboloid_point(rng.normal(size=3) * spread) for _ in range(4)])
        d = np.linalg.det(x)
        if abs(d) > 1e-3:
            return x if d > 0 else x[[1, 0, 2, 3]]


def convex_octahedron(r=0.8, squash=(1.0, 0.9, 1.15)):
    k = octahedron_complex()
    coords = {}
    for i, (a, b) in enumerate(zip(k.vertices[:3], k.vertices[3:])):
        e = np.zeros(3)
        e[i] = r * squash[i]
        coords[a] = hyperboloid_point(e)
        coords[b] = hyperboloid_point(-e)
    return k, Configuration(coords)


@pytest.fixture(scope="module")
def octa():
    k, p = convex_octahedron()
    if generalized_volume(k, p) < 0:
        k = k.reversed()
    return k, p


def tangent_angle(p, u, v, w1, w2) -> float:
    """Interior angle at edge uv between the faces through w1 and w2, from tangent vectors at u."""
    x = p[u]

    def perp(y, e=None):
        t = y - mink(y, x) * x
        if e is not None:
            t = t - mink(t, e) / mink(e, e) * e
        return t

    e = perp(p[v])
    a, b = perp(p[w1], e), perp(p[w2], e)
    return math.acos(np.clip(-mink(a, b) / math.sqrt(mink(a, a) * mink(b, b)), -1, 1))


# --- combinatorics ------------------------------------------------------------------

def test_simplex_and_octahedron_boundaries_are_valid():
    assert validate_pseudomanifold(tetra_boundary()) == []
    assert validate_pseudomanifold(octahedron_complex()) == []


def test_two_tetrahedra_sharing_an_edge():
    a = tetra_boundary((0, 1, 2, 3))
    b = tetra_boundary((0, 1, 4, 5))
    k = PseudoManifold(3, tuple(range(6)), a.facets + b.facets)
    problems = validate_pseudomanifold(k)
    assert any("ridge {0,1}" in s and "4 facets" in s for s in problems)
    # without the shared edge the union is not strongly connected
    b = tetra_boundary((4, 5, 6, 7))
    k = PseudoManifold(3, tuple(range(8)), a.facets + b.facets)
    assert any("strongly connected" in s for s in validate_pseudomanifold(k))


def test_incoherent_orientation_is_reported():
    f = list(TETRA)
    f[0] = (2, 1, 3)
    k = PseudoManifold(3, (0, 1, 2, 3), tuple(f))
    assert any("same orientation" in s for s in validate_pseudomanifold(k))


def test_complex_argument_errors():
    with pytest.raises(ArgumentError):
        PseudoManifold(3, (0, 1, 2), ((0, 1),))
    with pytest.raises(ArgumentError):
        PseudoManifold(3, (0, 1, 2), ((0, 1, 1),))
    with pytest.raises(ArgumentError):
        PseudoManifold(3, (0, 1, 2), ((0, 1, 5),))
    with pytest.raises(ArgumentError):
        Configuration({0: np.array([1.0, 1.0, 0.0, 0.0])})
    with pytest.raises(ArgumentError):
        Configuration({0: -hyperboloid_point([0.1, 0.2, 0.3])})
    with pytest.raises(ArgumentError):
        EdgeLengthSet({frozenset((0, 1)): -1.0})


def test_unused_vertex_is_reported():
    k = PseudoManifold(3, (0, 1, 2, 3, 9), TETRA)
    assert any("vertex 9" in s for s in validate_pseudomanifold(k))


# --- cone volumes -------------------------------------------------------------------

def test_cone_sign_and_magnitude(rng):
    x = positive_tetra(rng)
    v = oriented_cone_volume(x[0], x[1:])
    oracle = volume_oracle_points(x, H).value
    assert v > 0 and v == pytest.approx(oracle, abs=1e-8)
    assert oriented_cone_volume(x[0], x[[2, 1, 3]]) == pytest.approx(-v, abs=1e-13)


def test_cone_with_apex_in_the_facet_plane():
    tri = np.stack([hyperboloid_point([a, b, 0.0]) for a, b in ((0.3, 0), (0, 0.4), (-0.2, -0.3))])
    apex = hyperboloid_point([0.05, 0.02, 0.0])
    assert oriented_cone_volume(apex, tri) == 0.0


def test_regular_triangle_cone_matches_oracle():
    r = 0.7
    tri = np.stack([hyperboloid_point([r * math.cos(t), r * math.sin(t), 0.5])
                    for t in (0, 2 * math.pi / 3, 4 * math.pi / 3)])
    apex = np.array([1.0, 0, 0, 0])
    v = oriented_cone_volume(apex, tri)
    x = np.vstack([apex, tri])
    assert abs(v) == pytest.approx(volume_oracle_points(x, H).value, abs=1e-8)
    assert math.copysign(1, v) == math.copysign(1, np.linalg.det(x))


def test_cone_needs_matching_dimension():
    with pytest.raises(ArgumentError):
        oriented_cone_volume(np.array([1.0, 0, 0, 0]), np.eye(4)[:2])


# --- generalized volume -------------------------------------------------------------

def test_tetrahedron_boundary_volume(rng):
    x = positive_tetra(rng)
    p = Configuration({i: x[i] for i in range(4)})
    v = generalized_volume(tetra_boundary(), p)
    assert v == pytest.approx(volume_oracle_points(x, H).value, abs=1e-8)


def test_convex_octahedron_matches_decomposition(octa):
    k, p = octa
    center = np.array([1.0, 0, 0, 0])
    oracle = sum(volume_oracle_points(np.vstack([center, p.matrix(f)]), H).value for f in k.facets)
    assert generalized_volume(k, p) == pytest.approx(oracle, abs=1e-8)


def test_apex_independence(octa, rng):
    k, p = octa
    ref = generalized_volume(k, p)
    for _ in range(10):
        apex = hyperboloid_point(rng.normal(size=3) * 1.5)
        assert abs(generalized_volume(k, p, apex) - ref) <= 1e-10


def test_reversal_negates(octa):
    k, p = octa
    assert generalized_volume(k.reversed(), p) == pytest.approx(-generalized_volume(k, p), abs=1e-12)


def test_isometry_invariance(octa, rng):
    k, p = octa
    t = 0.6
    boost = np.eye(4)
    boost[:2, :2] = [[math.cosh(t), math.sinh(t)], [math.sinh(t), math.cosh(t)]]
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    rot = np.eye(4)
    rot[1:, 1:] = q
    g = boost @ rot
    assert generalized_volume(k, p.transformed(g)) == pytest.approx(generalized_volume(k, p), abs=1e-10)
    reflect = np.diag([1.0, -1.0, 1.0, 1.0])
    assert generalized_volume(k, p.transformed(reflect)) == pytest.approx(
        -generalized_volume(k, p), abs=1e-10)


def test_additivity_of_glued_tetrahedra(rng):
    x = positive_tetra(rng)
    # reflect vertex 0 across the plane of face (1,2,3) to get a fifth vertex on the other side
    m = np.stack([x[1], x[2], x[3]]) * ETA
    _, _, vt = np.linalg.svd(m)
    normal = vt[-1]
    normal = normal / math.sqrt(-mink(normal, normal))
    y = x[0] - 2 * mink(x[0], normal) / mink(normal, normal) * normal
    pts = {i: x[i] for i in range(4)} | {4: y}
    p = Configuration(pts)
    k1 = tetra_boundary((0, 1, 2, 3))
    k2 = tetra_boundary((4, 1, 2, 3)).reversed()
    shared = [f for f in k1.facets if 0 not in f] + [f for f in k2.facets if 4 not in f]
    glued = tuple(f for f in k1.facets + k2.facets if f not in shared)
    k = PseudoManifold(3, tuple(range(5)), glued)
    assert validate_pseudomanifold(k) == []
    v1 = generalized_volume(k1, Configuration({i: pts[i] for i in range(4)}))
    v2 = generalized_volume(k2, Configuration({i: pts[i] for i in range(1, 5)}))
    assert v1 == pytest.approx(v2, abs=1e-9)
    assert generalized_volume(k, p) == pytest.approx(v1 + v2, abs=1e-10)


# --- dihedral angles and total mean curvature ---------------------------------------

def _opposite(k, ridge):
    owners = k.ridges[frozenset(ridge)]
    return [next(v for v in k.facets[i] if v not in ridge) for i in owners]


def test_convex_angles_match_tangent_oracle(octa):
    k, p = octa
    for ridge in k.ridges:
        a = oriented_dihedral_angle(k, p, ridge)
        u, v = tuple(ridge)
        w1, w2 = _opposite(k, ridge)
        assert 0 < a < math.pi
        assert a == pytest.approx(tangent_angle(p, u, v, w1, w2), abs=1e-10)


def test_angle_does_not_depend_on_facet_order(octa):
    k, p = octa
    shuffled = PseudoManifold(3, k.vertices, tuple(reversed(k.facets)))
    a, b = dihedral_angles(k, p), dihedral_angles(shuffled, p)
    assert all(abs(a[r] - b[r]) < 1e-12 for r in a)


def test_flat_ridge_gives_pi():
    pts = {0: hyperboloid_point([0.3, 0, 0]), 1: hyperboloid_point([-0.3, 0, 0]),
           2: hyperboloid_point([0, 0.4, 0]), 3: hyperboloid_point([0.1, -0.5, 0])}
    k = PseudoManifold(3, (0, 1, 2, 3), ((0, 1, 2), (1, 0, 3)))
    a = oriented_dihedral_angle(k, Configuration(pts), (0, 1))
    assert a == pytest.approx(math.pi, abs=1e-12)


def test_reflection_reverses_angles(octa):
    k, p = octa
    q = p.transformed(np.diag([1.0, 1.0, -1.0, 1.0]))
    for r in k.ridges:
        a = oriented_dihedral_angle(k, p, r)
        b = oriented_dihedral_angle(k, q, r)
        assert b == pytest.approx(2 * math.pi - a, abs=1e-10)


def test_degenerate_facet_raises():
    pts = {0: hyperboloid_point([0.3, 0, 0]), 1: hyperboloid_point([-0.3, 0, 0]),
           2: hyperboloid_point([0.6, 0, 0]), 3: hyperboloid_point([0.1, -0.5, 0.2])}
    k = PseudoManifold(3, (0, 1, 2, 3), ((0, 1, 2), (1, 0, 3)))
    with pytest.raises(DomainError):
        oriented_dihedral_angle(k, Configuration(pts), (0, 1))
    with pytest.raises(ArgumentError):
        oriented_dihedral_angle(k, Configuration(pts), (0, 2, 3))


def test_tmc_matches_per_edge_formula(octa):
    k, p = octa
    expected = 0.0
    for ridge in k.ridges:
        u, v = tuple(ridge)
        w1, w2 = _opposite(k, ridge)
        expected += math.acosh(mink(p[u], p[v])) * (math.pi - tangent_angle(p, u, v, w1, w2))
    tmc = total_mean_curvature(k, p)
    assert tmc > 0 and tmc == pytest.approx(expected, abs=1e-9)


def test_ridge_volume_is_edge_length(octa):
    k, p = octa
    for r in k.ridges:
        u, v = tuple(r)
        assert ridge_volume(p, r) == pytest.approx(math.acosh(mink(p[u], p[v])), abs=1e-13)


def test_schlafli_for_polyhedra(octa):
    """d(2V) = -sum l dalpha when one vertex moves and the edge lengths change."""
    k, p = octa
    direction = np.array([0.13, -0.07, 0.21])
    v = k.vertices[0]
    y = p[v][1:]
    h = 1e-5

    def moved(s):
        return Configuration(dict(p.coords) | {v: hyperboloid_point(y + s * direction)})

    qp, qm = moved(h), moved(-h)
    dvol = (generalized_volume(k, qp) - generalized_volume(k, qm)) / (2 * h)
    ap, am = dihedral_angles(k, qp), dihedral_angles(k, qm)
    rhs = -sum(ridge_volume(p, r) * (ap[r] - am[r]) / (2 * h) for r in k.ridges)
    assert 2 * dvol == pytest.approx(rhs, abs=1e-6)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_random_tetrahedron_angles_are_interior(seed):
    x = positive_tetra(np.random.default_rng(seed))
    p = Configuration({i: x[i] for i in range(4)})
    k = tetra_boundary()
    for r in k.ridges:
        u, v = tuple(r)
        w1, w2 = _opposite(k, r)
        assert oriented_dihedral_angle(k, p, r) == pytest.approx(tangent_angle(p, u, v, w1, w2), abs=1e-8)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_random_apex_independence_property(seed):
    rng = np.random.default_rng(seed)
    x = positive_tetra(rng)
    p = Configuration({i: x[i] for i in range(4)})
    k = tetra_boundary()
    a = generalized_volume(k, p)
    b = generalized_volume(k, p, hyperboloid_point(rng.normal(size=3)))
    assert abs(a - b) <= 1e-10


# --- indicator function -------------------------------------------------------------

def test_indicator_inside_and_far_outside(octa):
    k, p = octa
    lam = indicator(k, p, np.array([[0.0, 0.0, 0.0], [0.95, 0.0, 0.0], [0.0, -0.9, 0.1]]))
    assert lam[0] == 1 and lam[1] == 0 and lam[2] == 0
    assert indicator(k.reversed(), p, np.zeros((1, 3)))[0] == -1
    assert np.allclose(klein(p.matrix(k.vertices))[0], p[k.vertices[0]][1:] / p[k.vertices[0]][0])


def test_mc_small_sample_and_reversal(octa):
    k, p = octa
    a = indicator_volume_mc(k, p, samples=40_000, seed=2)
    b = indicator_volume_mc(k.reversed(), p, samples=40_000, seed=2)
    assert b.value == pytest.approx(-a.value, abs=1e-12)
    assert abs(a.value - generalized_volume(k, p)) <= 4 * a.stderr


def test_indicator_only_in_three_dimensions():
    k = PseudoManifold(2, (0, 1, 2), ((0, 1), (1, 2), (2, 0)))
    p = Configuration({i: hyperboloid_point([0.1 * i, 0.2]) for i in range(3)})
    with pytest.raises(ArgumentError):
        indicator(k, p, np.zeros((1, 2)))
    with pytest.raises(ArgumentError):
        indicator_volume_mc(k, p, samples=10)
