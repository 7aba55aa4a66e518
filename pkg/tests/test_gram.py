from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flexvol.errors import ArgumentError, DomainError
from flexvol.gram import (DomainKind, GramMatrix, HypersurfaceId, Space, classify_domain,
                          components, default_tol, dihedral_pair, gram_from_vertices, jacobi_residual, minor,
                          principal_minor, principal_minors, vertices_from_gram, witness_matrix)
from flexvol.volume import regular_simplex_gram

from conftest import hyperboloid, random_hyperbolic_gram, random_spherical_gram


def symmetric_unit(rng, n, complex_=False):
    a = rng.normal(size=(n + 1, n + 1))
    if complex_:
        a = a + 1j * rng.normal(size=(n + 1, n + 1))
    a = np.triu(a, 1)
    a = a + a.T
    np.fill_diagonal(a, 1.0)
    return a


# --- GramMatrix and SpaceTag ---------------------------------------------

def test_gram_matrix_rejects_bad_diagonal_and_asymmetry():
    with pytest.raises(ArgumentError):
        GramMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]))
    with pytest.raises(ArgumentError):
        GramMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ArgumentError):
        GramMatrix(np.ones((2, 3)))


def test_gram_matrix_field_and_immutability():
    c = GramMatrix(np.array([[1, 0.5 + 0j], [0.5, 1]]))
    assert c.field == "real" and c.n == 1
    z = GramMatrix(np.array([[1, 0.5 + 1j], [0.5 + 1j, 1]]))
    assert z.is_complex and z.field == "complex"
    with pytest.raises(ValueError):
        c.entries[0, 1] = 3.0


def test_space_epsilon_and_parse():
    assert Space.SPHERE.epsilon == 1 and Space.HYPERBOLIC.epsilon == -1
    assert Space.HYPERBOLIC.curvature == -1
    assert Space.parse("h") is Space.HYPERBOLIC and Space.parse("Sphere") is Space.SPHERE
    with pytest.raises(ArgumentError):
        Space.parse("torus")


# --- minors ------------------------------------------------------------------

def test_identity_minors_are_one():
    eye = np.eye(5)
    for size in range(1, 6):
        for idx in itertools.combinations(range(5), size):
            assert minor(eye, set(idx), set(idx)) == pytest.approx(1.0)


def test_two_element_minor_factorizes(rng):
    c = symmetric_unit(rng, 3)
    for j, k in itertools.combinations(range(4), 2):
        assert principal_minor(c, {j, k}) == pytest.approx((1 + c[j, k]) * (1 - c[j, k]))


def test_minor_size_mismatch():
    with pytest.raises(ArgumentError):
        minor(np.eye(3), {0, 1}, {0})


def test_minor_sequences_keep_their_order(rng):
    c = symmetric_unit(rng, 3)
    a = minor(c, (0, 1), (2, 3))
    assert minor(c, (1, 0), (2, 3)) == pytest.approx(-a)
    assert minor(c, {1, 0}, {2, 3}) == pytest.approx(a)


def test_dihedral_pair_supersets():
    i1, i2 = dihedral_pair((0, 2), 3)
    assert sorted([sorted(i1), sorted(i2)]) == [[0, 1, 2], [0, 2, 3]]
    assert i1[1:] == i2[1:] == (0, 2)


def test_jacobi_identity_on_identity():
    for idx in itertools.combinations(range(4), 2):
        assert jacobi_residual(np.eye(4), idx) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(2, 4), st.booleans(), st.integers(0, 2 ** 31))
def test_jacobi_residual_vanishes(n, cplx, seed):
    rng = np.random.default_rng(seed)
    c = symmetric_unit(rng, n, cplx)
    bound = 1e-10 * (1 + np.linalg.norm(c) ** 4)
    for idx in itertools.combinations(range(n + 1), n - 1):
        assert abs(jacobi_residual(c, idx)) <= bound


# --- components and classification ------------------------------------------

def test_hypersurface_sign_rule_and_labels():
    with pytest.raises(ArgumentError):
        HypersurfaceId((0, 1))
    with pytest.raises(ArgumentError):
        HypersurfaceId((0, 1, 2), 1)
    h = HypersurfaceId((1, 0), -1)
    assert h.index_set == (0, 1) and h.label() == "H{0,1}-"
    assert HypersurfaceId.parse(h.label()) == h
    assert HypersurfaceId.parse("H{0,1,2}") == HypersurfaceId((0, 1, 2))


def test_component_count():
    # n = 3: six signed pairs (twelve components), four triples and the full set
    assert len(components(3)) == 12 + 4 + 1


def test_regular_simplices_classify_by_space():
    c = GramMatrix.from_offdiagonal(3, {p: math.cos(1) for p in itertools.combinations(range(4), 2)})
    assert classify_domain(c).kind is DomainKind.SPHERICAL_SIMPLEX
    c = GramMatrix.from_offdiagonal(3, {p: math.cosh(1) for p in itertools.combinations(range(4), 2)})
    assert classify_domain(c).kind is DomainKind.HYPERBOLIC_SIMPLEX


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("edge", [0.1, 0.5, 1.0, 1.5, 2.0])
def test_regular_classification_against_eigenvalues(n, edge):
    # small simplices have minors of order edge^(2n), so use a band below that
    tol = 1e-13
    c = regular_simplex_gram(n, edge, "hyperbolic")
    assert classify_domain(c, tol).matches(Space.HYPERBOLIC)
    s = np.eye(n + 1) + math.cos(edge) * (1 - np.eye(n + 1))
    if np.min(np.linalg.eigvalsh(s)) > 1e-9:
        assert classify_domain(regular_simplex_gram(n, edge, "sphere"), tol).matches(Space.SPHERE)
    else:
        with pytest.raises(DomainError):
            regular_simplex_gram(n, edge, "sphere")


def test_tiny_simplex_falls_in_the_default_band():
    c = regular_simplex_gram(4, 0.1, "hyperbolic")
    assert abs(np.linalg.det(c.entries)) < default_tol(c)
    cls = classify_domain(c)
    assert cls.kind is DomainKind.ON_HYPERSURFACE
    assert classify_domain(c, 1e-15).kind is DomainKind.HYPERBOLIC_SIMPLEX


def test_non_real_and_other_real():
    z = np.array([[1, 2 + 1j], [2 + 1j, 1]])
    assert classify_domain(z).kind is DomainKind.NON_REAL
    mixed = np.array([[1, 0.5, 2.0], [0.5, 1, 0.3], [2.0, 0.3, 1]])
    assert classify_domain(mixed).kind is DomainKind.OTHER_REAL


# --- witness matrices --------------------------------------------------------------

def test_witness_entries_n3_k2():
    c = witness_matrix(3, (0, 1), 1).entries
    assert c[0, 1] == pytest.approx(-1.0)
    assert c[0, 2] == pytest.approx(2.0)
    assert c[1, 3] == pytest.approx(2 / math.sqrt(3))
    assert c[0, 3] == 0 and c[1, 2] == 0 and c[2, 3] == 0


def test_witness_classification_n3_k2():
    cls = classify_domain(witness_matrix(3, (0, 1), 1))
    assert cls.kind is DomainKind.ON_HYPERSURFACE
    assert set(cls.hypersurfaces) == {HypersurfaceId((0, 1), 1), HypersurfaceId((0, 1, 2, 3))}


@pytest.mark.parametrize("n", [3, 4, 5])
def test_witness_on_exactly_two_components(n):
    for k in range(2, n):
        for sigma in ((1, -1) if k == 2 else (1,)):
            for idx in itertools.combinations(range(n + 1), k):
                c = witness_matrix(n, idx, sigma)
                target = HypersurfaceId(idx, sigma) if k == 2 else HypersurfaceId(idx)
                zero = {comp for comp in components(n) if abs(comp.value(c)) <= 1e-10}
                assert zero == {target, HypersurfaceId(tuple(range(n + 1)))}
                small = [comp for comp in components(n)
                         if comp not in zero and abs(comp.value(c)) < 1e-6]
                assert not small


def test_witness_argument_errors():
    with pytest.raises(ArgumentError):
        witness_matrix(3, (0,), 1)
    with pytest.raises(ArgumentError):
        witness_matrix(3, (0, 1, 2), 1)


# --- vertices and Gram matrices ---------------------------------------------------

def test_single_point_and_simple_pair():
    assert gram_from_vertices([[1.0, 0.0]], "h").entries.tolist() == [[1.0]]
    p = np.array([[1, 0, 0, 0], [math.cosh(1), math.sinh(1), 0, 0]])
    assert gram_from_vertices(p, "hyperbolic")[0, 1] == pytest.approx(math.cosh(1))


def test_gram_from_vertices_rejects_off_surface_points():
    with pytest.raises(ArgumentError):
        gram_from_vertices([[2.0, 0.0, 0.0]], "h")
    with pytest.raises(ArgumentError):
        gram_from_vertices([[-1.0, 0.0, 0.0]], "h")


def test_identity_sphere_vertices_are_standard_basis():
    assert np.allclose(vertices_from_gram(np.eye(4), "sphere"), np.eye(4))


def test_regular_triangle_vertices():
    x = vertices_from_gram(regular_simplex_gram(2, 1.0, "h"), "h")
    assert np.allclose(x[0], [1, 0, 0])
    eta = np.array([1.0, -1, -1])
    for i, j in itertools.combinations(range(3), 2):
        assert x[i] @ (eta * x[j]) == pytest.approx(math.cosh(1), abs=1e-12)
    assert np.allclose(np.triu(x, 1), 0)


def test_vertices_domain_mismatch():
    with pytest.raises(DomainError):
        vertices_from_gram(regular_simplex_gram(2, 1.0, "h"), "sphere")


@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_round_trip_hyperbolic(n, seed):
    g = random_hyperbolic_gram(np.random.default_rng(seed), n)
    if not classify_domain(g).matches(Space.HYPERBOLIC):
        return
    back = gram_from_vertices(vertices_from_gram(g, "h"), "h").entries
    assert np.max(np.abs(back - g)) <= 1e-10 * max(1.0, np.max(np.abs(g)))


@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_round_trip_spherical(n, seed):
    g = random_spherical_gram(np.random.default_rng(seed), n)
    if not classify_domain(g).matches(Space.SPHERE):
        return
    back = gram_from_vertices(vertices_from_gram(g, "s"), "s").entries
    assert np.max(np.abs(back - g)) <= 1e-10


def test_principal_minors_cover_all_sets(rng):
    c = symmetric_unit(rng, 3)
    pm = principal_minors(c, 2)
    assert len(pm) == 11
    assert pm[(0, 1, 2, 3)] == pytest.approx(np.linalg.det(c))


def test_hyperboloid_helper_is_on_sheet():
    x = hyperboloid([0.3, -0.2])
    assert x[0] ** 2 - x[1:] @ x[1:] == pytest.approx(1.0)
