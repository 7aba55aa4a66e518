from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from flexvol.continuation import (ComplexPath, angle_form, continue_volume, determinant_linking,
                                  init_state, linking_number, linking_table, path_clearance,
                                  verify_theorem_key, verify_theorem_key2)
from flexvol.errors import ArgumentError, DomainError
from flexvol.gram import HypersurfaceId, Space, components, witness_matrix
from flexvol.loops import basepoint, circuit, word
from flexvol.volume import regular_simplex_gram, volume

H = Space.HYPERBOLIC
S = Space.SPHERE


@pytest.fixture(scope="module")
def n1_loops():
    b = basepoint(1, H)
    rng = np.random.default_rng(0)
    plus = circuit(HypersurfaceId((0, 1), 1), b, H, rng=rng).path
    minus = circuit(HypersurfaceId((0, 1), -1), b, H, rng=rng).path
    return b, plus, minus


@pytest.fixture(scope="module")
def h3_full_loop():
    b = basepoint(3, H)
    return b, circuit(HypersurfaceId((0, 1, 2, 3)), b, H, rng=np.random.default_rng(1)).path


def pair_linking(loop, idx):
    """Winding of D_I for |I| = 2, i.e. around both signed hyperplanes."""
    return sum(linking_number(loop, HypersurfaceId(idx, s)) for s in (1, -1))


# --- paths and clearance ------------------------------------------------------------

def test_path_validation():
    c = regular_simplex_gram(2, 1.0, H)
    with pytest.raises(ArgumentError):
        ComplexPath(())
    with pytest.raises(ArgumentError):
        ComplexPath((c, regular_simplex_gram(3, 1.0, H)))
    with pytest.raises(ArgumentError):
        ComplexPath((c, c), samples_per_segment=1)
    p = ComplexPath((c, c))
    assert p.is_closed and p.n == 2
    with pytest.raises(ArgumentError):
        p + ComplexPath((regular_simplex_gram(2, 2.0, H), c))


def test_constant_path_has_positive_clearance():
    c = basepoint(3, H)
    assert path_clearance(ComplexPath((c, c))) > 0.01


def test_clearance_through_witness_is_zero():
    c = basepoint(3, H).entries
    w = witness_matrix(3, (0, 1), 1).entries
    path = ComplexPath((c, w, c))
    assert path_clearance(path) < 1e-10


def test_clearance_grows_when_moving_away(h3_full_loop):
    _, loop = h3_full_loop
    arr = loop.arrays()
    base = arr[0].real
    further = ComplexPath(tuple(base + (a - base).real + 2j * (a - base).imag for a in arr))
    assert path_clearance(further) > path_clearance(loop)


# --- linking numbers ------------------------------------------------------------------

def test_real_loop_does_not_link():
    a = regular_simplex_gram(3, 1.0, H).entries
    b = regular_simplex_gram(3, 1.4, H).entries
    loop = ComplexPath((a, b, a))
    assert all(v == 0 for v in linking_table(loop).values())
    assert determinant_linking(loop) == 0


def test_circuit_links_once_and_twice(h3_full_loop):
    _, loop = h3_full_loop
    table = linking_table(loop)
    assert table[HypersurfaceId((0, 1, 2, 3))] == 1
    assert sum(abs(v) for v in table.values()) == 1
    assert linking_number(loop.repeated(2), HypersurfaceId((0, 1, 2, 3))) == 2
    assert linking_number(loop.reversed(), HypersurfaceId((0, 1, 2, 3))) == -1


def test_linking_requires_closed_loop():
    a = regular_simplex_gram(3, 1.0, H).entries
    b = regular_simplex_gram(3, 1.4, H).entries
    with pytest.raises(ArgumentError):
        linking_number(ComplexPath((a, b)), HypersurfaceId((0, 1, 2, 3)))


def test_linking_fails_on_the_hypersurface():
    c = basepoint(3, H).entries
    w = witness_matrix(3, (0, 1), 1).entries
    with pytest.raises(DomainError):
        linking_number(ComplexPath((c, w, c)), HypersurfaceId((0, 1, 2, 3)))


# --- initial state ------------------------------------------------------------------

@pytest.mark.parametrize("space", [H, S])
def test_principal_branch_at_basepoint(space):
    c = basepoint(3, space)
    st = init_state(c, space)
    assert all(v.real > 0 and v.imag == 0 for v in st.sqrt_branch.values())
    assert st.volume.imag == 0
    assert st.volume.real == pytest.approx(volume(c, space).value, abs=1e-13)
    assert st.branch_residual() <= 1e-14


def test_init_state_rejects_complex_and_outside():
    c = basepoint(2, H).entries.astype(complex)
    c[0, 1] = c[1, 0] = c[0, 1] + 0.1j
    with pytest.raises(DomainError):
        init_state(c, H)
    with pytest.raises(DomainError):
        init_state(np.eye(3), H)


# --- continuation -------------------------------------------------------------------

def test_real_path_matches_volume():
    a = basepoint(3, H).entries
    b = a.copy()
    b[0, 1] = b[1, 0] = 1.9
    b[2, 3] = b[3, 2] = 1.3
    end = continue_volume(init_state(a, H), ComplexPath((a, b)), H, 1e-11)
    assert abs(end.volume.imag) < 1e-12
    assert end.volume.real == pytest.approx(volume(b, H).value, abs=1e-10)
    assert end.branch_residual() <= 1e-9


def test_real_path_on_the_sphere():
    a = basepoint(3, S).entries
    b = a.copy()
    b[0, 1] = b[1, 0] = 0.2
    end = continue_volume(init_state(a, S), ComplexPath((a, b)), S, 1e-11)
    assert end.volume.real == pytest.approx(volume(b, S).value, abs=1e-10)


def test_n1_circuits(n1_loops):
    b, plus, minus = n1_loops
    v = math.acosh(b[0, 1])
    st = init_state(b, H)
    around_minus_one = continue_volume(st, plus).volume
    around_one = continue_volume(st, minus).volume
    assert around_minus_one == pytest.approx(-v + 2j * math.pi, abs=1e-12)
    assert around_one == pytest.approx(-v, abs=1e-12)


def test_n1_branch_law(n1_loops):
    b, plus, minus = n1_loops
    v = math.acosh(b[0, 1])
    for loop in (word([plus, minus]), word([minus, plus], [True, False]), plus.repeated(3),
                 word([plus, minus, plus])):
        end = continue_volume(init_state(b, H), loop).volume
        k = (end.imag / (2 * math.pi))
        assert abs(k - round(k)) < 1e-12
        sign = (-1) ** determinant_linking(loop)
        assert end.real == pytest.approx(sign * v, abs=1e-12)


def test_sqrt_flips_with_odd_linking(h3_full_loop):
    b, loop = h3_full_loop
    st = init_state(b, H)
    end = continue_volume(st, loop)
    whole = (0, 1, 2, 3)
    assert end.sqrt_branch[whole] == pytest.approx(-st.sqrt_branch[whole], abs=1e-10)
    end2 = continue_volume(st, loop.repeated(2))
    assert end2.sqrt_branch[whole] == pytest.approx(st.sqrt_branch[whole], abs=1e-10)


def test_reversal_returns_initial_state(h3_full_loop):
    b, loop = h3_full_loop
    st = init_state(b, H)
    back = continue_volume(continue_volume(st, loop), loop.reversed())
    assert abs(back.volume - st.volume) <= 2e-10
    for key in st.sqrt_branch:
        assert abs(back.sqrt_branch[key] - st.sqrt_branch[key]) <= 2e-10


def test_refinement_stability(h3_full_loop):
    b, loop = h3_full_loop
    st = init_state(b, H)
    v1 = continue_volume(st, loop, tol=1e-10).volume
    v2 = continue_volume(st, loop.refined(2), tol=1e-10).volume
    assert abs(v1 - v2) <= 1e-9


def test_angle_form_sign_law(h3_full_loop):
    b, loop = h3_full_loop
    rng = np.random.default_rng(5)
    e = np.triu(rng.normal(size=(4, 4)), 1)
    e = e + e.T
    st = init_state(b, H)
    end = continue_volume(st, loop)
    lk_h = determinant_linking(loop)
    for idx in itertools.combinations(range(4), 2):
        before = angle_form(st, idx, e)
        after = angle_form(end, idx, e)
        sign = (-1) ** (lk_h + pair_linking(loop, idx))
        assert after == pytest.approx(sign * before, abs=1e-8)


def test_continue_argument_errors():
    a = basepoint(3, H).entries
    b = regular_simplex_gram(3, 1.2, H).entries
    st = init_state(a, H)
    with pytest.raises(ArgumentError):
        continue_volume(st, ComplexPath((b, a)))
    with pytest.raises(ArgumentError):
        continue_volume(st, ComplexPath((a, b)), S)
    w = witness_matrix(3, (0, 1), 1).entries
    with pytest.raises(DomainError):
        continue_volume(st, ComplexPath((a, w)))


# --- monodromy reports --------------------------------------------------------------

def test_trivial_loop_has_no_defect():
    c = basepoint(3, H)
    rep = verify_theorem_key(ComplexPath((c, c)))
    assert rep.holds and rep.defect == 0 and rep.lk_H == 0


def test_parity_check_n1(n1_loops):
    _, plus, minus = n1_loops
    for loop in (plus, minus, word([plus, minus])):
        rep = verify_theorem_key(loop)
        assert rep.holds
        assert abs(rep.defect.real) < 1e-12


def test_parity_check_rejects_even_n_and_spheres():
    c = basepoint(2, H)
    with pytest.raises(ArgumentError):
        verify_theorem_key(ComplexPath((c, c)))
    c = basepoint(3, S)
    with pytest.raises(ArgumentError):
        verify_theorem_key(ComplexPath((c, c)), S)
    with pytest.raises(ArgumentError):
        verify_theorem_key2(ComplexPath((basepoint(3, H),) * 2), H)


def test_arccos_branches_are_real():
    b = basepoint(1, S)
    rng = np.random.default_rng(2)
    for comp in components(1):
        loop = circuit(comp, b, S, rng=rng).path
        rep = verify_theorem_key2(loop, S)
        assert rep.holds and abs(rep.v_end.imag) < 1e-12


def test_hyperbolic_plane_loop_around_full_component():
    b = basepoint(2, H)
    loop = circuit(HypersurfaceId((0, 1, 2)), b, H, rng=np.random.default_rng(3)).path
    rep = verify_theorem_key2(loop, H)
    assert rep.lk_H == 1 and rep.holds


def test_three_sphere_loop_around_a_face():
    b = basepoint(3, S)
    loop = circuit(HypersurfaceId((0, 1, 2)), b, S, rng=np.random.default_rng(4)).path
    rep = verify_theorem_key2(loop, S)
    assert rep.holds


def test_report_json(h3_full_loop):
    _, loop = h3_full_loop
    rep = verify_theorem_key(loop)
    js = rep.to_json()
    assert js["lk_H"] == 1 and js["lk"]["H{0,1,2,3}"] == 1
    assert js["holds"] is True and len(js["defect"]) == 2
