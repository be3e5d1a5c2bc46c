import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltpg.base_rings import (WittCoeff, coeff_finite_field, coeff_quotient, make_field, norm_fibre,
                             norm_kernel, norm_map, reduction_map, structure_map)
from ltpg.linalg import elementary_divisors, kernel_generators, ring_matmul, smith, solve
from ltpg.rings import LocalRing, NotAUnit, RingError, dual_numbers


@pytest.fixture(scope="module")
def Z9():
    return LocalRing(3, 1, [-3, 1], 2)


def test_ring_axioms_small_rings():
    for R in (LocalRing(3, 1, [-3, 1], 2), LocalRing(3, 2, [-3, 1], 1), LocalRing(5, 1, [-5, 0, 1], 3)):
        assert R.check_axioms(rng=np.random.default_rng(0))


def test_units_and_inverse(Z9):
    units = Z9.units()
    assert len(units) == 6
    for u in units:
        assert Z9.equal(Z9.mul(u, Z9.inv(u)), Z9.one())
    with pytest.raises(NotAUnit):
        Z9.inv(Z9.from_int(3))


def test_valuation_of_pi_powers():
    R = LocalRing(5, 1, [-5, 0, 1], 3)  # pi^2 = 5, a = 3
    for j in range(3):
        assert R.valuation(R.pow(R.pi, j)) == j
    assert R.is_zero(R.pow(R.pi, 3))


def test_eisenstein_is_checked():
    with pytest.raises(RingError):
        make_field(3, e=2, eisenstein=[-9, 0, 1])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=9, max_size=9))
def test_smith_reconstructs(entries):
    R = LocalRing(3, 1, [-3, 1], 2)
    M = np.array(entries, dtype=np.int64).reshape(3, 3, 1) % 9
    S = smith(R, M)
    assert np.array_equal(ring_matmul(R, ring_matmul(R, S.L, M), S.Rm) % R.moduli, S.D % R.moduli)


def test_elementary_divisors_diagonal(Z9):
    M = np.array([[3, 0], [0, 1]], dtype=np.int64)[..., None]
    assert sorted(elementary_divisors(Z9, M)) == [0, 1]


def test_kernel_and_solve(Z9):
    M = np.array([[3, 0], [0, 0]], dtype=np.int64)[..., None]
    K = kernel_generators(Z9, M)
    assert not np.any(ring_matmul(Z9, M, K) % Z9.moduli)
    assert solve(Z9, M, np.array([[1], [0]])) is None
    x = solve(Z9, M, np.array([[6], [0]]))
    assert np.array_equal(ring_matmul(Z9, M, x[:, None])[:, 0] % 9, np.array([[6], [0]]))


def test_dual_numbers_square_zero():
    B = dual_numbers(coeff_finite_field(make_field(3)))
    eps = B.y
    assert B.is_zero(B.mul(eps, eps))


def test_reduction_and_structure_maps():
    F = make_field(3)
    A, B = coeff_quotient(F, 2), coeff_finite_field(F)
    red = reduction_map(A, B)
    assert int(red(A.from_int(7))[0]) == 1
    s = structure_map(F, A)
    assert int(s(F.ring.from_int(10))[0]) == 1


def test_norm_map_exhaustive_f9():
    F = make_field(3)
    A = coeff_finite_field(F)
    W = WittCoeff(F, A, 2)
    units = W.ring.units()
    images = {tuple(int(c) for c in norm_map(W, x)) for x in units}
    assert images == {tuple(int(c) for c in u) for u in A.units()}
    kernel = {tuple(int(c) for c in x) for x in units if A.equal(norm_map(W, x), A.one())}
    assert kernel == norm_kernel(W)


def test_norm_fibre_hits_target():
    F = make_field(3)
    A = coeff_quotient(F, 2)
    W = WittCoeff(F, A, 2)
    for u in A.units():
        assert A.equal(norm_map(W, norm_fibre(W, u)), u)
