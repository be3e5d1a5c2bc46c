import numpy as np
import pytest

from ltpg.base_rings import coeff_finite_field, coeff_quotient, make_field
from ltpg.laurent import EXACT, TruncatedSeries
from ltpg.phigamma import PhiGammaBase, random_module, rank1_module, trivial_module
from ltpg.rings import RingError
from ltpg.tquasi import (binomial_congruence, certify_tquasi, equivalence_suite, gamma_minus_one,
                         identity_operator, in_pi_T, is_topologically_nilpotent, multiply_T,
                         operator_from_spec, phi_minus_one, power_formula_check)


@pytest.fixture(scope="module")
def Q3():
    return make_field(3)


def base(F, a, N=30):
    A = coeff_finite_field(F) if a == 1 else coeff_quotient(F, a)
    return PhiGammaBase(F, A, "std", N)


def twisted(b, phi, gamma):
    A = b.A
    const = lambda v: TruncatedSeries.constant(A, A.from_int(v), EXACT)
    return rank1_module(b, const(phi), [const(gamma)])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gamma_powers_are_tquasi_linear(Q3, n):
    rng = np.random.default_rng(n)
    M = random_module(base(Q3, 2), rng, 2)
    w = certify_tquasi(gamma_minus_one(M, 0, n), rng)
    assert w.ok and w.refutation is None


def test_power_formula_negative_and_positive(Q3):
    rng = np.random.default_rng(9)
    M = random_module(base(Q3, 2), rng, 1)
    rep = power_formula_check(gamma_minus_one(M), range(-3, 4))
    assert sorted(rep) == list(range(-3, 4))
    assert all(r["identity"] and r["b_n_in_pi_T"] for r in rep.values())


def test_phi_minus_one_fails_unit_condition(Q3):
    w = certify_tquasi(phi_minus_one(trivial_module(base(Q3, 1))))
    assert w.verified and not w.a_unit and not w.ok


def test_wrong_witness_is_refuted(Q3):
    M = random_module(base(Q3, 2), np.random.default_rng(2), 1)
    A = M.A
    one = TruncatedSeries.one(A, EXACT)
    w = certify_tquasi(gamma_minus_one(M), a=one, b=TruncatedSeries.zero(A, EXACT))
    assert not w.verified
    assert {"row", "exponent", "vector"} <= set(w.refutation)


def test_in_pi_T():
    A = coeff_quotient(make_field(3), 2)
    assert in_pi_T(TruncatedSeries.from_ints(A, [3, 5], 0, 10))
    assert not in_pi_T(TruncatedSeries.from_ints(A, [1, 5], 0, 10))
    assert not in_pi_T(TruncatedSeries.from_ints(A, [0, 1], -1, 10))


def test_identity_is_not_nilpotent(Q3):
    rep = is_topologically_nilpotent(identity_operator(trivial_module(base(Q3, 1))))
    assert rep["verdict"] == "refuted"


def test_multiplication_by_T(Q3):
    rep = is_topologically_nilpotent(multiply_T(trivial_module(base(Q3, 2))), m_target=3)
    assert rep["verdict"] == "holds" and rep["T_power"]["n"] == 3


def test_twisted_gamma_level_one(Q3):
    M = twisted(base(Q3, 2), 2, 4)
    rep = equivalence_suite(M)
    assert rep["level"]["s"] == 1
    g = rep["generators"][0]
    assert g["binomial_congruence"] and g["residual_nilpotence"] <= 3
    assert rep["verdict"] == "holds"


def test_binomial_congruence_random(Q3):
    M = random_module(base(Q3, 2), np.random.default_rng(11), 1)
    assert binomial_congruence(M, 0, 1)


def test_operator_specs(Q3):
    M = trivial_module(base(Q3, 1))
    assert operator_from_spec(M, "gamma:1^3").name == gamma_minus_one(M, 0, 3).name
    for bad in ("psi", "gamma:0", "gamma:2"):
        with pytest.raises(RingError):
            operator_from_spec(M, bad)
