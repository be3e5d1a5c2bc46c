import numpy as np
import pytest

from ltpg.base_rings import make_field
from ltpg.laurent import EXACT, TruncatedSeries
from ltpg.lubin_tate import (FrobeniusSeries, build_endomorphism, build_formal_group,
                             delta_norm_parameter, gamma_generators)
from ltpg.rings import RingError


@pytest.fixture(scope="module")
def Q3():
    return make_field(3, precision=8)


def test_multiplicative_group_law(Q3):
    G = build_formal_group(FrobeniusSeries(Q3, "mult"), 20)
    coeffs = {k: [int(c) for c in v] for k, v in G.as_dict().items()}
    assert coeffs == {(1, 0): [1], (0, 1): [1], (1, 1): [1]}


@pytest.mark.parametrize("kind", ["std", "mult"])
def test_group_law_invariants(Q3, kind):
    assert build_formal_group(FrobeniusSeries(Q3, kind), 20).check()["ok"]


def test_group_law_over_unramified_quadratic():
    F = make_field(3, f=2, precision=4)
    assert build_formal_group(FrobeniusSeries(F, "std"), 12).check()["ok"]


def test_frobenius_series_is_validated(Q3):
    with pytest.raises(RingError):
        FrobeniusSeries(Q3, "custom", {"1": 3, "2": 1})  # not T^q mod pi
    with pytest.raises(RingError):
        FrobeniusSeries(make_field(3, f=2), "mult")


def test_endomorphism_of_pi_is_phi(Q3):
    phi = FrobeniusSeries(Q3, "std")
    e = build_endomorphism(phi, "pi", 30).series
    assert e.equals(phi.series(Q3.ring, EXACT).truncate(30))


def test_endomorphism_of_minus_one_mult(Q3):
    phi = FrobeniusSeries(Q3, "mult")
    R = Q3.ring
    e = build_endomorphism(phi, -1, 25).series
    one_plus_T = TruncatedSeries.from_dict(R, {0: R.one(), 1: R.one()}, EXACT)
    want = one_plus_T.invert(25) - TruncatedSeries.one(R, EXACT)
    assert e.equals(want.truncate(25))


def test_sum_and_product_laws(Q3):
    rng = np.random.default_rng(5)
    phi = FrobeniusSeries(Q3, "std")
    N = 20
    G = build_formal_group(phi, N)
    for _ in range(4):
        a, b = (int(x) for x in rng.integers(1, 500, size=2))
        ea, eb = build_endomorphism(phi, a, N).series, build_endomorphism(phi, b, N).series
        assert G.evaluate(ea, eb).truncate(N).equals(build_endomorphism(phi, a + b, N).series)
        assert ea.substitute(eb).truncate(N).equals(build_endomorphism(phi, a * b, N).series)


def test_symbolic_values_are_lifted_before_reduction(Q3):
    # [a] mod T^N depends on a beyond p^c: -1 and its residue 3^8 - 1 differ
    phi = FrobeniusSeries(Q3, "mult")
    minus = build_endomorphism(phi, -1, 40).series
    residue = build_endomorphism(phi, 3 ** 8 - 1, 40).series
    teich = build_endomorphism(phi, {"teich": 2, "q": 3}, 40).series
    assert teich.equals(minus)
    assert not residue.equals(minus)


def test_norm_parameter_mult(Q3):
    R = Q3.ring
    rep = delta_norm_parameter(FrobeniusSeries(Q3, "mult"), 40, gammas=[4])
    T = TruncatedSeries.T(R, EXACT)
    one_plus_T = TruncatedSeries.from_dict(R, {0: R.one(), 1: R.one()}, EXACT)
    want = -(T * T) * one_plus_T.invert(42)
    assert rep["T_K"].truncate(40).equals(want.truncate(40))
    assert rep["valuation_ok"]
    assert all(c["integral"] for c in rep["certificates"].values())


def test_gamma_generators_shape():
    assert gamma_generators(make_field(3)) == [[[1], [1]]]
    assert len(gamma_generators(make_field(3, f=2))) == 2
    with pytest.raises(RingError):
        gamma_generators(make_field(2))
