import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltpg.laurent import EXACT, PrecisionError, TruncatedSeries
from ltpg.rings import LocalRing
from ltpg.seriesmat import SeriesMatrix, SubstitutionOperator, matrix_inverse

R = LocalRing(3, 1, [-3, 1], 2)


def series(ints, valuation=0, precision=20):
    return TruncatedSeries.from_ints(R, ints, valuation, precision)


def test_precision_is_minimum_of_operands():
    a = series([1, 2], precision=10)
    b = series([1], precision=EXACT)
    assert (a + b).precision == 10
    assert (a * b).precision == 10


def test_shifted_precision_for_products():
    a = series([0, 1], precision=10)  # T + O(T^10)
    b = series([1], valuation=-2, precision=5)  # T^-2 + O(T^5)
    assert (a * b).precision == min(10 - 2, 5 + 1)


def test_to_json_round_trip_and_exact_marker():
    s = series([1, 0, 4], valuation=-1, precision=EXACT)
    d = s.to_json()
    assert d["precision"] == "exact"
    assert TruncatedSeries.from_json(R, d).equals(s)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=6), st.integers(-3, 3))
def test_inverse_of_units(cs, v):
    cs = [c for c in cs]
    cs[0] = cs[0] or 1
    if cs[0] % 3 == 0:
        cs[0] += 1
    s = series(cs, valuation=v, precision=15 + v)
    inv = s.invert()
    prod = s * inv
    assert prod.truncate(prod.precision).equals(TruncatedSeries.one(R, prod.precision))


def test_inverse_with_nilpotent_leading_term():
    # 3 + T is a unit in A((T)) with unit part T
    s = series([3, 1], precision=30)
    inv = s.invert()
    prod = (s * inv)
    assert prod.equals(TruncatedSeries.one(R, prod.precision))


def test_exact_inverse_needs_precision():
    s = series([1, 1], precision=EXACT)
    with pytest.raises(PrecisionError):
        s.invert()
    assert (s * s.invert(12)).equals(TruncatedSeries.one(R, 12))


def test_substitution_composes():
    f = series([0, 1, 1], precision=EXACT)  # T + T^2
    g = series([0, 2, 0, 1], precision=EXACT)  # 2T + T^3
    op = SubstitutionOperator(g)
    x = series([1, 1, 1, 1, 1], precision=12)
    lhs = op.apply_series(SubstitutionOperator(f).apply_series(x, 12), 12)
    fg = f.substitute(g).truncate(12)
    rhs = SubstitutionOperator(fg).apply_series(x, 12)
    assert lhs.truncate(10).equals(rhs.truncate(10))


def test_negative_powers_of_substitution():
    g = series([0, 2, 0, 1], precision=EXACT)
    op = SubstitutionOperator(g)
    x = series([1], valuation=-2, precision=10)
    y = op.apply_series(x, 10)
    # (2T + T^3)^-2 = T^-2 (2 + T^2)^-2
    want = (g * g).truncate(14).invert(12).truncate(10)
    assert y.truncate(min(y.precision, 10)).equals(want.truncate(min(y.precision, 10)))


def test_matrix_inverse():
    rng = np.random.default_rng(2)
    while True:
        C = R.random(rng, (2, 2, 4))
        C[:, :, 0] = np.array([[[1], [1]], [[0], [1]]])[..., 0][..., None]
        Mx = SeriesMatrix(R, C, 0, 20)
        break
    inv = matrix_inverse(Mx)
    prod = Mx @ inv
    assert prod.truncate(prod.precision).equals(SeriesMatrix.identity(R, 2, prod.precision))
