import numpy as np
import pytest

from ltpg.base_rings import coeff_finite_field, coeff_quotient, make_field
from ltpg.laurent import EXACT, TruncatedSeries
from ltpg.phigamma import (PhiGammaBase, adjoint, check_module, continuity_level, gauge, height,
                           module_from_json, random_module, rank1_module, trivial_module,
                           unramified_module)
from ltpg.rings import RingError
from ltpg.seriesmat import SeriesMatrix


@pytest.fixture(scope="module")
def Q3():
    return make_field(3)


@pytest.fixture(scope="module")
def base9(Q3):
    return PhiGammaBase(Q3, coeff_quotient(Q3, 2), "std", 30)


def test_operators_commute_on_base(base9):
    # phi and gamma commute as substitutions: phi(gamma(T)) = gamma(phi(T))
    x = TruncatedSeries.from_ints(base9.A, [1, 2, 3, 4], -1, 20)
    a = base9.phi_op.apply_series(base9.gamma_op(0).apply_series(x, 20), 20)
    b = base9.gamma_op(0).apply_series(base9.phi_op.apply_series(x, 20), 20)
    N = min(a.precision, b.precision)
    assert a.truncate(N).equals(b.truncate(N))


def test_variable_choice_is_validated(Q3):
    with pytest.raises(RingError):
        PhiGammaBase(Q3, coeff_finite_field(Q3), "std", 20, None, "X")


def test_unramified_modules_check(base9):
    for M in (unramified_module(base9, 2), unramified_module(base9, 5, r=2)):
        assert check_module(M)["ok"]


def test_phi_power_of_ur_r2_is_scalar(base9):
    from ltpg.phigamma import phi_power_matrix

    M = unramified_module(base9, 5, r=2)
    P2 = phi_power_matrix(M, 2).truncate(20)
    want = SeriesMatrix.constant(base9.A, base9.A.from_int(5)[None, None] * np.eye(2, dtype=np.int64)[..., None])
    assert P2.equals(want.truncate(20))


def test_commutation_failure_names_entry(base9):
    A = base9.A
    T = TruncatedSeries.T(A, EXACT)
    one = TruncatedSeries.one(A, EXACT)
    with pytest.raises(RingError, match="'entry': \\[0, 0\\]"):
        rank1_module(base9, T, [one])


def test_gauge_preserves_checks(base9):
    rng = np.random.default_rng(1)
    M = random_module(base9, rng, 2)
    rep = check_module(M)
    assert rep["ok"], rep


def test_height_and_level(Q3, base9):
    base3 = PhiGammaBase(Q3, coeff_finite_field(Q3), "std", 30)
    P = SeriesMatrix.identity(base3.A, 1, 30).shift(1)
    assert height(P) == 1
    assert height(SeriesMatrix.identity(base3.A, 2)) == 0
    A = base9.A
    const = lambda v: TruncatedSeries.constant(A, A.from_int(v), EXACT)
    tw = rank1_module(base9, const(2), [const(4)])
    assert continuity_level(tw, 1) == 1
    assert continuity_level(trivial_module(base9), 1) == 0


def test_json_round_trip(base9):
    rng = np.random.default_rng(3)
    M = random_module(base9, rng, 1)
    M2 = module_from_json(M.to_json())
    assert M2.P.equals(M.P) and M2.G[0].equals(M.G[0])
    assert M2.base.variable == "T_K"


def test_adjoint_of_rank1_is_trivial(base9):
    rng = np.random.default_rng(4)
    ad = adjoint(random_module(base9, rng, 1))
    one = SeriesMatrix.identity(base9.A, 1, 30)
    N = min(ad.P.precision, 25)
    assert ad.P.truncate(N).equals(one.truncate(N))


def test_gauge_by_inverse_returns_module(base9):
    rng = np.random.default_rng(6)
    M = unramified_module(base9, 2)
    from ltpg.phigamma import random_unit_matrix

    Y = random_unit_matrix(base9.A, 1, rng, precision=30)
    back = gauge(gauge(M, Y), Y.inverse())
    N = min(back.P.precision, 25)
    assert back.P.truncate(N).equals(M.P.truncate(N))
