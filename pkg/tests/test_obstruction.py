import numpy as np
import pytest

from ltpg.base_rings import coeff_finite_field, coeff_quotient, make_field
from ltpg.herr import Unsupported, herr_differential
from ltpg.obstruction import (_vec, adjoint_over_I, change_lifts, choose_lifts, conjugate_lift,
                              extension_from_json, lift_torsor, obstruction_class, obstruction_cocycle,
                              quotient_extension, split_extension)
from ltpg.phigamma import PhiGammaBase, random_module, trivial_module, unramified_module
from ltpg.seriesmat import SeriesMatrix


@pytest.fixture(scope="module")
def Q3():
    return make_field(3)


def base(F, a, N=30):
    A = coeff_finite_field(F) if a == 1 else coeff_quotient(F, a)
    return PhiGammaBase(F, A, "std", N)


def zero(cochain, N):
    return all(v.truncate(N).is_zero() for v in cochain.values())


@pytest.mark.parametrize("make", [quotient_extension, split_extension])
def test_extensions_are_square_zero(Q3, make):
    for a in (1, 2):
        A = coeff_finite_field(Q3) if a == 1 else coeff_quotient(Q3, a)
        assert make(A).check()["ok"]


def test_extension_json(Q3):
    A = coeff_finite_field(Q3)
    ext = extension_from_json(A, {"kind": "split"})
    assert ext.kind == "split" and ext.to_json()["kind"] == "split"


def test_canonical_lifts_have_zero_defect(Q3):
    M = unramified_module(base(Q3, 1), 2)
    for ext in (quotient_extension(M.A), split_extension(M.A)):
        rep = obstruction_class(M, ext)
        assert rep["zero_cochain"] and rep["vanishes"] and rep["decidable"]


@pytest.mark.parametrize("seed", range(3))
def test_changing_lifts_shifts_by_coboundary(Q3, seed):
    rng = np.random.default_rng(seed)
    M = random_module(base(Q3, 2), rng, 1 + seed % 2)
    ext = quotient_extension(M.A) if seed % 2 else split_extension(M.A)
    B, d, N = ext.I_ring, M.rank, M.base.N
    X = [SeriesMatrix(B, B.random(rng, (d, d, 4)), 0, N) for _ in range(2)]
    L = choose_lifts(M, ext)
    D = obstruction_cocycle(M, ext, L)
    D2 = obstruction_cocycle(M, ext, change_lifts(L, ext, X))
    dX = herr_differential(adjoint_over_I(M, ext), 1, {(i,): _vec(Xi) for i, Xi in enumerate(X)}, N)
    diff = {S: D2[S] - D[S] - dX[S] for S in D}
    assert zero(diff, min(v.precision for v in diff.values()))


def test_perturbed_lift_still_unobstructed(Q3):
    # any defect in top degree is a coboundary when H^2 vanishes
    rng = np.random.default_rng(4)
    M = unramified_module(base(Q3, 1), 2)
    ext = split_extension(M.A)
    B = ext.I_ring
    X = [SeriesMatrix(B, B.random(rng, (1, 1, 4)), 0, 30) for _ in range(2)]
    rep = obstruction_class(M, ext, change_lifts(choose_lifts(M, ext), ext, X))
    assert rep["h2_divisors"] == [] and rep["vanishes"]


def test_trivial_lift_count(Q3):
    tors = lift_torsor(trivial_module(base(Q3, 1, 40)), "A")
    assert tors["count"] == 9 and tors["h1_divisors"] == [0, 0]
    assert all(g["commute"] and g["etale"] and g["roundtrip"] for g in tors["generators"])


def test_zero_coefficients_give_unique_lift(Q3):
    assert lift_torsor(trivial_module(base(Q3, 1)), "0")["unique"]
    with pytest.raises(Unsupported):
        lift_torsor(trivial_module(base(Q3, 1)), "B")


def test_conjugate_lift_keeps_commutation(Q3):
    rng = np.random.default_rng(5)
    M = unramified_module(base(Q3, 1), 2)
    ext = split_extension(M.A)
    B = ext.I_ring
    Y = SeriesMatrix(B, B.random(rng, (1, 1, 3)), 0, 30)
    L = conjugate_lift(choose_lifts(M, ext), ext, Y)
    assert obstruction_class(M, ext, L)["vanishes"]
