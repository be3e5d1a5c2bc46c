"""Square-zero deformations of (phi_q, Gamma)-modules: obstruction classes and lift torsors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base_rings import lift_section, reduction_map
from .herr import (
    Unsupported,
    coboundary_preimage,
    cochain_to_json,
    cohomology_with_evidence,
    herr_cohomology,
    herr_differential,
    _zero_to,
)
from .phigamma import PhiGammaModule, adjoint, base_change, check_module, continuity_level
from .rings import FiniteAlgebra, LocalRing, RingError, dual_numbers
from .seriesmat import SeriesMatrix, matrix_inverse


@dataclass
class SquareZeroExtension:
    """0 -> I -> A' -> A -> 0 with I^2 = 0, and I identified with a chain ring B_I.

    ``to_I`` sends elements of I (as A'-coordinates) to B_I, ``from_I`` goes back.
    """

    kind: str
    Ap: FiniteAlgebra
    A: LocalRing
    I_ring: LocalRing
    reduce: Callable
    section: Callable
    to_I: Callable
    from_I: Callable

    def check(self) -> dict:
        Ap = self.Ap
        basis_I = [self.from_I(e) for e in np.eye(self.I_ring.k, dtype=np.int64)]
        square_zero = all(Ap.is_zero(Ap.mul(x, y)) for x in basis_I for y in basis_I)
        # A'/I = A: reduce . section is the identity and the kernel of reduce is I
        els = self.A.elements()
        splits = bool(np.all(self.reduce(self.section(els)) % self.A.moduli == els % self.A.moduli))
        I_els = self.from_I(self.I_ring.elements())
        kernel = Ap.elements()
        kernel = kernel[~np.asarray(self.reduce(kernel)).any(axis=-1)]
        same = len(kernel) == len(I_els) and not np.asarray(self.reduce(I_els)).any()
        return {"square_zero": square_zero, "quotient": splits and same,
                "ok": square_zero and splits and same}

    def to_json(self):
        from .base_rings import coeff_to_json

        return {"kind": self.kind, "base": coeff_to_json(self.A)}


def quotient_extension(A: LocalRing) -> SquareZeroExtension:
    """O/varpi^(a+1) -> O/varpi^a with I = varpi^a O/varpi^(a+1), a copy of the residue field."""
    a = A.a
    Ap = LocalRing(A.p, A.n, A.eisenstein, a + 1)
    k = LocalRing(A.p, A.n, A.eisenstein, 1)
    for R, src in ((Ap, A), (k, A)):
        R.kind = getattr(src, "kind", "quotient")
    red = reduction_map(Ap, A)
    sec = lift_section(Ap, A)
    to_k = reduction_map(Ap, k)
    from_k = lift_section(Ap, k)
    pia = Ap.pow(Ap.pi, a)

    def to_I(x):
        x = np.asarray(x, dtype=np.int64)
        return to_k(Ap.div_pi_power(x, np.full(x.shape[:-1], a)))

    def from_I(u):
        return Ap.mul(from_k(u), pia)

    return SquareZeroExtension("quotient", Ap, A, k, red, sec, to_I, from_I)


def split_extension(A: LocalRing) -> SquareZeroExtension:
    """A[F] = A[eps]/(eps^2) for F = A."""
    Ap = dual_numbers(A)
    kb = A.k

    def red(x):
        return np.asarray(x, dtype=np.int64)[..., :kb] % A.moduli

    def sec(x):
        x = np.asarray(x, dtype=np.int64)
        return np.concatenate([x, np.zeros_like(x)], axis=-1)

    def to_I(x):
        return np.asarray(x, dtype=np.int64)[..., kb:] % A.moduli

    def from_I(u):
        u = np.asarray(u, dtype=np.int64)
        return np.concatenate([np.zeros_like(u), u], axis=-1)

    return SquareZeroExtension("split", Ap, A, A, red, sec, to_I, from_I)


def extension_from_json(A: LocalRing, d) -> SquareZeroExtension:
    kind = d.get("kind") if isinstance(d, dict) else d
    if kind == "quotient":
        return quotient_extension(A)
    if kind in ("split", "dual"):
        return split_extension(A)
    raise RingError(f"unknown extension kind {kind!r} (expected quotient or split)")


# ------------------------------------------------------------------ lifts
def _require_chain(M):
    if not isinstance(M.A, LocalRing):
        raise Unsupported("deformations are implemented over chain-ring coefficients")


def choose_lifts(M: PhiGammaModule, ext: SquareZeroExtension) -> PhiGammaModule:
    """Entrywise lift through the fixed coordinate section; commutation is not asserted."""
    _require_chain(M)
    rep = check_module(M)
    if not rep["ok"]:
        raise RingError(f"not an etale (phi, Gamma)-module: {rep['failures']}")
    L = base_change(M, ext.Ap, ext.section)
    for X in [L.P] + L.G:
        matrix_inverse(X)  # raises if a lift is not invertible
    return L


def _matrices(M):
    return [M.P] + list(M.G)


def _commutator_defect(M: PhiGammaModule, i: int, j: int, N: int) -> SeriesMatrix:
    """A_i s_i(A_j) (A_j s_j(A_i))^-1 - 1: the matrix of the commutator of the lifted operators."""
    mats = _matrices(M)
    ops = M.ops()
    left = mats[i] @ ops[i][1].apply(mats[j], N)
    right = mats[j] @ ops[j][1].apply(mats[i], N)
    C = left @ matrix_inverse(right.truncate(N))
    d = M.rank
    return (C - SeriesMatrix.identity(M.A, d)).truncate(N)


def _vec(X: SeriesMatrix) -> SeriesMatrix:
    """Column-major vectorisation, matching the adjoint module's coordinates."""
    r, c = X.shape
    co = X.coeffs.transpose(1, 0, 2, 3).reshape(r * c, 1, *X.coeffs.shape[2:])
    return SeriesMatrix(X.ring, co, X.valuation, X.precision)


def _unvec(v: SeriesMatrix, d: int) -> SeriesMatrix:
    co = v.coeffs.reshape(d, d, *v.coeffs.shape[2:]).transpose(1, 0, 2, 3)
    return SeriesMatrix(v.ring, co, v.valuation, v.precision)


def adjoint_over_I(M: PhiGammaModule, ext: SquareZeroExtension) -> PhiGammaModule:
    """ad M (x)_A I, as a module over B_I."""
    if ext.kind == "quotient":
        MB = base_change(M, ext.I_ring, reduction_map(M.A, ext.I_ring))
    else:
        MB = M
    return adjoint(MB)


def obstruction_cocycle(M: PhiGammaModule, ext: SquareZeroExtension, lifts: PhiGammaModule = None) -> dict:
    """The defect 2-cochain (index sets (i, j), i < j) in ad M (x) I."""
    L = lifts if lifts is not None else choose_lifts(M, ext)
    N = M.base.N
    out = {}
    n_ops = M.n + 1
    for i in range(n_ops):
        for j in range(i + 1, n_ops):
            C = _commutator_defect(L, i, j, N)
            if not C.map_coefficients(ext.reduce, ext.A).is_zero():
                raise RingError(f"lifts do not commute modulo I at ({i}, {j})")
            out[(i, j)] = _vec(C.map_coefficients(ext.to_I, ext.I_ring))
    return out


def obstruction_class(M: PhiGammaModule, ext: SquareZeroExtension, lifts=None, window=None) -> dict:
    """Obstruction to lifting M along A' -> A, with a vanishing verdict where decidable."""
    D = obstruction_cocycle(M, ext, lifts)
    adI = adjoint_over_I(M, ext)
    N = M.base.N
    n_ops = M.n + 1
    if n_ops > 2:
        dD = herr_differential(adI, 2, D, N)
        cocycle = _zero_to(dD, min(v.precision for v in dD.values()))
    else:
        cocycle = True  # top degree
    if not cocycle:
        raise RingError("defect tuple fails the 2-cocycle identity")
    zero = _zero_to(D, N)
    pre = None if zero else coboundary_preimage(adI, D, 2, window)
    report = {
        "cocycle": cochain_to_json(D),
        "cocycle_verified": cocycle,
        "zero_cochain": zero,
        "vanishes": bool(zero or pre is not None),
        "preimage": cochain_to_json(pre) if pre is not None else None,
        "decidable": M.n == 1 or zero or pre is not None,
    }
    if M.n == 1:
        h2 = cohomology_with_evidence(adI, [2], window, (N, 2 * N))
        report["h2_divisors"] = h2[2]["divisors"]
        report["h2_stable"] = h2[2]["stable"]
        report["h2_evidence"] = h2[2]["evidence"]
    return report


def change_lifts(L: PhiGammaModule, ext: SquareZeroExtension, X: list) -> PhiGammaModule:
    """Replace each lifted matrix A_i by (1 + X_i) A_i, X_i given over B_I (d x d)."""
    d = L.rank
    I = SeriesMatrix.identity(L.A, d)
    mats = [(I + Xi.map_coefficients(ext.from_I, L.A)) @ Ai for Xi, Ai in zip(X, _matrices(L))]
    return PhiGammaModule(L.base, mats[0], mats[1:], L.label, dict(L.meta))


# ------------------------------------------------------------------ lifts to A[F]
def lift_from_cocycle(M: PhiGammaModule, ext: SquareZeroExtension, cochain: dict) -> PhiGammaModule:
    """gamma_i~ = (1 + eps X_i) gamma_i for a 1-cocycle (X_0, ..., X_n) of ad M."""
    L = base_change(M, ext.Ap, ext.section)
    d = M.rank
    X = [_unvec(cochain[(i,)], d).truncate(M.base.N) for i in range(M.n + 1)]
    return change_lifts(L, ext, X)


def cocycle_from_lift(M: PhiGammaModule, ext: SquareZeroExtension, L: PhiGammaModule) -> dict:
    """X_i = A~_i A_i^-1 - 1 read off in I."""
    base = base_change(M, ext.Ap, ext.section)
    N = M.base.N
    out = {}
    for i, (At, A0) in enumerate(zip(_matrices(L), _matrices(base))):
        X = (At @ matrix_inverse(A0.truncate(N)) - SeriesMatrix.identity(L.A, M.rank)).truncate(N)
        if not X.map_coefficients(ext.reduce, ext.A).is_zero():
            raise RingError("not a lift of M")
        out[(i,)] = _vec(X.map_coefficients(ext.to_I, ext.I_ring))
    return out


def lift_torsor(M: PhiGammaModule, F: str = "A", window=None) -> dict:
    """H^1(ad M (x) F) against the lifts of M to A[F]; F is "A" or "0"."""
    _require_chain(M)
    if F in ("0", 0, None):
        return {"count": 1, "h1_divisors": [], "generators": [], "unique": True}
    if F != "A":
        raise Unsupported("lifts are implemented for F = A (and F = 0)")
    if M.n != 1:
        raise Unsupported("counting lifts needs full H^1 (one Gamma generator)")
    ext = split_extension(M.A)
    adM = adjoint_over_I(M, ext)
    rep1, cochains = herr_cohomology(adM, [1], window, return_cochains=True)
    h1 = rep1[1]
    A = M.A
    count = (A.p ** A.n) ** h1["length"]
    N = M.base.N
    gens = []
    for w, cochain in zip(h1["witnesses"], cochains[1]):
        L = lift_from_cocycle(M, ext, cochain)
        rep = check_module(L)
        back = cocycle_from_lift(M, ext, L)
        roundtrip = _zero_to({S: back[S] - cochain[S].truncate(N) for S in back}, N)
        cont = continuity_level(L, 1)
        gens.append({"commute": rep["commuting"], "etale": rep["etale"], "roundtrip": roundtrip,
                     "continuity_level": cont, "cocycle": w})
    evidence = cohomology_with_evidence(adM, [1], window, (N, 2 * N))[1]["evidence"]
    return {"count": count, "h1_divisors": h1["divisors"], "h1_stable": h1["stable"],
            "h1_evidence": evidence, "generators": gens, "unique": count == 1}


def conjugate_lift(L: PhiGammaModule, ext: SquareZeroExtension, Y: SeriesMatrix) -> PhiGammaModule:
    """Gauge a lift by the unit 1 + eps Y (Y a d x d matrix over B_I)."""
    from .phigamma import gauge

    d = L.rank
    U = SeriesMatrix.identity(L.A, d) + Y.map_coefficients(ext.from_I, L.A)
    Uinv = SeriesMatrix.identity(L.A, d) - Y.map_coefficients(ext.from_I, L.A)
    return gauge(L, U, Uinv)
