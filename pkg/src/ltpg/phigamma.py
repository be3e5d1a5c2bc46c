"""Etale (phi_q, Gamma)-modules over A((T)) given by matrices, and predicates on them.

Convention: a semilinear operator sigma acts on coordinates by ``x -> M_sigma sigma(x)``,
so ``M_{sigma tau} = M_sigma sigma(M_tau)``.  Modules over the ring of an
unramified extension K/F of degree r are stored after restriction of scalars
to A((T)) (rank multiplied by r).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .base_rings import (
    LocalFieldSpec,
    WittCoeff,
    coeff_from_json,
    coeff_to_json,
    field_from_json,
    norm_fibre,
    structure_map,
)
from .laurent import EXACT, PrecisionError, TruncatedSeries
from .lubin_tate import (
    FrobeniusSeries,
    build_endomorphism,
    delta_roots,
    frobenius_from_json,
    gamma_generators,
    rewrite_invariant,
)
from .rings import FiniteAlgebra, NotAUnit, RingError
from .seriesmat import SeriesMatrix, SubstitutionOperator, determinant

DEFAULT_PRECISION = 40


def default_precision() -> int:
    env = os.environ.get("LTPG_PREC")
    return int(env) if env else DEFAULT_PRECISION


class PhiGammaBase:
    """The ring A((T)) with its operators phi_q and gamma_1..gamma_n."""

    def __init__(self, field: LocalFieldSpec, A: FiniteAlgebra, frobenius="std",
                 precision=None, chis=None, variable="T_K"):
        if variable not in ("T", "T_K"):
            raise RingError(f"unknown variable {variable!r} (expected T or T_K)")
        self.variable = variable
        self.field = field
        self.A = A
        self.frobenius = frobenius if isinstance(frobenius, FrobeniusSeries) else \
            FrobeniusSeries(field, frobenius)
        self.N = int(precision or default_precision())
        self.chis = list(chis) if chis is not None else gamma_generators(field)
        self.n = len(self.chis)
        self._to_A = structure_map(field, A)
        self._gamma_ops = {}

    def __eq__(self, other):
        return (isinstance(other, PhiGammaBase) and self.field == other.field and self.A == other.A
                and self.frobenius.key == other.frobenius.key and self.chis == other.chis
                and self.variable == other.variable)

    def __hash__(self):
        return hash((hash(self.field), self.A.name, self.frobenius.key, self.variable))

    def with_precision(self, N):
        return PhiGammaBase(self.field, self.A, self.frobenius, N, self.chis, self.variable)

    def over(self, B: FiniteAlgebra):
        return PhiGammaBase(self.field, B, self.frobenius, self.N, self.chis, self.variable)

    @property
    def q(self):
        return self.field.q

    @property
    def endo_precision(self):
        return 3 * self.N + 16

    def to_A(self, x):
        return self._to_A(x)

    def series(self, s: TruncatedSeries) -> TruncatedSeries:
        """Push an O_F-series into A((T))."""
        return s.map_coefficients(self._to_A, self.A)

    @property
    def delta_order(self):
        return self.field.q - 1 if self.variable == "T_K" else 1

    @cached_property
    def _norm_parameter(self):
        """T_K over O_F, to the T-precision needed for X-precision endo_precision."""
        NT = self.delta_order * (self.endo_precision + 2)
        R = self.field.ring
        TK = TruncatedSeries.one(R, EXACT)
        for z in delta_roots(self.field):
            TK = TK * build_endomorphism(self.frobenius, z, NT).series
        return TK.truncate(NT)

    def _invariant(self, s: TruncatedSeries) -> TruncatedSeries:
        """The series g with T_K(s(T)) = g(T_K), pushed into A."""
        TK = self._norm_parameter
        f = TK.substitute(s).truncate(TK.precision)
        g, _ = rewrite_invariant(f, TK)
        return self.series(g.truncate(self.endo_precision))

    @cached_property
    def phi_series(self):
        if self.variable == "T_K":
            return self._invariant(self.frobenius.series(self.field.ring, EXACT))
        return self.frobenius.series(self.A, EXACT)

    @cached_property
    def phi_op(self):
        return SubstitutionOperator(self.phi_series, "phi")

    def chi_power(self, i, m):
        """chi(gamma_i)^m as a portable O_F value (evaluated in whatever ring it is lifted to)."""
        return self.chis[i] if m == 1 else {"pow": [self.chis[i], int(m)]}

    def gamma_series(self, i, m=1):
        if self.variable == "T_K":
            NT = self._norm_parameter.precision
            return self._invariant(build_endomorphism(self.frobenius, self.chi_power(i, m), NT).series)
        return self.series(build_endomorphism(self.frobenius, self.chi_power(i, m), self.endo_precision).series)

    def gamma_op(self, i, m=1):
        key = (i, m)
        if key not in self._gamma_ops:
            self._gamma_ops[key] = SubstitutionOperator(self.gamma_series(i, m), f"gamma_{i + 1}^{m}")
        return self._gamma_ops[key]

    def T(self, power=1):
        return TruncatedSeries.T(self.A, EXACT, power)

    def const(self, c):
        return TruncatedSeries.constant(self.A, np.asarray(c) if not np.isscalar(c) else self.A.from_int(c), EXACT)

    def to_json(self):
        return {"field": self.field.to_json(), "coeff": coeff_to_json(self.A),
                "frobenius": self.frobenius.to_json(), "chis": self.chis, "variable": self.variable}


@dataclass
class PhiGammaModule:
    base: PhiGammaBase
    P: SeriesMatrix
    G: list
    label: str = ""
    meta: dict = dc_field(default_factory=dict)

    @property
    def rank(self):
        return self.P.shape[0]

    @property
    def n(self):
        return len(self.G)

    @property
    def A(self):
        return self.base.A

    def ops(self):
        """(matrix, substitution operator) for phi, gamma_1, ..., gamma_n."""
        out = [(self.P, self.base.phi_op)]
        out += [(G, self.base.gamma_op(i)) for i, G in enumerate(self.G)]
        return out

    def apply(self, idx, x: SeriesMatrix, target=None) -> SeriesMatrix:
        """Operator idx (0 = phi, i = gamma_i) applied to coordinate column(s) x."""
        M, op = self.ops()[idx]
        return M @ op.apply(x, target)

    def truncate(self, N):
        return PhiGammaModule(self.base, self.P.truncate(N), [G.truncate(N) for G in self.G],
                              self.label, dict(self.meta))

    def to_json(self):
        d = {"schema": "ltpg/1", "rank": self.rank, "phi": self.P.to_json(),
             "gammas": [G.to_json() for G in self.G], "precision": self.base.N}
        d.update(self.base.to_json())
        if self.label:
            d["label"] = self.label
        return d


def module_from_json(d: dict, precision=None) -> PhiGammaModule:
    field = field_from_json(d["field"])
    A = coeff_from_json(field, d["coeff"])
    base = PhiGammaBase(field, A, frobenius_from_json(field, d.get("frobenius", "std")),
                        precision or d.get("precision"), d.get("chis"), d.get("variable", "T_K"))
    rank = int(d["rank"])

    def mat(rows):
        if len(rows) != rank or any(len(r) != rank for r in rows):
            raise RingError(f"matrix is not {rank} x {rank}")
        return SeriesMatrix.from_entries(A, [[TruncatedSeries.from_json(A, s) for s in r] for r in rows])

    P = mat(d["phi"])
    G = [mat(g) for g in d.get("gammas", [])]
    if len(G) != base.n:
        raise RingError(f"expected {base.n} gamma matrices, got {len(G)}")
    return PhiGammaModule(base, P, G, d.get("label", ""))


# ------------------------------------------------------------------ predicates
def check_module(M: PhiGammaModule) -> dict:
    """Etale and commutation verdicts; failures name the first disagreeing entry."""
    report = {"etale": True, "commuting": True, "failures": []}
    try:
        det = determinant(M.P)
        if not det.is_unit():
            report["etale"] = False
            report["failures"].append({"check": "etale", "detail": "determinant is not a unit"})
    except PrecisionError as exc:
        report["etale"] = False
        report["failures"].append({"check": "etale", "detail": str(exc)})
    ops = M.ops()
    for i in range(1, len(ops)):
        for j in ([0] + list(range(1, i))):
            Mi, opi = ops[i]
            Mj, opj = ops[j]
            N0 = M.base.N
            lhs = Mj @ opj.apply(Mi, N0)
            rhs = Mi @ opi.apply(Mj, N0)
            N = min(lhs.precision, rhs.precision)
            diff = lhs.truncate(N).first_difference(rhs.truncate(N))
            if diff is not None:
                report["commuting"] = False
                names = ["phi"] + [f"gamma_{t}" for t in range(1, len(ops))]
                report["failures"].append({
                    "check": "commuting", "pair": [names[j], names[i]],
                    "entry": [diff[0], diff[1]], "exponent": diff[2], "precision": N,
                })
    report["ok"] = report["etale"] and report["commuting"]
    return report


def gauge(M: PhiGammaModule, Y: SeriesMatrix, Yinv: SeriesMatrix = None) -> PhiGammaModule:
    """Change of basis by Y: P' = Y^-1 P phi(Y), G' = Y^-1 G gamma(Y)."""
    Yinv = Yinv if Yinv is not None else Y.inverse()
    N = M.base.N
    P = Yinv @ M.P @ M.base.phi_op.apply(Y, N)
    G = [Yinv @ Gi @ M.base.gamma_op(i).apply(Y, N) for i, Gi in enumerate(M.G)]
    return PhiGammaModule(M.base, P, G, M.label, dict(M.meta))


def base_change(M: PhiGammaModule, B: FiniteAlgebra, ring_map) -> PhiGammaModule:
    """Entrywise pushforward along a coordinate ring map A -> B."""
    base = M.base.over(B)
    P = M.P.map_coefficients(ring_map, B)
    G = [Gi.map_coefficients(ring_map, B) for Gi in M.G]
    return PhiGammaModule(base, P, G, M.label, dict(M.meta))


def adjoint(M: PhiGammaModule) -> PhiGammaModule:
    """ad M = Hom(M, M) with X -> P sigma(X) P^-1, on column-major vec(X)."""
    P = M.P
    mats = []
    for Mat in [P] + list(M.G):
        inv = Mat.inverse()
        mats.append(inv.transpose().kron(Mat))
    return PhiGammaModule(M.base, mats[0], mats[1:], f"ad({M.label})" if M.label else "ad")


def tensor(M1: PhiGammaModule, M2: PhiGammaModule) -> PhiGammaModule:
    mats = [a.kron(b) for a, b in zip([M1.P] + M1.G, [M2.P] + M2.G)]
    return PhiGammaModule(M1.base, mats[0], mats[1:])


def trace_map(X: SeriesMatrix, d: int) -> TruncatedSeries:
    """Trace of the d x d matrix whose column-major vectorisation is the column X."""
    acc = None
    for i in range(d):
        e = X.entry(i * d + i, 0)
        acc = e if acc is None else acc + e
    return acc


# ------------------------------------------------------------------ constructors
def trivial_module(base: PhiGammaBase, d=1) -> PhiGammaModule:
    I = SeriesMatrix.identity(base.A, d, EXACT)
    return PhiGammaModule(base, I, [I] * base.n, "trivial")


def rank1_module(base: PhiGammaBase, b: TruncatedSeries, cs) -> PhiGammaModule:
    """Rank-1 module with phi-matrix b and gamma-matrices c_i; commutation is verified."""
    to_m = lambda s: SeriesMatrix.from_entries(base.A, [[s.truncate(base.N)]])
    M = PhiGammaModule(base, to_m(b), [to_m(c) for c in cs], "rank1")
    rep = check_module(M)
    if not rep["ok"]:
        raise RingError(f"rank-1 data does not define a module: {rep['failures']}")
    return M


def unramified_module(base: PhiGammaBase, a, r: int = 1) -> PhiGammaModule:
    """A_{K,A}(ur_a) for K/F unramified of degree r, restricted to A((T)) (rank r).

    The phi-matrix is multiplication by x composed with Frobenius on W(k_K) (x) A,
    where N(x) = a, so that the r-fold composite of phi is a.
    """
    A = base.A
    a = A.from_int(a) if np.isscalar(a) else np.asarray(a)
    if not A.is_unit(a):
        raise NotAUnit("ur_a needs a unit a")
    if r == 1:
        P = SeriesMatrix.constant(A, a[None, None], EXACT)
        M = PhiGammaModule(base, P, [SeriesMatrix.identity(A, 1, EXACT)] * base.n, "ur")
        M.meta["a"] = [int(c) for c in a]
        return M
    W = WittCoeff(base.field, A, r)
    x = norm_fibre(W, a)
    Wr = W.ring
    cols = []
    for l in range(r):
        yl = Wr.pow(Wr.y, l)
        img = Wr.mul(x, W.frobenius(yl))
        cols.append(Wr.coefficients(img))  # (r, kb)
    mat = np.stack(cols, axis=1)  # rows: y-power of image, cols: source basis
    P = SeriesMatrix.constant(A, mat, EXACT)
    M = PhiGammaModule(base, P, [SeriesMatrix.identity(A, r, EXACT)] * base.n, f"ur(r={r})")
    M.meta.update({"a": [int(c) for c in a], "r": r})
    return M


def phi_power_matrix(M: PhiGammaModule, m: int) -> SeriesMatrix:
    """Matrix of phi^m: P phi(P) ... phi^{m-1}(P)."""
    out = M.P
    cur = M.P
    for _ in range(m - 1):
        cur = M.base.phi_op.apply(cur, M.base.N)
        out = out @ cur
    return out


# ------------------------------------------------------------------ lattices, height, level
def height(Phi: SeriesMatrix, precision=None):
    """Minimal h with T^h coker(Phi) = 0 for Phi over A[[T]] (None if Phi is not invertible)."""
    if Phi.precision >= EXACT:
        Phi = Phi.truncate(precision or default_precision())
    if Phi.valuation < 0:
        raise RingError("height needs a matrix over A[[T]]")
    try:
        inv = Phi.inverse()
    except NotAUnit:
        return None
    return max(0, -inv.min_valuation())


def height_leq(Phi: SeriesMatrix, h: int) -> bool:
    ht = height(Phi)
    return ht is not None and ht <= h


def gamma_power_matrix(M: PhiGammaModule, i: int, m: int) -> SeriesMatrix:
    """Matrix of gamma_i^m, by repeated squaring G_{2k} = G_k gamma^k(G_k)."""
    base = M.base
    result = None
    power_mat, power = M.G[i], 1
    e = m
    acc_exp = 0
    while e:
        if e & 1:
            if result is None:
                result, acc_exp = power_mat, power
            else:
                # result covers gamma^acc_exp; append gamma^power block
                result = result @ base.gamma_op(i, acc_exp).apply(power_mat, base.N)
                acc_exp += power
        e >>= 1
        if e:
            power_mat = power_mat @ base.gamma_op(i, power).apply(power_mat, base.N)
            power *= 2
    return result


def continuity_level(M: PhiGammaModule, n_target: int = 1, lattice: SeriesMatrix = None, s_max=None):
    """Smallest s with (gamma_i^{p^s} - 1)(lattice) in T^n lattice for all i, or None."""
    base = M.base
    A = base.A
    if s_max is None:
        s_max = 3 * getattr(A, "a", 1) * base.q
    B = lattice if lattice is not None else SeriesMatrix.identity(A, M.rank, base.N)
    Binv = B.inverse()
    p = base.field.p
    I = SeriesMatrix.identity(A, M.rank, EXACT)
    T = base.T()
    mats = [Gi for Gi in M.G]
    for s in range(s_max + 1):
        N = p ** s
        ok = True
        for i in range(M.n):
            if s > 0:
                mats[i] = gamma_power_matrix(M, i, N)
            gN = base.gamma_op(i, N)
            H = Binv @ mats[i] @ gN.apply(B, base.N)
            diff = H - I
            if diff.precision < n_target or (not diff.truncate(n_target).is_zero()):
                ok = False
                break
            gap = gN.s - T
            if gap.precision < n_target or not gap.truncate(n_target).is_zero():
                ok = False
                break
        if ok:
            return s
    return None


def direct_sum(M1: PhiGammaModule, M2: PhiGammaModule) -> PhiGammaModule:
    from .seriesmat import block

    def diag(X, Y):
        Z12 = SeriesMatrix.zeros(X.ring, X.shape[0], Y.shape[1], EXACT)
        Z21 = SeriesMatrix.zeros(X.ring, Y.shape[0], X.shape[1], EXACT)
        return block([[X, Z12], [Z21, Y]])

    mats = [diag(a, b) for a, b in zip([M1.P] + M1.G, [M2.P] + M2.G)]
    return PhiGammaModule(M1.base, mats[0], mats[1:], f"{M1.label}+{M2.label}")


def random_unit_matrix(A: FiniteAlgebra, d: int, rng, terms: int = 4, precision=None) -> SeriesMatrix:
    """A random element of GL_d(A[[T]]) with few nonzero T-adic terms."""
    while True:
        C = A.random(rng, (d, d, terms))
        Y = SeriesMatrix(A, C, 0, precision or EXACT)
        try:
            from .base_rings import mat_inverse

            mat_inverse(A, C[:, :, 0])
            return Y
        except NotAUnit:
            continue


def random_module(base: PhiGammaBase, rng, rank: int = 1) -> PhiGammaModule:
    """A gauge transform of an unramified module (rank 1, a sum of two, or ur(r=2)) by a random Y."""
    A = base.A
    units = [u for u in A.units()]

    def pick():
        return units[int(rng.integers(len(units)))]

    if rank == 1:
        M = unramified_module(base, pick())
    elif rank == 2 and (rng.integers(2) or base.field.f != 1):
        M = direct_sum(unramified_module(base, pick()), unramified_module(base, pick()))
    elif rank == 2:
        M = unramified_module(base, pick(), r=2)
    else:
        raise RingError("random modules are generated in rank 1 or 2")
    Y = random_unit_matrix(A, rank, rng, precision=base.N)
    out = gauge(M, Y)
    out.label = f"random({M.label})"
    return out
