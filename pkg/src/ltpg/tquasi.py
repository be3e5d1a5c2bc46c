"""T-quasi-linear endomorphisms f(Tm) = a T f(m) + b T m, and the continuity criteria built on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .laurent import EXACT, TruncatedSeries
from .linalg import ring_matmul
from .phigamma import PhiGammaModule, continuity_level, gamma_power_matrix
from .rings import LocalRing, RingError
from .seriesmat import SeriesMatrix, SubstitutionOperator, matrix_inverse


class Operator:
    """x -> sum_t M_t sigma_t(x) + N x on coordinate columns of a module.

    At most one substitution sigma is allowed; N is the linear part.
    """

    def __init__(self, module: PhiGammaModule, name, M=None, sigma: SubstitutionOperator = None, N=None):
        self.module, self.name = module, name
        self.M, self.sigma, self.N = M, sigma, N

    def apply(self, x: SeriesMatrix, target=None) -> SeriesMatrix:
        target = target if target is not None else self.module.base.N
        out = SeriesMatrix.zeros(self.module.A, *x.shape, min(target, x.precision))
        if self.M is not None:
            out = out + self.M @ self.sigma.apply(x, target)
        if self.N is not None:
            out = out + self.N @ x
        return out.truncate(target)

    def power_apply(self, x, n, target=None):
        for _ in range(n):
            x = self.apply(x, target)
        return x


def zero_operator(M: PhiGammaModule) -> Operator:
    return Operator(M, "0")


def identity_operator(M: PhiGammaModule) -> Operator:
    return Operator(M, "1", N=SeriesMatrix.identity(M.A, M.rank))


def multiply_T(M: PhiGammaModule) -> Operator:
    return Operator(M, "T", N=SeriesMatrix.identity(M.A, M.rank).shift(1))


def gamma_minus_one(M: PhiGammaModule, i: int = 0, n: int = 1) -> Operator:
    """gamma_i^n - 1."""
    if n < 1:
        raise RingError("gamma^n - 1 is built for n >= 1")
    G = M.G[i] if n == 1 else gamma_power_matrix(M, i, n)
    return Operator(M, f"gamma_{i + 1}^{n}-1", M=G, sigma=M.base.gamma_op(i, n),
                    N=-SeriesMatrix.identity(M.A, M.rank))


def phi_minus_one(M: PhiGammaModule) -> Operator:
    return Operator(M, "phi-1", M=M.P, sigma=M.base.phi_op, N=-SeriesMatrix.identity(M.A, M.rank))


def operator_from_spec(M: PhiGammaModule, spec: str) -> Operator:
    """'0', '1', 'T', 'phi', 'gamma:i' or 'gamma:i^n' (i counted from 1)."""
    if spec == "phi":
        return phi_minus_one(M)
    if spec == "0":
        return zero_operator(M)
    if spec == "1":
        return identity_operator(M)
    if spec == "T":
        return multiply_T(M)
    if spec.startswith("gamma:"):
        body = spec.split(":", 1)[1]
        i, _, n = body.partition("^")
        if not 1 <= int(i) <= M.n:
            raise RingError(f"gamma index {i} outside 1..{M.n}")
        return gamma_minus_one(M, int(i) - 1, int(n) if n else 1)
    raise RingError(f"unknown operator {spec!r}")


# ------------------------------------------------------------------ membership helpers
def _ring(M: PhiGammaModule) -> LocalRing:
    if not isinstance(M.A, LocalRing):
        raise RingError("T-quasi-linear checks are implemented over chain-ring coefficients")
    return M.A


def in_pi_T(s: TruncatedSeries) -> bool:
    """s in (pi, T) A^+: integral with non-unit constant term."""
    if s.is_zero():
        return True
    if s.valuation < 0:
        return False
    return bool(s.ring.is_nilpotent(s.coefficient(0)))


def is_unit_plus(s: TruncatedSeries) -> bool:
    """s a unit of A^+ = A[[T]]."""
    return s.valuation == 0 and bool(s.ring.is_unit(s.coefficient(0)))


def _T_over(s: TruncatedSeries) -> TruncatedSeries:
    return s.shift(-1)


# ------------------------------------------------------------------ the witness
@dataclass
class TQuasiWitness:
    operator: str
    a: TruncatedSeries
    b: TruncatedSeries
    verified: bool
    a_unit: bool
    b_in_pi_T: bool
    refutation: object = None

    def to_json(self):
        return {"operator": self.operator, "a": self.a.to_json(), "b": self.b.to_json(),
                "verified": self.verified, "a_unit": self.a_unit, "b_in_pi_T": self.b_in_pi_T,
                "refutation": self.refutation}

    @property
    def ok(self):
        return self.verified and self.a_unit and self.b_in_pi_T


def _scalar_of(N: SeriesMatrix):
    """c if N = c * I, else None."""
    d = N.shape[0]
    c = N.entry(0, 0)
    for i in range(d):
        for j in range(d):
            e = N.entry(i, j)
            want = c if i == j else TruncatedSeries.zero(N.ring, N.precision)
            if not (e - want).is_zero():
                return None
    return c


def _sample(M: PhiGammaModule, rng=None, count=2):
    """Basis columns, shifted basis columns and a few random integral columns."""
    A, d = M.A, M.rank
    N = M.base.N
    cols = []
    for i in range(d):
        for shift in (0, 1, 3):
            co = np.zeros((d, 1, 1, A.k), dtype=np.int64)
            co[i, 0, 0] = A.one()
            cols.append(SeriesMatrix(A, co, shift, EXACT))
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(count):
        cols.append(SeriesMatrix(A, A.random(rng, (d, 1, 6)), 0, N))
    return cols


def certify_tquasi(f: Operator, rng=None, a=None, b=None) -> TQuasiWitness:
    """Extract (a, b) from the shape of f, or test a supplied pair; a failing sample is returned."""
    M = f.module
    _ring(M)
    A = M.A
    N = M.base.N
    one = TruncatedSeries.one(A, EXACT)
    zero = TruncatedSeries.zero(A, EXACT)
    if a is not None or b is not None:
        a = a if a is not None else one
        b = b if b is not None else zero
    elif f.M is None:
        a, b = one, zero
    else:
        c = _scalar_of(f.N) if f.N is not None else zero
        if c is None:
            return TQuasiWitness(f.name, one, zero, False, True, True,
                                 "linear part is not scalar: no witness of this shape")
        sT = f.sigma.s.truncate(N + 1)
        a = _T_over(sT)
        b = (c * _T_over(TruncatedSeries.T(A, EXACT) - sT)).truncate(N)
    refutation = None
    for x in _sample(M, rng):
        Tx = x.shift(1)
        lhs = f.apply(Tx, N)
        rhs = (f.apply(x, N).shift(1) @ _as_scalar(a)) + (x.shift(1) @ _as_scalar(b))
        diff = (lhs - rhs).truncate(min(lhs.precision, rhs.precision, N))
        if not diff.is_zero():
            i, j, e = diff.first_difference(SeriesMatrix.zeros(A, *diff.shape, diff.precision))
            refutation = {"row": int(i), "exponent": int(e), "vector": x.to_json()}
            break
    return TQuasiWitness(f.name, a.truncate(N), b.truncate(N), refutation is None, is_unit_plus(a),
                         in_pi_T(b.truncate(N)), refutation)


def _as_scalar(s: TruncatedSeries) -> SeriesMatrix:
    return SeriesMatrix(s.ring, s.coeffs[None, None], s.valuation, s.precision)


def power_formula_check(f: Operator, ns, witness: TQuasiWitness = None) -> dict:
    """Check f(T^n m) = a^n T^n f(m) + b_n T^n m with b_n in (pi, T) A^+."""
    w = witness or certify_tquasi(f)
    M = f.module
    A = M.A
    N = M.base.N
    a, b = w.a, w.b
    a_inv = a.invert(N) if a.precision >= EXACT else a.invert()
    out = {}
    for n in sorted(set(int(n) for n in ns)):
        bn = TruncatedSeries.zero(A, EXACT)
        if n > 0:
            for _ in range(n):
                bn = (a * bn + b).truncate(N)
        elif n < 0:
            for _ in range(-n):
                bn = ((bn - b) * a_inv).truncate(N)
        an = a ** n if n >= 0 else a_inv ** (-n)
        ok = True
        for x in _sample(M, count=1):
            lhs = f.apply(x.shift(n), N)
            rhs = (f.apply(x, N).shift(n) @ _as_scalar(an)) + (x.shift(n) @ _as_scalar(bn))
            prec = min(lhs.precision, rhs.precision, N) - max(0, -n)
            if not (lhs - rhs).truncate(prec).is_zero():
                ok = False
                break
        out[n] = {"b_n": bn.to_json(), "identity": ok, "b_n_in_pi_T": in_pi_T(bn)}
    return out


# ------------------------------------------------------------------ topological nilpotence
def _lattice(M, lattice):
    B = lattice if lattice is not None else SeriesMatrix.identity(M.A, M.rank)
    return B, matrix_inverse(B if B.precision < EXACT or B.coeffs.shape[2] == 1 else B.truncate(M.base.N))


def _reduction_matrix(f: Operator, B, Binv):
    """Matrix of f on 𝔐/(pi, T)𝔐 (over the residue field, as A-coordinates mod varpi)."""
    M = f.module
    A = M.A
    N = M.base.N
    img = Binv @ f.apply(B, N)
    if not img.is_zero() and img.valuation < 0:
        return None  # f does not preserve the lattice
    const = img.dense(0, 1)[:, :, 0]
    k = LocalRing(A.p, A.n, A.eisenstein, 1)
    from .base_rings import reduction_map

    return k, reduction_map(A, k)(const)


def is_topologically_nilpotent(f: Operator, lattice: SeriesMatrix = None, m_target: int = 1, bound=None) -> dict:
    """Residual nilpotence decided exactly through f mod (pi, T); then a witness for f^n(𝔐) in T^m 𝔐."""
    M = f.module
    A = _ring(M)
    N = M.base.N
    bound = bound or 8 * A.a * M.base.q
    B, Binv = _lattice(M, lattice)
    red = _reduction_matrix(f, B, Binv)
    if red is None:
        return {"preserves_lattice": False, "residual_nilpotence": None, "verdict": "inconclusive"}
    k, F = red
    d = M.rank
    P = F.copy()
    n2 = None
    for n in range(1, d + 1):
        if not P.any():
            n2 = n
            break
        P = ring_matmul(k, P, F)
    if n2 is None:
        return {"preserves_lattice": True, "residual_nilpotence": None, "verdict": "refuted",
                "reason": "f mod (pi, T) is not nilpotent on the reduction of the lattice"}
    # f^n(T^j e_i) in T^m 𝔐 for j < m suffices, f preserving every T^j 𝔐
    cols = []
    for j in range(m_target):
        cols.append(B.shift(j))
    n3 = None
    imgs = cols
    for n in range(1, bound + 1):
        imgs = [f.apply(x, N) for x in imgs]
        ok = True
        for x in imgs:
            y = (Binv @ x)
            if y.precision < m_target:
                raise RingError("precision exhausted while iterating f")
            if not y.truncate(m_target).is_zero():
                ok = False
                break
        if ok:
            n3 = n
            break
    return {"preserves_lattice": True, "residual_nilpotence": n2, "T_power": {"m": m_target, "n": n3},
            "verdict": "holds" if n3 is not None else "inconclusive"}


def binomial_congruence(M: PhiGammaModule, i: int, s: int) -> bool:
    """(gamma^(p^s) - 1) x = (gamma - 1)^(p^s) x mod p on a spanning sample."""
    A = _ring(M)
    p = M.base.field.p
    N = M.base.N
    f1 = gamma_minus_one(M, i, 1)
    fs = gamma_minus_one(M, i, p ** s)
    e = min(M.base.field.e, A.a)
    for x in _sample(M, count=1):
        diff = fs.apply(x, N) - f1.power_apply(x, p ** s, N)
        if diff.is_zero():
            continue
        vals = A.valuation(diff.coeffs)
        if np.any(vals < e):
            return False
    return True


def equivalence_suite(M: PhiGammaModule, lattice: SeriesMatrix = None, m_target: int = 2) -> dict:
    """Witnesses for level s => residual nilpotence within p^s steps => f^n(𝔐) in T^m 𝔐, per generator gamma_i."""
    p = M.base.field.p
    report = {}
    s = continuity_level(M, 1, lattice)
    report["level"] = {"s": s}
    if s is None:
        report["verdict"] = "inconclusive"
        return report
    per = []
    for i in range(M.n):
        f = gamma_minus_one(M, i)
        cong = binomial_congruence(M, i, s)
        nil = is_topologically_nilpotent(f, lattice, m_target)
        per.append({"gamma": i + 1, "binomial_congruence": cong,
                    "residual_nilpotence": nil.get("residual_nilpotence"),
                    "residual_bound": p ** s,
                    "T_power": nil.get("T_power"), "verdict": nil["verdict"]})
    report["generators"] = per
    report["verdict"] = "holds" if all(
        g["binomial_congruence"] and g["residual_nilpotence"] is not None
        and g["residual_nilpotence"] <= max(1, p ** s)
        and g["verdict"] == "holds" for g in per) else "inconclusive"
    return report
