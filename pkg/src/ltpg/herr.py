"""Herr complexes of (phi_q, Gamma)-modules and their cohomology over finite chain rings.

Cohomology is reduced to finite linear algebra.  With 𝔐 the standard lattice
and V = T^m 𝔐 a phi-contracting, gamma-stable sublattice, phi - 1 is bijective
on V, so the Koszul complex of V is acyclic and H(M) = H(M/V).  The quotient is
exhausted by the finite windows W_k = T^-k 𝔐 / V; cocycles are taken in a
window of depth k, coboundaries from the deeper window that phi reaches, and
the answer is certified by comparing the run at depth k with the run at 2k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .base_rings import reduction_map
from .laurent import EXACT, PrecisionError
from .linalg import (
    elementary_divisors,
    identity,
    kernel_generators,
    mat_vec,
    module_length,
    ring_matmul,
    smith,
)
from .phigamma import PhiGammaModule, check_module
from .rings import LocalRing, RingError
from .seriesmat import SeriesMatrix


class Unsupported(RingError):
    pass


class Instability(RingError):
    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports


# ------------------------------------------------------------------ Koszul shape
def index_sets(n_ops: int, r: int):
    return list(itertools.combinations(range(n_ops), r))


def koszul_components(n_ops: int, r: int):
    """Nonzero blocks of d^r: (source set, target set, operator index, sign)."""
    out = []
    for S in index_sets(n_ops, r):
        for j in range(n_ops):
            if j in S:
                continue
            S2 = tuple(sorted(S + (j,)))
            s = sum(1 for x in S if x < j)
            out.append((S, S2, j, -1 if s % 2 else 1))
    return out


def differential_table(n_ops: int, r: int):
    """d^r as a matrix of operator names: rows are target index sets, columns source sets."""
    names = ["phi-1"] + [f"gamma_{i}-1" for i in range(1, n_ops)]
    src, dst = index_sets(n_ops, r), index_sets(n_ops, r + 1)
    table = [["0"] * len(src) for _ in dst]
    for S, S2, j, sign in koszul_components(n_ops, r):
        table[dst.index(S2)][src.index(S)] = names[j] if sign > 0 else f"-({names[j]})"
    return table


def assemble_differential(R, n_ops, r, blocks, src_dim, dst_dim):
    """Matrix of d^r over R from per-operator blocks (dst_dim x src_dim) of (op_j - 1)."""
    src, dst = index_sets(n_ops, r), index_sets(n_ops, r + 1)
    si = {S: t for t, S in enumerate(src)}
    di = {S: t for t, S in enumerate(dst)}
    D = R.zero((len(dst) * dst_dim, len(src) * src_dim))
    for S, S2, j, sign in koszul_components(n_ops, r):
        a, b = di[S2] * dst_dim, si[S] * src_dim
        blk = blocks[j] if sign > 0 else R.neg(blocks[j])
        D[a:a + dst_dim, b:b + src_dim] = blk
    return D


# ------------------------------------------------------------------ subquotients
def _span_length(R, X):
    if X.shape[1] == 0:
        return 0
    return module_length(R, elementary_divisors(R, X))


def subquotient(R: LocalRing, Z, B):
    """Structure of (span Z + span B) / span B.

    Returns (divisor exponents t, sorted; generator column indices into Z).
    A summand of exponent t is varpi^t A = O/varpi^(a - t).
    """
    N = Z.shape[0]
    a = R.a
    if B is None or B.shape[1] == 0:
        B = R.zero((N, 0))
    base = _span_length(R, B)
    lengths = []
    for j in range(a + 1):
        Zj = R.mul(Z, R.pow(R.pi, j)) if j else Z
        lengths.append(_span_length(R, np.concatenate([Zj, B], axis=1)) - base)
    lengths.append(0)
    exps = []
    for s in range(a, 0, -1):  # summands O/varpi^s
        at_least = [lengths[j] - lengths[j + 1] for j in range(a + 1)]
        count = at_least[s - 1] - (at_least[s] if s < a else 0)
        exps.extend([a - s] * count)
    exps.sort()
    gens = _generators(R, Z, B, len(exps))
    return exps, gens


def _generators(R, Z, B, count):
    """Indices of columns of Z whose classes span I / varpi I (Nakayama)."""
    if count == 0 or Z.shape[1] == 0:
        return []
    rel = np.concatenate([R.mul(Z, R.pi), B], axis=1) if R.a > 1 else B
    m = Z.shape[0]
    if rel.shape[1]:
        S = smith(R, rel)
        Y = ring_matmul(R, S.L, Z)
        t = list(S.exponents) + [R.a] * (m - len(S.exponents))
    else:
        Y, t = Z, [R.a] * m
    rows = [i for i in range(m) if t[i] >= 1]
    if not rows:
        return []
    tt = np.array([t[i] for i in rows])
    Yr = Y[rows]
    # residue of y_i / varpi^(t_i - 1)
    vals = R.div_pi_power(Yr, np.broadcast_to((tt - 1)[:, None], Yr.shape[:2]))
    k1 = LocalRing(R.p, R.n, R.eisenstein, 1)
    red = reduction_map(R, k1)
    res = red(vals)
    return _pivot_columns(k1, res)[:count]


def _pivot_columns(F, X):
    """Column indices forming a basis of the column span over the field F, in order."""
    X = X.copy() % F.moduli
    nrows, ncols = X.shape[:2]
    used = np.zeros(nrows, dtype=bool)
    piv = []
    for c in range(ncols):
        col = X[:, c]
        nz = np.flatnonzero(col.any(axis=-1) & ~used)
        if len(nz) == 0:
            continue
        r = nz[0]
        used[r] = True
        piv.append(c)
        inv = F.inv(X[r, c])
        rowv = F.mul(X[r], inv)
        X[r] = rowv
        others = np.flatnonzero(X[:, c].any(axis=-1))
        others = others[others != r]
        if len(others):
            X[others] = F.sub(X[others], F.mul(X[others, c][:, None, :], rowv[None]))
    return piv


def element_order(R, S_B, B, x):
    """Smallest s with varpi^s x in span B, with a preimage (coefficient vector)."""
    for s in range(R.a + 1):
        y = R.mul(x, R.pow(R.pi, s)) if s else x
        pre = _solve_with(R, S_B, y, B.shape[1])
        if pre is not None:
            return s, pre
    return R.a, None


def _solve_with(R, S, b, n):
    if n == 0:
        return R.zero((0,)) if R.is_zero(b) else None
    c = mat_vec(R, S.L, b)
    y = R.zero((n,))
    m = c.shape[0]
    for i in range(m):
        t = S.exponents[i] if i < len(S.exponents) else R.a
        ci = c[i]
        if R.is_zero(ci):
            continue
        if t >= R.a or R.valuation(ci) < t:
            return None
        y[i] = R.div_pi_power(ci, t)
    return mat_vec(R, S.Rm, y)


# ------------------------------------------------------------------ finite Koszul complexes
@dataclass
class FiniteCohomology:
    divisors: dict
    generators: dict = dc_field(default_factory=dict)
    orders: dict = dc_field(default_factory=dict)


def koszul_cohomology(R: LocalRing, ops, d: int) -> FiniteCohomology:
    """Koszul cohomology of commuting A-linear operators on A^d (Smith-form path)."""
    n = len(ops)
    blocks = [R.sub(np.asarray(M) % R.moduli, identity(R, d)) for M in ops]
    Ds = [assemble_differential(R, n, r, blocks, d, d) for r in range(n)]
    divs, gens = {}, {}
    for r in range(n + 1):
        dim = math.comb(n, r) * d
        if r < n:
            Z = kernel_generators(R, Ds[r])
        else:
            Z = identity(R, dim)
        B = Ds[r - 1] if r > 0 else R.zero((dim, 0))
        exps, g = subquotient(R, Z, B)
        divs[r] = exps
        gens[r] = [Z[:, i] for i in g]
    return FiniteCohomology(divs, gens)


def finite_koszul_oracle(modulus: int, ops, d: int) -> dict:
    """Brute-force Koszul cohomology of commuting integer matrices on (Z/modulus)^d.

    Every element of every term is enumerated; for each degree the group
    H = Z/B is described by |H| and the counts |H[p^j]| of elements killed by
    p^j, from which its invariant factors follow.
    """
    ops = [np.asarray(M, dtype=np.int64) % modulus for M in ops]
    n = len(ops)
    for i in range(n):
        for j in range(i + 1, n):
            if np.any((ops[i] @ ops[j] - ops[j] @ ops[i]) % modulus):
                raise RingError("operators do not commute")
    I = np.eye(d, dtype=np.int64)
    blocks = [(M - I) % modulus for M in ops]

    def dmat(r):
        src, dst = index_sets(n, r), index_sets(n, r + 1)
        si = {S: t for t, S in enumerate(src)}
        di = {S: t for t, S in enumerate(dst)}
        D = np.zeros((len(dst) * d, len(src) * d), dtype=np.int64)
        for S, S2, j, sign in koszul_components(n, r):
            D[di[S2] * d:(di[S2] + 1) * d, si[S] * d:(si[S] + 1) * d] = sign * blocks[j]
        return D % modulus

    def all_vectors(dim):
        if modulus ** dim > 2_000_000:
            raise RingError("finite module too large for enumeration")
        grids = np.indices((modulus,) * dim).reshape(dim, -1).T
        return grids.astype(np.int64)

    p = min(q for q in range(2, modulus + 1) if modulus % q == 0)
    out = {}
    for r in range(n + 1):
        dim = math.comb(n, r) * d
        X = all_vectors(dim)
        if r < n:
            img = (X @ dmat(r).T) % modulus
            Z = X[~img.any(axis=1)]
        else:
            Z = X
        if r > 0:
            Xp = all_vectors(math.comb(n, r - 1) * d)
            Bset = {tuple(v) for v in (Xp @ dmat(r - 1).T) % modulus}
        else:
            Bset = {tuple([0] * dim)}
        size = len(Z) // len(Bset)
        torsion = []
        pj = 1
        while True:
            pj_z = (Z * pj) % modulus
            killed = sum(1 for v in pj_z if tuple(v) in Bset)
            torsion.append(killed // len(Bset))
            if torsion[-1] == size:
                break
            pj *= p
        out[r] = {"order": size, "log_p_order": round(math.log(size, p)) if size > 1 else 0,
                  "torsion_counts": torsion, "invariant_factors": _invariant_factors(torsion, p)}
    return out


def _invariant_factors(torsion_counts, p):
    """Cyclic factor orders p^s from |H[p^j]| for j = 0, 1, ..."""
    logs = [round(math.log(c, p)) if c > 1 else 0 for c in torsion_counts]
    # number of cyclic factors of order >= p^j is logs[j] - logs[j-1]
    ge = [logs[j] - logs[j - 1] for j in range(1, len(logs))]
    factors = []
    for s in range(1, len(ge) + 1):
        count = ge[s - 1] - (ge[s] if s < len(ge) else 0)
        factors.extend([p ** s] * count)
    return sorted(factors, reverse=True)


# ------------------------------------------------------------------ the contracting lattice
@dataclass
class Lattice:
    """V = T^m 𝔐 with phi(V) in T^shift V; exponent_M is the auxiliary M with m = M + a - 1."""

    m: int
    exponent_M: int
    pole: int
    shift: int
    certificates: dict


def _chain_ring(M: PhiGammaModule) -> LocalRing:
    A = M.A
    if not isinstance(A, LocalRing):
        raise Unsupported("cohomology is implemented for chain-ring coefficients (quotient or finite field)")
    return A


def _require_gamma_stable(M: PhiGammaModule):
    """Each G_i must lie in GL_d(A[[T]]): integral, with invertible constant term."""
    from .base_rings import mat_inverse

    for i, G in enumerate(M.G):
        ok = G.is_zero() is False and G.valuation >= 0
        if ok:
            try:
                mat_inverse(M.A, G.dense(0, 1)[:, :, 0])
            except RingError:
                ok = False
        if not ok:
            raise Unsupported(f"gamma_{i + 1} does not preserve the standard lattice")


def phi_stable_lattice(M: PhiGammaModule) -> Lattice:
    """Smallest T^m 𝔐 of the standard shape with phi(T^m 𝔐) in T^(q^(a-1)) T^m 𝔐."""
    A = _chain_ring(M)
    _require_gamma_stable(M)
    q, a = M.base.q, A.a
    pole = max(0, -M.P.valuation) if not M.P.is_zero() else 0
    shift = q ** (a - 1)
    Mx = 0
    while Mx * q - pole < Mx + a - 1 + shift:
        Mx += 1
    m = Mx + a - 1
    d = M.rank
    X = SeriesMatrix.identity(A, d).shift(m)
    Y = M.apply(0, X, target=m + shift + 1)
    ok = Y.is_zero() or Y.valuation >= m + shift
    if Y.precision < m + shift:
        raise PrecisionError("module precision too small to certify the lattice")
    if not ok:
        raise RingError("phi does not contract the candidate lattice")
    certs = {"phi_image_valuation": int(min(Y.valuation, Y.precision)), "required": m + shift,
             "gamma_stable": True}
    return Lattice(m, Mx, pole, shift, certs)


def solve_phi_minus_one(M: PhiGammaModule, lat: Lattice, y: SeriesMatrix, precision=None) -> SeriesMatrix:
    """x in V with (phi - 1) x = y, for y in V: x = -sum_l phi^l(y)."""
    if not y.is_zero() and y.valuation < lat.m:
        raise RingError(f"right-hand side has valuation {y.valuation} < {lat.m}: not in the lattice")
    prec = min(y.precision, precision if precision is not None else EXACT)
    if prec >= EXACT:
        prec = M.base.N
    acc = SeriesMatrix.zeros(M.A, *y.shape, prec)
    term = y.truncate(prec)
    while not term.is_zero():
        acc = acc + term
        term = M.apply(0, term, target=prec)
    return (-acc).truncate(min(acc.precision, term.precision))


# ------------------------------------------------------------------ windows W_k = T^-k 𝔐 / V
class Windows:
    def __init__(self, M: PhiGammaModule, lat: Lattice):
        self.M, self.lat, self.d, self.m = M, lat, M.rank, lat.m
        self.R = M.A
        self._images = {}

    def dim(self, k):
        return self.d * (k + self.m)

    def monomials(self, k):
        d, L = self.d, k + self.m
        co = np.zeros((d, d * L, L, self.R.k), dtype=np.int64)
        for i in range(d):
            for j in range(L):
                co[i, i * L + j, j] = self.R.one_vec
        return SeriesMatrix(self.R, co, -k, EXACT)

    def image(self, idx, k):
        key = (idx, k)
        if key not in self._images:
            Y = self.M.apply(idx, self.monomials(k), target=self.m)
            if Y.precision < self.m:
                raise PrecisionError(f"window depth {k} exceeds what the module precision determines")
            self._images[key] = Y.truncate(self.m)
        return self._images[key]

    def depth(self, idx, k):
        Y = self.image(idx, k)
        return max(k, -Y.valuation) if not Y.is_zero() else k

    def expand(self, k):
        return max(self.depth(i, k) for i in range(self.M.n + 1))

    def coords(self, Y: SeriesMatrix, k):
        """(d*(k+m), c, kk) coordinates of columns of Y in W_k."""
        if not Y.is_zero() and Y.valuation < -k:
            raise RingError("element outside the window")
        D = Y.dense(-k, self.m)  # (d, c, L, kk)
        d, c, L, kk = D.shape
        return D.transpose(0, 2, 1, 3).reshape(d * L, c, kk)

    def element(self, v, k) -> SeriesMatrix:
        """Window coordinates (d*(k+m), kk) back to a d x 1 Laurent polynomial column."""
        L = k + self.m
        co = np.asarray(v).reshape(self.d, 1, L, self.R.k)
        return SeriesMatrix(self.R, co, -k, EXACT)

    def embed(self, X, k, c):
        """Coordinates in W_k to coordinates in W_c (c >= k), columnwise, blocks of size dim(k)."""
        blocks = X.shape[0] // self.dim(k)
        out = self.R.zero((blocks * self.dim(c),) + X.shape[1:-1])
        Lk, Lc = k + self.m, c + self.m
        for b in range(blocks):
            for i in range(self.d):
                src = b * self.dim(k) + i * Lk
                dst = b * self.dim(c) + i * Lc + (c - k)
                out[dst:dst + Lk] = X[src:src + Lk]
        return out

    def block(self, idx, k, c):
        """Matrix of (op_idx - 1) from W_k to W_c."""
        img = self.coords(self.image(idx, k), c)
        return self.R.sub(img, self.embed(identity(self.R, self.dim(k)), k, c))

    def differential(self, r, k, c):
        n_ops = self.M.n + 1
        blocks = [self.block(j, k, c) for j in range(n_ops)]
        return assemble_differential(self.R, n_ops, r, blocks, self.dim(k), self.dim(c))

    def cochain(self, X, k, r):
        """Split a coordinate vector of C^r at depth k into its components (Laurent columns)."""
        sets = index_sets(self.M.n + 1, r)
        D = self.dim(k)
        return {S: self.element(X[t * D:(t + 1) * D], k) for t, S in enumerate(sets)}


# ------------------------------------------------------------------ the complex on Laurent cochains
def herr_differential(M: PhiGammaModule, r: int, cochain: dict, target=None) -> dict:
    """d^r of a cochain {index set: d x 1 column} of the Herr complex."""
    target = target if target is not None else M.base.N
    n_ops = M.n + 1
    out = {S: SeriesMatrix.zeros(M.A, M.rank, 1, target) for S in index_sets(n_ops, r + 1)}
    for S, S2, j, sign in koszul_components(n_ops, r):
        x = cochain[S]
        term = M.apply(j, x, target=target) - x
        out[S2] = out[S2] + term if sign > 0 else out[S2] - term
    return out


@dataclass
class HerrComplex:
    """C^r = M^(n+1 choose r), indexed by subsets of {0 = phi, 1..n = gamma_i}."""

    module: PhiGammaModule

    @property
    def length(self):
        return self.module.n + 1

    def terms(self, r):
        return index_sets(self.length, r)

    def d(self, r, cochain, target=None):
        return herr_differential(self.module, r, cochain, target)

    def random_cochain(self, r, rng, depth=2, precision=None):
        A = self.module.A
        N = precision or self.module.base.N
        out = {}
        for S in self.terms(r):
            co = A.random(rng, (self.module.rank, 1, depth + 4))
            out[S] = SeriesMatrix(A, co, -depth, N)
        return out

    def check_d_squared(self, rng, samples=3):
        """d^(r+1) d^r x = 0 to precision on random cochains, for every r."""
        N = self.module.base.N
        verdict = {}
        for r in range(self.length - 1):
            verdict[r] = {"ok": True}
            for _ in range(samples):
                x = self.random_cochain(r, rng)
                dd = self.d(r + 1, self.d(r, x, N), N)
                for S, v in sorted(dd.items()):
                    v = v.truncate(v.precision)
                    if not v.is_zero():
                        i, _, e = v.first_difference(SeriesMatrix.zeros(v.ring, *v.shape, v.precision))
                        verdict[r] = {"ok": False, "witness": {
                            "target": list(S), "row": i, "exponent": e,
                            "input": cochain_to_json(x)}}
                        break
                if not verdict[r]["ok"]:
                    break
        return verdict


def build_herr(M: PhiGammaModule) -> HerrComplex:
    rep = check_module(M)
    if not rep["ok"]:
        raise RingError(f"not an etale (phi, Gamma)-module: {rep['failures']}")
    return HerrComplex(M)


def _zero_to(ch: dict, prec: int) -> bool:
    return all(v.truncate(prec).is_zero() for v in ch.values())


def lift_cocycle(M: PhiGammaModule, lat: Lattice, cochain: dict, r: int, precision: int) -> dict:
    """Correct a cocycle of M/V to a cocycle of M, to the given precision."""
    if r == 0:
        x = cochain[()]
        y = M.apply(0, x, target=precision) - x
        return {(): (x - solve_phi_minus_one(M, lat, y, precision)).truncate(precision)}
    if r == 1:
        out = dict(cochain)
        x0 = cochain[(0,)]
        for j in range(1, M.n + 1):
            xj = cochain[(j,)]
            y = (M.apply(0, xj, target=precision) - xj) - (M.apply(j, x0, target=precision) - x0)
            out[(j,)] = (xj - solve_phi_minus_one(M, lat, y, precision)).truncate(precision)
        out[(0,)] = x0.truncate(precision)
        return out
    return {S: v.truncate(precision) for S, v in cochain.items()}


def cochain_to_json(ch: dict) -> list:
    return [{"index": list(S), "value": v.to_json()} for S, v in sorted(ch.items())]


def default_window(q: int) -> int:
    return max(1, min(8, 72 // (q * q)))


@dataclass
class DegreeResult:
    divisors: list
    cocycles: list  # window cochains (dicts)
    relations: list  # (generator index, exponent, preimage cochain or None)
    window: int


def _degree(W: Windows, r: int, k: int, with_relations=True) -> DegreeResult:
    R = W.R
    n_ops = W.M.n + 1
    e = W.expand(k)
    if r < n_ops:
        Z = kernel_generators(R, W.differential(r, k, e))
    else:
        Z = identity(R, W.dim(k))
    if r > 0:
        # phi - 1 shrinks depth by a factor q, so degree-1 preimages stay within depth k;
        # in higher degrees gamma - 1 can cancel phi - 1, and preimages get the phi-reach of k
        b = k if r == 1 else e
        c = max(W.expand(b), k)
        Db = W.differential(r - 1, b, c)
        Zc = W.embed(Z, k, c)
    else:
        Db, Zc = R.zero((Z.shape[0], 0)), Z
    exps, gens = subquotient(R, Zc, Db)
    cocycles = [W.cochain(Z[:, g], k, r) for g in gens]
    relations = []
    if with_relations and r > 0 and gens:
        S = smith(R, Db)
        for t, g in enumerate(gens):
            s, pre = element_order(R, S, Db, Zc[:, g])
            relations.append((t, s, W.cochain(pre, b, r - 1) if pre is not None else None))
    return DegreeResult(exps, cocycles, relations, k)


def herr_cohomology(M: PhiGammaModule, degrees=None, window=None, stabilize=True, return_cochains=False):
    """Divisors and generators of H^i(M) over a chain ring A.

    Full cohomology is available when Gamma has one generator; otherwise only
    H^0.  Each degree reports divisor exponents t (summand varpi^t A),
    generating cocycles lifted to M, and coboundary preimages for the torsion
    relations.  With ``stabilize`` the run at window depth k is compared with
    the one at 2k and a disagreement raises Instability.
    """
    n_ops = M.n + 1
    if degrees is None:
        degrees = list(range(n_ops + 1)) if M.n == 1 else [0]
    degrees = sorted(set(int(r) for r in degrees))
    for r in degrees:
        if not 0 <= r <= n_ops:
            raise RingError(f"degree {r} out of range")
        if r > 0 and M.n != 1:
            raise Unsupported("higher cohomology is implemented for one Gamma generator only")
    lat = phi_stable_lattice(M)
    W = Windows(M, lat)
    runs = {}
    for r in degrees:
        k = window or default_window(M.base.q)
        while True:
            try:
                runs[r] = [_degree(W, r, k, with_relations=not stabilize)]
                if stabilize:
                    runs[r].append(_degree(W, r, 2 * k))
                break
            except PrecisionError:
                if window is not None or k == 1:
                    raise
                k //= 2
    final = {r: runs[r][-1] for r in degrees}
    stable = {r: all(x.divisors == final[r].divisors for x in runs[r]) for r in degrees}
    prec = M.base.N
    report = {}
    cochains = {}
    a = M.A.a
    for r in degrees:
        res = final[r]
        lifted = cochains[r] = [lift_cocycle(M, lat, c, r, prec) for c in res.cocycles]
        for x in lifted:
            if not _zero_to(herr_differential(M, r, x, prec), prec) if r < n_ops else False:
                raise RingError(f"lifted degree-{r} cocycle fails the cocycle check")
        report[r] = {
            "divisors": res.divisors,
            "length": sum(a - t for t in res.divisors),
            "witnesses": [cochain_to_json(x) for x in lifted],
            "relations": [{"generator": t, "exponent": s,
                           "preimage": cochain_to_json(pre) if pre is not None else None}
                          for t, s, pre in res.relations],
            "stable": stable[r],
            "precision": prec,
            "window": res.window,
        }
    if stabilize and not all(stable.values()):
        bad = [r for r in degrees if not stable[r]]
        raise Instability("; ".join(f"H^{r} changed between window depths {runs[r][0].window} and "
                                    f"{runs[r][-1].window}: {runs[r][0].divisors} vs {runs[r][-1].divisors}"
                                    for r in bad), report)
    return (report, cochains) if return_cochains else report


def coboundary_preimage(M: PhiGammaModule, cochain: dict, r: int, window=None):
    """Membership test in degree r >= 1: some x with d x = c, or None.

    The search runs in the window; d x - c is then certified to lie in V,
    where the Koszul complex is acyclic.  In degree 1 the V-part is removed
    too, so that d x = c holds to the module precision.
    """
    if r < 1:
        raise RingError("membership is tested in degrees >= 1")
    lat = phi_stable_lattice(M)
    W = Windows(M, lat)
    prec = M.base.N
    dc = herr_differential(M, r, cochain, prec) if r < M.n + 1 else {}
    if not _zero_to(dc, min(prec, lat.m)):
        raise RingError("the cochain is not a cocycle")
    k = window or default_window(M.base.q)
    depth = max([k] + [-v.valuation for v in cochain.values() if not v.is_zero()])
    b = depth if r == 1 else W.expand(depth)
    c = max(W.expand(b), depth)
    Db = W.differential(r - 1, b, c)
    vec = np.concatenate([W.coords(cochain[S].truncate(lat.m), c) for S in index_sets(M.n + 1, r)])[:, 0]
    pre = _solve_with(W.R, smith(W.R, Db), vec, Db.shape[1])
    if pre is None:
        return None
    x = W.cochain(pre, b, r - 1)
    if r == 1:
        y = M.apply(0, x[()], target=prec) - x[()] - cochain[(0,)]
        x = {(): (x[()] - solve_phi_minus_one(M, lat, y, prec)).truncate(prec)}
        check = prec
    else:
        check = lat.m
    dx = herr_differential(M, r - 1, x, prec)
    if not _zero_to({S: dx[S] - cochain[S] for S in dx}, check):
        raise RingError("window preimage failed verification")
    return x


def basechange_compare(M: PhiGammaModule, B, ring_map, degrees=None, window=None) -> dict:
    """Cohomology of M and of its base change along A -> B, side by side."""
    from .phigamma import base_change

    MB = base_change(M, B, ring_map)
    left = herr_cohomology(M, degrees, window)
    right = herr_cohomology(MB, degrees, window)
    return {"source": {r: v["divisors"] for r, v in left.items()},
            "target": {r: v["divisors"] for r, v in right.items()},
            "source_length": {r: v["length"] for r, v in left.items()},
            "target_length": {r: v["length"] for r, v in right.items()}}


def reprecise(M: PhiGammaModule, N: int) -> PhiGammaModule:
    """The same module data over the base at T-adic precision N."""
    return PhiGammaModule(M.base.with_precision(N), M.P, list(M.G), M.label, dict(M.meta))


def cohomology_with_evidence(M: PhiGammaModule, degrees=None, window=None, precisions=(40, 80)) -> dict:
    """herr_cohomology at the first precision, with divisor lists recomputed at the others."""
    runs = {}
    for N in precisions:
        runs[N] = herr_cohomology(reprecise(M, N), degrees, window)
    first = runs[precisions[0]]
    report = {r: dict(v) for r, v in first.items()}
    for r in report:
        seen = {str(N): runs[N][r]["divisors"] for N in precisions}
        report[r]["evidence"] = {"divisors_by_precision": seen,
                                 "agree": all(v == first[r]["divisors"] for v in seen.values())}
    return report


def tensor_divisors(exps, a: int, b: int):
    """Divisors of H (x) O/varpi^b for H = sum varpi^t O/varpi^a, expressed over O/varpi^b."""
    out = []
    for t in exps:
        length = min(a - t, b)
        if length > 0:
            out.append(b - length)
    return sorted(out)
