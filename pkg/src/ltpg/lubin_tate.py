"""Lubin-Tate formal groups, endomorphisms [a](T), the Gamma action and Delta-invariants."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .base_rings import LocalFieldSpec, reduction_map, structure_map
from .laurent import EXACT, PrecisionError, TruncatedSeries
from .linalg import ring_matmul
from .rings import LocalRing, RingError


def lift_value(ring: LocalRing, value):
    """An O_F element given as int, ``"pi"``, nested digits, or a symbolic form, inside ``ring``.

    Symbolic forms ``{"pow": [v, m]}`` and ``{"teich": digits, "q": q}`` are
    evaluated in ``ring`` itself: [a] modulo p^c depends on a modulo more
    than p^c, so such values must not be reduced before lifting.
    """
    if isinstance(value, dict):
        if "pow" in value:
            base, m = value["pow"]
            return ring.pow(lift_value(ring, base), int(m))
        if "teich" in value:
            return teichmuller(ring, lift_value(ring, value["teich"]), int(value["q"]))
        raise RingError(f"unknown value form {value!r}")
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return ring.from_int(int(value))
    if isinstance(value, str):
        if value == "pi":
            return ring.pi.copy()
        if value == "-pi":
            return ring.neg(ring.pi)
        return ring.from_int(int(value))
    return ring.element(value)


def value_key(value):
    return json.dumps(value, sort_keys=True)


def gamma_generators(field: LocalFieldSpec):
    """chi(gamma_j) = 1 + pi * e_j for the basis e_j = t^i pi^j of O_F (nested digits)."""
    if field.p == 2 or field.e >= field.p - 1:
        raise RingError("1 + pi O_F may have torsion; only p odd with e < p-1 is supported")
    gens = []
    for j in range(field.e):
        for i in range(field.f):
            digits = [[0] * field.f for _ in range(j + 2)]
            digits[0][0] = 1
            digits[j + 1][i] += 1
            gens.append(digits)
    return gens


def _guard_ring(field: LocalFieldSpec, N: int) -> LocalRing:
    """O_F modulo a few extra pi-digits, absorbing the division losses of the inductive solve."""
    extra = 2 + math.ceil(math.log(max(N, 2), field.q))
    return LocalRing(field.p, field.f, list(field.eisenstein), field.ring.a + extra)


class FrobeniusSeries:
    """A Frobenius power series: phi(T) = pi T mod T^2 and phi(T) = T^q mod pi."""

    def __init__(self, field: LocalFieldSpec, kind: str = "std", coeffs=None):
        self.field, self.kind = field, kind
        q = field.q
        if kind == "std":
            self._spec = {1: "pi", q: 1}
        elif kind == "mult":
            if field.f != 1 or field.e != 1 or list(field.eisenstein) != [-field.p, 1]:
                raise RingError("(1+T)^p - 1 is a Frobenius series only for pi = p over Q_p")
            self._spec = {i: math.comb(field.p, i) for i in range(1, field.p + 1)}
        elif kind == "custom":
            self._spec = {int(e): c for e, c in coeffs.items()}
        else:
            raise RingError(f"unknown Frobenius series kind {kind!r}")
        self.check()

    @property
    def key(self):
        return (hash(self.field), self.kind, value_key({str(k): v for k, v in self._spec.items()}))

    def coefficients(self, ring):
        return {e: lift_value(ring, c) for e, c in sorted(self._spec.items())}

    def series(self, ring=None, precision=EXACT):
        ring = ring or self.field.ring
        return TruncatedSeries.from_dict(ring, self.coefficients(ring), precision)

    def check(self):
        R = self.field.ring
        cs = self.coefficients(R)
        pi, q = R.pi, self.field.q
        if 0 in cs and not R.is_zero(cs[0]):
            raise RingError("Frobenius series must have zero constant term")
        if not R.equal(cs.get(1, R.zero()), pi):
            raise RingError("Frobenius series must be pi T mod T^2")
        for e, c in cs.items():
            target = R.one_vec if e == q else R.zero()
            if R.valuation(R.sub(c, target)) < 1:
                raise RingError(f"Frobenius series is not T^q mod pi (coefficient of T^{e})")
        if q not in cs:
            raise RingError("Frobenius series must be T^q mod pi")
        return True

    def to_json(self):
        if self.kind in ("std", "mult"):
            return self.kind
        return {"kind": "custom", "coeffs": {str(k): v for k, v in self._spec.items()}}


def frobenius_from_json(field: LocalFieldSpec, d) -> FrobeniusSeries:
    if isinstance(d, FrobeniusSeries):
        return d
    if isinstance(d, str):
        return FrobeniusSeries(field, d)
    if isinstance(d, dict) and d.get("kind") in ("std", "mult", "custom"):
        return FrobeniusSeries(field, d["kind"], d.get("coeffs"))
    raise RingError(f"unrecognised Frobenius description {d!r}")


# ------------------------------------------------------------------ bivariate helpers
def _bimul(R, F, G, N):
    """Product of bivariate arrays (N, N, k) truncated to total degree < N."""
    out = np.zeros_like(F)
    for i, j in zip(*np.nonzero(F.any(axis=2))):
        if i + j >= N:
            continue
        block = G[: N - i, : N - j]
        out[i:, j:] = R.add(out[i:, j:], R.mul(block, F[i, j]))
    return _cut(out, N)


def _cut(F, N):
    i, j = np.indices(F.shape[:2])
    F[i + j >= N] = 0
    return F


def _univariate_powers(R, s_coeffs, N):
    """Rows i: coefficients of s(T)^i modulo T^N, as an (N, N, k) array."""
    P = np.zeros((N, N, R.k), dtype=np.int64)
    P[0, 0] = R.one_vec
    s = TruncatedSeries(R, s_coeffs, 0, N)
    cur = TruncatedSeries.one(R, N)
    for i in range(1, N):
        cur = cur * s
        P[i] = cur.dense(0, N)
    return P


def _phi_of_bivariate(R, phi_cs, F, N):
    """phi(F(X, Y)) for a polynomial phi given as {exponent: coefficient}."""
    out = np.zeros_like(F)
    power = np.zeros_like(F)
    power[0, 0] = R.one_vec
    top = max(phi_cs)
    for m in range(1, top + 1):
        power = _bimul(R, power, F, N)
        if m in phi_cs:
            out = R.add(out, R.mul(power, phi_cs[m]))
    return out


# ------------------------------------------------------------------ formal group
@dataclass
class FormalGroupLaw:
    """F(X, Y) as an (N, N, k) array over O_F/p^c; entries of total degree >= N are unknown."""

    phi: FrobeniusSeries
    coeffs: np.ndarray
    N: int

    @property
    def ring(self):
        return self.phi.field.ring

    def coefficient(self, i, j):
        return self.coeffs[i, j]

    def as_dict(self):
        return {(int(i), int(j)): self.coeffs[i, j] for i, j in zip(*np.nonzero(self.coeffs.any(axis=2)))}

    def evaluate(self, f: TruncatedSeries, g: TruncatedSeries):
        """F(f(T), g(T)) for f, g in T A[[T]] over the same ring."""
        R = f.ring
        cs = self.coeffs if R is self.ring else structure_map(self.phi.field, R)(self.coeffs)
        return evaluate_bivariate(cs, self.N, f, g)

    def check(self):
        """Identity, commutativity, associativity and phi-compatibility to degree < N."""
        R, N, C = self.ring, self.N, self.coeffs
        report = {}
        x_only = C[:, 0].copy()
        expect = np.zeros_like(x_only)
        expect[1] = R.one_vec
        report["unit"] = bool(np.array_equal(x_only % R.moduli, expect) and
                              np.array_equal(C[0, :] % R.moduli, expect))
        report["commutative"] = bool(np.array_equal(C, C.transpose(1, 0, 2)))
        report["phi_compatible"] = bool(not np.any(_phi_defect(R, self.phi.coefficients(R), C, N)))
        report["associative"] = _associative(R, C, N)
        report["ok"] = all(report.values())
        return report


def _phi_defect(R, phi_cs, C, N):
    phi_poly = np.zeros((N, R.k), dtype=np.int64)
    for e, c in phi_cs.items():
        if e < N:
            phi_poly[e] = c
    P = _univariate_powers(R, phi_poly, N)  # P[i] = phi(T)^i
    lhs = _phi_of_bivariate(R, phi_cs, C, N)
    rhs = ring_matmul(R, ring_matmul(R, P.transpose(1, 0, 2), C), P)
    return _cut(R.sub(lhs, rhs), N)


def evaluate_bivariate(C, N, f: TruncatedSeries, g: TruncatedSeries):
    """sum c_ij f^i g^j for an (N, N, k) coefficient array known in total degree < N."""
    R = f.ring
    prec = min(f.precision, g.precision, N * min(f.valuation, g.valuation))
    f, g = f.truncate(prec), g.truncate(prec)
    fp = [TruncatedSeries.one(R, EXACT)]
    gp = [TruncatedSeries.one(R, EXACT)]
    for _ in range(1, N):
        fp.append(fp[-1] * f)
        gp.append(gp[-1] * g)
    out = TruncatedSeries.zero(R, prec)
    for i in range(N):
        inner = TruncatedSeries.zero(R, EXACT)
        for j in range(N - i):
            if C[i, j].any():
                inner = inner + gp[j].scale(C[i, j])
        if not inner.is_zero():
            out = out + fp[i] * inner
    return out.truncate(prec)


def _associative(R, C, N):
    """F(F(X,Y),Z) = F(X,F(Y,Z)) restricted to lines X = T, Y = uT, Z = wT."""
    rng = np.random.default_rng(0)
    T = TruncatedSeries.T(R, N)
    for _ in range(3):
        u, w = (int(x) for x in rng.integers(1, 1000, size=2))
        X, Y, Z = T, T.scale(u), T.scale(w)
        left = evaluate_bivariate(C, N, evaluate_bivariate(C, N, X, Y), Z)
        right = evaluate_bivariate(C, N, X, evaluate_bivariate(C, N, Y, Z))
        if not left.equals(right):
            return False
    return True


def build_formal_group(phi: FrobeniusSeries, N: int) -> FormalGroupLaw:
    if N < 2:
        raise RingError("N must be at least 2")
    field = phi.field
    Rb = _guard_ring(field, N)
    phi_cs = phi.coefficients(Rb)
    phi_poly = np.zeros((N, Rb.k), dtype=np.int64)
    for e, c in phi_cs.items():
        if e < N:
            phi_poly[e] = c
    P = _univariate_powers(Rb, phi_poly, N)
    Pt = P.transpose(1, 0, 2)
    C = np.zeros((N, N, Rb.k), dtype=np.int64)
    C[1, 0] = C[0, 1] = Rb.one_vec
    pi = Rb.pi
    for D in range(2, N):
        Cd = _cut(C[: D + 1, : D + 1].copy(), D + 1)
        lhs = _phi_of_bivariate(Rb, phi_cs, Cd, D + 1)
        rhs = ring_matmul(Rb, ring_matmul(Rb, Pt[: D + 1, : D + 1], Cd), P[: D + 1, : D + 1])
        E = Rb.sub(lhs, rhs)
        denom_inv = Rb.inv(Rb.sub(Rb.pow(pi, D - 1), Rb.one_vec))
        for i in range(D + 1):
            e = E[i, D - i]
            if not Rb.is_zero(e) and Rb.valuation(e) < 1:
                raise PrecisionError(f"defect in degree {D} not divisible by pi")
            C[i, D - i] = Rb.mul(Rb.div_pi(e), denom_inv)
    red = reduction_map(Rb, field.ring)
    return FormalGroupLaw(phi, red(C), N)


# ------------------------------------------------------------------ endomorphisms
@dataclass
class LTEndomorphism:
    a: object
    series: TruncatedSeries

    def over(self, A, field):
        """The series with coefficients pushed into the O_F-algebra A."""
        if A is self.series.ring:
            return self.series
        return self.series.map_coefficients(structure_map(field, A), A)


_ENDO_CACHE: dict = {}


def build_endomorphism(phi: FrobeniusSeries, a, N: int) -> LTEndomorphism:
    """[a](T) modulo T^N, the unique series with [a] = aT mod T^2 commuting with phi."""
    key = (phi.key, value_key(a), N)
    if key in _ENDO_CACHE:
        return _ENDO_CACHE[key]
    field = phi.field
    Rb = _guard_ring(field, N)
    phi_cs = phi.coefficients(Rb)
    phi_poly = np.zeros((N, Rb.k), dtype=np.int64)
    for e, c in phi_cs.items():
        if e < N:
            phi_poly[e] = c
    P = _univariate_powers(Rb, phi_poly, N)
    f = np.zeros((N, Rb.k), dtype=np.int64)
    f[1] = lift_value(Rb, a)
    pi = Rb.pi
    for D in range(2, N):
        fs = TruncatedSeries(Rb, f[:D + 1], 0, D + 1)
        lhs = TruncatedSeries.zero(Rb, D + 1)
        for m, c in phi_cs.items():
            lhs = lhs + (fs ** m).truncate(D + 1).scale(c)
        rhs = Rb.zero()
        for i in range(1, D + 1):
            rhs = Rb.add(rhs, Rb.mul(f[i], P[i, D]))
        e = Rb.sub(lhs.coefficient(D) if lhs.precision > D else Rb.zero(), rhs)
        if not Rb.is_zero(e) and Rb.valuation(e) < 1:
            raise PrecisionError(f"defect in degree {D} not divisible by pi")
        f[D] = Rb.mul(Rb.div_pi(e), Rb.inv(Rb.sub(Rb.pow(pi, D - 1), Rb.one_vec)))
    red = reduction_map(Rb, field.ring)
    out = LTEndomorphism(a, TruncatedSeries(field.ring, red(f), 0, N))
    _ENDO_CACHE[key] = out
    return out


@dataclass
class GammaElement:
    chi: object
    endo: LTEndomorphism


def gamma_element(phi: FrobeniusSeries, chi, N: int) -> GammaElement:
    R = phi.field.ring
    if not R.is_unit(lift_value(R, chi)):
        raise RingError("chi(gamma) must be a unit")
    return GammaElement(chi, build_endomorphism(phi, chi, N))


def gamma_T_gap(g: GammaElement, basic: bool = True, ring=None, field=None):
    """Membership of gamma(T) - T in (pi, T) T A^+ (basic case) or pi A + T^2 A^+."""
    s = g.endo.series if ring is None else g.endo.over(ring, field)
    R = s.ring
    gap = s - TruncatedSeries.T(R, s.precision)
    c0, c1 = gap.coefficient(0), gap.coefficient(1)
    pi_low = TruncatedSeries.from_dict(R, {0: c0, 1: c1}, EXACT)
    high = gap - pi_low
    pi_ok = R.valuation(c1) >= 1 and R.valuation(c0) >= 1
    member = pi_ok and (R.is_zero(c0) if basic else True) and gap.valuation >= 0
    wit_pi = pi_low.map_coefficients(lambda x: R.div_pi(x), R) if pi_ok else None
    return {
        "member": bool(member),
        "case": "basic" if basic else "general",
        "gap": gap,
        "pi_part": wit_pi,
        "T2_part": high,
    }


# ------------------------------------------------------------------ Delta
def teichmuller(R: LocalRing, x, q):
    cur = x
    for _ in range(R.a + 2):
        nxt = R.pow(cur, q)
        if R.equal(nxt, cur):
            return cur
        cur = nxt
    return cur


def delta_roots(field: LocalFieldSpec):
    """The (q-1)-th roots of unity of O_F, as symbolic Teichmuller lifts of the residues."""
    if field.p == 2:
        raise RingError("Delta = mu_{q-1} is supported only for p odd")
    Rb = field.ring
    roots = []
    for x in Rb.residue_representatives():
        if Rb.is_zero(x):
            continue
        roots.append({"teich": _to_digits(Rb, x), "q": field.q})
    return roots


def _to_digits(R: LocalRing, x):
    """Compact portable form: an int when x lies in Z, else nested digits."""
    digits = [[0] * R.n for _ in range(R.e)]
    for idx, (i, j) in enumerate(R.basis):
        digits[j][i] = int(x[idx])
    if all(c == 0 for row in digits for c in row[1:]) and all(row[0] == 0 for row in digits[1:]):
        return digits[0][0]
    return digits


def delta_norm_parameter(phi: FrobeniusSeries, N: int, gammas=()):
    """T_K = prod_{zeta in mu_{q-1}} [zeta](T), with stability certificates."""
    field = phi.field
    R = field.ring
    TK = TruncatedSeries.one(R, EXACT)
    for z in delta_roots(field):
        TK = TK * build_endomorphism(phi, z, N).series
    n_delta = field.q - 1
    TK_inv = TK.invert()
    phiT = phi.series(R, EXACT)
    cert_phi = TK.substitute(phiT) * TK_inv
    certs = {"phi": {"quotient": cert_phi, "integral": cert_phi.valuation >= 0}}
    for idx, chi in enumerate(gammas):
        gT = build_endomorphism(phi, chi, N).series
        quo = TK.substitute(gT) * TK_inv
        certs[f"gamma_{idx}"] = {"quotient": quo, "integral": quo.valuation >= 0}
    return {
        "T_K": TK,
        "delta_order": n_delta,
        "valuation_ok": TK.valuation == n_delta,
        "certificates": certs,
    }


def rewrite_invariant(f: TruncatedSeries, TK: TruncatedSeries, max_terms=None):
    """g with g(T_K) = f, solved lowest degree first.  Returns (g, residual)."""
    R = f.ring
    m = TK.valuation
    lead = TK.coefficient(m)
    lead_inv = R.inv(lead)
    powers = {}
    TK_inv = None

    def power(j):
        nonlocal TK_inv
        if j not in powers:
            if j == 0:
                powers[j] = TruncatedSeries.one(R, EXACT)
            elif j > 0:
                powers[j] = power(j - 1) * TK
            else:
                if TK_inv is None:
                    TK_inv = TK.invert()
                powers[j] = power(j + 1) * TK_inv
        return powers[j]

    residual = f
    g = {}
    while not residual.is_zero() and residual.valuation < residual.precision:
        v = residual.valuation
        if v % m:
            raise RingError(f"series is not Delta-invariant (stray T^{v})")
        j = v // m
        c = R.mul(residual.coefficient(v), R.pow(lead_inv, j) if j >= 0 else R.pow(lead, -j))
        residual = residual - power(j).scale(c)
        g[j] = c
        if max_terms is not None and len(g) >= max_terms:
            break
    prec = (residual.precision + m - 1) // m if residual.precision < EXACT else EXACT
    return TruncatedSeries.from_dict(R, g, max(prec, max(g, default=0) + 1)), residual


def delta_invariants(matrices, A):
    """Image of the averaging idempotent of a finite group acting A-linearly.

    ``matrices`` lists the d x d action matrices (d, d, k).  Returns the
    idempotent, a basis of its image and the rank.
    """
    from .linalg import image_basis

    mats = [np.asarray(M, dtype=np.int64) for M in matrices]
    n = len(mats)
    inv_n = A.inv(A.from_int(n))
    e = mats[0].copy()
    for M in mats[1:]:
        e = A.add(e, M)
    e = A.mul(e, inv_n)
    e2 = ring_matmul(A, e, e)
    if not A.equal(e2, e):
        raise RingError("averaging operator is not idempotent (matrices do not form a group)")
    basis = image_basis(A, e)
    return {"idempotent": e, "basis": basis, "rank": len(basis)}
