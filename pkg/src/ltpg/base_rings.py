"""Local fields, coefficient algebras and the finite-level Witt-coefficient algebra."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .rings import (
    FiniteAlgebra,
    LocalRing,
    NotAUnit,
    PolynomialExtension,
    ProductAlgebra,
    RingError,
    hensel_root,
    irreducible_poly,
    is_prime,
)


@dataclass(frozen=True, eq=False)
class LocalFieldSpec:
    """A finite extension F/Q_p: unramified of degree f, then Eisenstein of degree e.

    ``precision`` is the working p-adic precision c; the integers are
    represented as O_F / p^c = O_F / pi^(e c).
    """

    p: int
    f: int
    e: int
    eisenstein: tuple
    precision: int = 8

    @property
    def q(self) -> int:
        return self.p ** self.f

    @property
    def degree(self) -> int:
        """[F : Q_p], the rank of Gamma_F."""
        return self.e * self.f

    @cached_property
    def ring(self) -> LocalRing:
        return LocalRing(self.p, self.f, list(self.eisenstein), self.e * self.precision,
                         name=f"O_F/p^{self.precision}")

    @property
    def pi(self):
        return self.ring.pi

    def element(self, value):
        """An element of O_F from an int, ``"pi"`` or nested pi-adic digits."""
        if isinstance(value, str):
            if value == "pi":
                return self.ring.pi.copy()
            return self.ring.from_int(int(value))
        return self.ring.element(value)

    def integer_basis(self):
        """Z_p-basis ``t^i pi^j`` of O_F, as ring elements."""
        R = self.ring
        return [R.mul(R.pow(R.t, i), R.pow(R.pi, j)) for j in range(self.e) for i in range(self.f)]

    def to_json(self):
        return {"p": self.p, "f": self.f, "e": self.e,
                "eisenstein": list(self.eisenstein), "precision": self.precision}

    def __eq__(self, other):
        return isinstance(other, LocalFieldSpec) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(tuple(sorted((k, str(v)) for k, v in self.to_json().items())))


def make_field(p: int, f: int = 1, e: int = 1, eisenstein=None, precision: int = 8) -> LocalFieldSpec:
    if not is_prime(p):
        raise RingError(f"{p} is not prime")
    if eisenstein is None:
        eisenstein = [-p, 1]
    eisenstein = tuple(int(c) for c in eisenstein)
    if len(eisenstein) - 1 != e:
        raise RingError(f"Eisenstein polynomial has degree {len(eisenstein) - 1}, expected e={e}")
    fld = LocalFieldSpec(int(p), int(f), int(e), eisenstein, int(precision))
    fld.ring  # validates the Eisenstein condition
    return fld


def field_from_json(d: dict) -> LocalFieldSpec:
    return make_field(d["p"], d.get("f", 1), d.get("e", 1), d.get("eisenstein"), d.get("precision", 8))


# ------------------------------------------------------------------ coefficients
def coeff_quotient(fld: LocalFieldSpec, a: int, degree: int = 1) -> LocalRing:
    """O/varpi^a with O the integers of the unramified degree-``degree`` extension of F."""
    if a < 1:
        raise RingError("a must be >= 1")
    A = LocalRing(fld.p, fld.f * degree, list(fld.eisenstein), a,
                  name=f"O/pi^{a}" if degree == 1 else f"O_{degree}/pi^{a}")
    A.kind = "quotient"
    return A


def coeff_finite_field(fld: LocalFieldSpec, degree: int = 1) -> LocalRing:
    A = LocalRing(fld.p, fld.f * degree, list(fld.eisenstein), 1, name=f"F_{fld.q ** degree}")
    A.kind = "finite_field"
    return A


def coeff_from_json(fld: LocalFieldSpec, d: dict) -> FiniteAlgebra:
    kind = d.get("kind")
    if kind == "quotient":
        return coeff_quotient(fld, int(d["a"]), int(d.get("degree", 1)))
    if kind == "finite_field":
        return coeff_finite_field(fld, int(d.get("degree", 1)))
    if kind == "product":
        A = ProductAlgebra([coeff_from_json(fld, c) for c in d["factors"]])
        A.kind = "product"
        return A
    raise RingError(f"unknown coefficient algebra kind {kind!r}")


def coeff_to_json(A: FiniteAlgebra) -> dict:
    if isinstance(A, ProductAlgebra):
        return {"kind": "product", "factors": [coeff_to_json(f) for f in A.factors]}
    if getattr(A, "kind", None) == "finite_field":
        return {"kind": "finite_field", "degree": A.n // _f_of(A)}
    return {"kind": "quotient", "a": A.a, "degree": A.n // _f_of(A)}


def _f_of(A):
    return getattr(A, "field_f", 1)


class StructureMap:
    """The ring map O_F/p^c -> A (additive on coordinates, hence a matrix)."""

    def __init__(self, fld: LocalFieldSpec, A: FiniteAlgebra):
        self.field, self.target = fld, A
        R = fld.ring
        if isinstance(A, ProductAlgebra):
            self.parts = [StructureMap(fld, B) for B in A.factors]
            self.matrix = np.concatenate([s.matrix for s in self.parts], axis=1)
            return
        if isinstance(A, PolynomialExtension):
            inner = StructureMap(fld, A.base)
            self.matrix = np.concatenate(
                [inner.matrix, np.zeros((inner.matrix.shape[0], A.k - A.base.k), dtype=np.int64)], axis=1)
            return
        if not isinstance(A, LocalRing) or A.p != fld.p or A.eisenstein != list(fld.eisenstein):
            raise RingError(f"{A} is not an O_F-algebra of the supported kind")
        if A.n % fld.f:
            raise RingError("residue field of A does not contain k_F")
        if A.a > fld.e * fld.precision:
            raise RingError("coefficient precision exceeds field working precision")
        A.field_f = fld.f
        if fld.f == 1:
            tau = A.one_vec
        else:
            tau = hensel_root(A, [A.from_int(c) for c in irreducible_poly(fld.p, fld.f)])
        rows = []
        for (i, j) in R.basis:
            rows.append(A.mul(A.pow(tau, i), A.pow(A.pi, j)))
        self.matrix = np.array(rows, dtype=np.int64).reshape(R.k, A.k)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        return (x @ self.matrix) % self.target.moduli


def structure_map(fld, A) -> StructureMap:
    cache = getattr(A, "_structure_maps", None)
    if cache is None:
        cache = A._structure_maps = {}
    key = hash(fld)
    if key not in cache:
        cache[key] = StructureMap(fld, A)
    return cache[key]


def reduction_map(A: LocalRing, B: LocalRing):
    """The reduction A -> B for B = A / varpi^b (b <= a), on coordinates."""
    if not (isinstance(A, LocalRing) and isinstance(B, LocalRing)):
        raise RingError("reduction only between quotient rings")
    if (A.p, A.n, A.eisenstein) != (B.p, B.n, B.eisenstein) or B.a > A.a:
        raise RingError(f"no reduction map {A.name} -> {B.name}")
    idx = {b: t for t, b in enumerate(A.basis)}
    M = np.zeros((A.k, B.k), dtype=np.int64)
    for t, b in enumerate(B.basis):
        M[idx[b], t] = 1

    def red(x):
        return (np.asarray(x, dtype=np.int64) @ M) % B.moduli

    red.source, red.target = A, B
    return red


def lift_section(A: LocalRing, B: LocalRing):
    """Fixed set-theoretic section B -> A of the reduction (coordinatewise lift)."""
    idx = {b: t for t, b in enumerate(A.basis)}
    M = np.zeros((B.k, A.k), dtype=np.int64)
    for t, b in enumerate(B.basis):
        M[t, idx[b]] = 1

    def lift(x):
        return (np.asarray(x, dtype=np.int64) @ M) % A.moduli

    return lift


# ------------------------------------------------------------------ Witt part
class WittCoeff:
    """W_{O_F}(k_K) (x)_{O_F} A for K/F unramified of degree r, as A[y]/(m(y)).

    ``y`` is the image of a generator theta of W(k_K) whose minimal polynomial
    ``m`` has integer coefficients; the q-power Frobenius acts A-linearly by
    ``y -> S(y)`` where ``S(theta) = phi_q(theta)``.
    """

    def __init__(self, fld: LocalFieldSpec, A: FiniteAlgebra, r: int):
        if fld.f != 1 and r > 1:
            raise RingError("Witt coefficients with r > 1 need k_F = F_p")
        self.field, self.base, self.r = fld, A, int(r)
        p = fld.p
        m = irreducible_poly(p, r)
        self.minpoly = m
        self.ring = PolynomialExtension(A, [A.from_int(c) for c in m], name=f"W(k_K)(x){A.name}")
        # phi_q(theta) inside Z_{p^r}/p^c, expressed in the theta-power basis
        if r == 1:
            self.frob_poly = [0, 1]
        else:
            L = LocalRing(p, r, [-p, 1], fld.precision)
            q = fld.q
            approx = L.pow(L.t, q)
            root = hensel_root(L, [L.from_int(c) for c in m], candidates=approx[None, :])
            if root is None:
                raise RingError("failed to lift Frobenius")
            # coordinates of root in basis t^i (L.basis is (i, 0))
            self.frob_poly = [int(c) for c in root] + [0]
        W = self.ring
        ys = W.zero()
        for i, c in enumerate(self.frob_poly[: r]):
            ys = W.add(ys, W.smul(c, W.pow(W.y, i)))
        self.frob_y = ys
        # A-linear Frobenius as a matrix on W-coordinates
        kb = A.k
        cols = []
        eye = np.eye(W.k, dtype=np.int64)
        for idx in range(W.k):
            l, i = divmod(idx, kb)
            cols.append(W.mul(W.embed(eye[i][:kb] if kb else eye[i]), W.pow(ys, l)))
        self._frob_matrix = np.array(cols, dtype=np.int64)

    def frobenius(self, x, times: int = 1):
        x = np.asarray(x, dtype=np.int64)
        for _ in range(times % max(self.r, 1) if self.r else 0):
            x = (x @ self._frob_matrix) % self.ring.moduli
        return x

    def embed(self, a):
        return self.ring.embed(a)

    @cached_property
    def split_roots(self):
        """Images in A of theta, phi_q(theta), ..., or None if A lacks them."""
        A = self.base
        if self.r == 1:
            return [A.zero()]
        try:
            rho = hensel_root(A, [A.from_int(c) for c in self.minpoly])
        except RingError:
            rho = None
        if rho is None:
            return None
        roots = [rho]
        for _ in range(self.r - 1):
            prev = roots[-1]
            nxt = A.zero()
            for i, c in enumerate(self.frob_poly[: self.r]):
                nxt = A.add(nxt, A.smul(c, A.pow(prev, i)))
            roots.append(nxt)
        return roots


def witt_split(W: WittCoeff, x):
    """x (x) 1 -> (x, phi_q x, ..., phi_q^{r-1} x) in prod A."""
    if W.r == 1:
        return (np.asarray(W.ring.coefficients(x))[..., 0, :],)
    roots = W.split_roots
    if roots is None:
        raise RingError(f"{W.base.name} does not contain W(k_K) for r={W.r}")
    return tuple(W.ring.eval_at(x, rho) for rho in roots)


def witt_unsplit(W: WittCoeff, parts):
    """Inverse of :func:`witt_split` (Vandermonde solve over A)."""
    A = W.base
    if W.r == 1:
        return W.embed(parts[0])
    roots = W.split_roots
    if roots is None:
        raise RingError(f"{A.name} does not contain W(k_K)")
    r = W.r
    V = np.array([[A.pow(rho, l) for l in range(r)] for rho in roots])
    Vinv = mat_inverse(A, V)
    vals = np.stack([np.asarray(v) for v in parts], axis=-2)  # (r, k)
    coeffs = A.zero((r,))
    for l in range(r):
        acc = A.zero()
        for j in range(r):
            acc = A.add(acc, A.mul(Vinv[l, j], vals[j]))
        coeffs[l] = acc
    return W.ring.from_coefficients(coeffs)


def norm_map(W: WittCoeff, x):
    """N(x) = x phi_q(x) ... phi_q^{r-1}(x), returned as an element of A."""
    R = W.ring
    if not R.is_unit(x):
        raise NotAUnit("norm_map requires a unit")
    out = np.asarray(x)
    cur = np.asarray(x)
    for _ in range(W.r - 1):
        cur = W.frobenius(cur)
        out = R.mul(out, cur)
    cs = R.coefficients(out)
    if W.r > 1 and np.any(cs[1:] % W.base.moduli):
        raise RingError("norm did not land in A (Frobenius inconsistent)")
    return cs[0]


def norm_fibre(W: WittCoeff, a):
    """Some unit x with N(x) = a."""
    A = W.base
    if not A.is_unit(a):
        raise NotAUnit("norm_fibre requires a unit")
    if W.r == 1:
        return W.embed(a)
    if W.split_roots is not None:
        parts = [np.asarray(a)] + [A.one_vec] * (W.r - 1)
        return witt_unsplit(W, parts)
    for x in W.ring.units():
        if A.equal(norm_map(W, x), a):
            return x
    raise RingError("norm is not surjective (should not happen)")


def norm_kernel(W: WittCoeff):
    """The set {phi_q(y)/y : y a unit}, as a set of coordinate tuples."""
    R = W.ring
    us = R.units()
    fy = W.frobenius(us)
    quot = R.mul(fy, R.inv(us))
    return {tuple(int(c) for c in row) for row in quot}


def mat_inverse(A: FiniteAlgebra, M):
    """Inverse of a square matrix over a finite local (or product of local) ring."""
    M = np.asarray(M, dtype=np.int64)
    n = M.shape[0]
    if isinstance(A, ProductAlgebra):
        comps = [mat_inverse(F, A.component(M, i)) for i, F in enumerate(A.factors)]
        return A.assemble(comps)
    aug = np.concatenate([M, A.one(()) * np.eye(n, dtype=np.int64)[..., None]], axis=1) % A.moduli
    for col in range(n):
        piv = None
        for row in range(col, n):
            if A.is_unit(aug[row, col]):
                piv = row
                break
        if piv is None:
            raise NotAUnit("matrix is not invertible")
        aug[[col, piv]] = aug[[piv, col]]
        inv = A.inv(aug[col, col])
        aug[col] = A.mul(aug[col], inv)
        for row in range(n):
            if row != col:
                factor = aug[row, col].copy()
                aug[row] = A.sub(aug[row], A.mul(factor, aug[col]))
    return aug[:, n:]
