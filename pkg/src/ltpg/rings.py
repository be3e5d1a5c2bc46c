"""Finite commutative rings given by a coordinate basis and structure constants.

Every ring used by the package (O_F / pi^c, coefficient algebras O / varpi^a,
finite fields, Galois rings, dual numbers, products, Witt-coefficient
algebras) is a :class:`FiniteAlgebra`: elements are integer coordinate
vectors, coordinate ``l`` living modulo ``moduli[l]`` (a power of ``p``), and
multiplication is bilinear through an integer tensor ``mult[i, j, l]``.

All arithmetic is vectorised over leading axes, so an array of shape
``(..., k)`` is an array of ring elements.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np


class RingError(ValueError):
    pass


class NotAUnit(RingError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def _vp(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


class FiniteAlgebra:
    """A finite commutative ring, free-ish over Z/p^c with per-coordinate moduli.

    ``nil_index`` bounds the nilpotency of the radical; ``unit_exponent`` is a
    multiple of the exponent of every residue field's unit group.  Both drive
    inversion by Fermat power followed by Newton lifting.
    """

    def __init__(self, p, moduli, mult, one, *, nil_index, residue_degree, name="A"):
        self.p = int(p)
        self.residue_degree = int(residue_degree)
        unit_exponent = self.p ** self.residue_degree - 1
        self.moduli = np.asarray(moduli, dtype=np.int64)
        self.mult = np.asarray(mult, dtype=np.int64) % self.moduli
        self.one_vec = np.asarray(one, dtype=np.int64) % self.moduli
        self.k = len(self.moduli)
        self.nil_index = int(nil_index)
        self.unit_exponent = int(unit_exponent)
        self.name = name
        self.max_modulus = int(self.moduli.max())
        if self.max_modulus ** 2 * self.k * self.k >= 2 ** 56:
            raise RingError(f"modulus {self.max_modulus} too large for int64 arithmetic")
        self._pairs = [
            (i, j, self.mult[i, j]) for i in range(self.k) for j in range(self.k)
            if self.mult[i, j].any()
        ]

    def __repr__(self):
        return f"<{self.name}: k={self.k}, moduli={self.moduli.tolist()}>"

    def __eq__(self, other):
        return (
            isinstance(other, FiniteAlgebra)
            and self.k == other.k
            and np.array_equal(self.moduli, other.moduli)
            and np.array_equal(self.mult, other.mult)
        )

    def __hash__(self):
        return hash((self.name, self.k, tuple(self.moduli.tolist())))

    # ------------------------------------------------------------------ basics
    @property
    def order(self) -> int:
        return int(np.prod([int(m) for m in self.moduli]))

    def zero(self, shape=()):
        return np.zeros(tuple(shape) + (self.k,), dtype=np.int64)

    def one(self, shape=()):
        return np.broadcast_to(self.one_vec, tuple(shape) + (self.k,)).copy()

    def from_int(self, n: int):
        n = int(n) % self.max_modulus
        return (self.one_vec * n) % self.moduli

    def reduce(self, x):
        return np.asarray(x, dtype=np.int64) % self.moduli

    def add(self, x, y):
        return (x + y) % self.moduli

    def sub(self, x, y):
        return (x - y) % self.moduli

    def neg(self, x):
        return (-x) % self.moduli

    def smul(self, n: int, x):
        return (x * (int(n) % self.max_modulus)) % self.moduli

    def mul(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.k == 1:
            return (x * y) % self.moduli
        outer = (x[..., :, None] * y[..., None, :]) % self.max_modulus
        return np.einsum("...ij,ijl->...l", outer, self.mult) % self.moduli

    def is_zero(self, x):
        return not np.any(np.asarray(x) % self.moduli)

    def equal(self, x, y):
        return self.is_zero(np.asarray(x) - np.asarray(y))

    def pow(self, x, n: int):
        result = self.one(np.shape(x)[:-1])
        base = np.asarray(x, dtype=np.int64)
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    # ------------------------------------------------------------------- units
    def _newton_inverse(self, x):
        y = self.pow(x, self.unit_exponent - 1)
        two = self.from_int(2)
        for _ in range(max(1, self.nil_index.bit_length()) + 1):
            y = self.mul(y, self.sub(two, self.mul(x, y)))
        return y

    def is_unit(self, x) -> bool:
        y = self._newton_inverse(x)
        return self.equal(self.mul(x, y), self.one_vec)

    def units_mask(self, xs):
        """Boolean mask over the leading axes of ``xs``."""
        y = self._newton_inverse(xs)
        d = (self.mul(xs, y) - self.one_vec) % self.moduli
        return ~np.any(d, axis=-1)

    def inv(self, x):
        y = self._newton_inverse(x)
        if not self.equal(self.mul(x, y), self.one(np.shape(x)[:-1])):
            raise NotAUnit(f"{np.asarray(x).tolist()} is not a unit of {self.name}")
        return y

    def is_nilpotent(self, x) -> bool:
        return self.is_zero(self.pow(x, self.nil_index))

    def nilpotent_mask(self, xs):
        return ~np.any(self.pow(xs, self.nil_index) % self.moduli, axis=-1)

    # -------------------------------------------------------------- enumeration
    def elements(self):
        """All elements, as an ``(order, k)`` array (exhaustive checks only)."""
        if self.order > 10 ** 5:
            raise RingError(f"{self.name} too large to enumerate ({self.order})")
        grids = [np.arange(int(m)) for m in self.moduli]
        return np.array(list(itertools.product(*grids)), dtype=np.int64).reshape(-1, self.k)

    def residue_representatives(self):
        """A set of elements hitting every residue class (default: all)."""
        return self.elements()

    def units(self):
        els = self.elements()
        return els[self.units_mask(els)]

    def random(self, rng, shape=()):
        shape = tuple(shape) + (self.k,)
        return (rng.integers(0, 2 ** 31, size=shape) % self.moduli).astype(np.int64)

    # -------------------------------------------------------------- structure
    def check_axioms(self, samples=None, rng=None) -> bool:
        """Spot-check commutativity, associativity and unit on basis products."""
        basis = np.eye(self.k, dtype=np.int64) % self.moduli
        xs = basis if samples is None else samples
        one = self.one_vec
        for x in xs:
            if not self.equal(self.mul(one, x), x):
                return False
            for y in xs:
                if not self.equal(self.mul(x, y), self.mul(y, x)):
                    return False
                for z in xs:
                    if not self.equal(self.mul(self.mul(x, y), z), self.mul(x, self.mul(y, z))):
                        return False
        return True

    def to_list(self, x):
        return [int(v) for v in np.asarray(x).reshape(-1)]


class LocalRing(FiniteAlgebra):
    """``Z_p[t]/(m(t))[pi]/(E(pi))`` modulo ``pi^a``.

    ``m`` is a monic lift of an irreducible polynomial of degree ``n`` over
    F_p (the unramified part, residue field F_{p^n}) and ``E`` is an
    Eisenstein polynomial of degree ``e`` with integer coefficients.  This is
    a finite chain ring with uniformizer ``pi`` and ``pi^a = 0``.
    """

    def __init__(self, p, n, eisenstein, a, name=None):
        if not is_prime(p):
            raise RingError(f"{p} is not prime")
        eis = [int(c) for c in eisenstein]
        e = len(eis) - 1
        if e < 1 or eis[-1] != 1:
            raise RingError("Eisenstein polynomial must be monic of degree >= 1")
        if eis[0] == 0 or any(c % p for c in eis[:-1]) or _vp(eis[0], p) != 1:
            raise RingError(f"{eis} is not Eisenstein at {p}")
        self.n, self.e, self.a = int(n), e, int(a)
        self.eisenstein = eis
        self.minpoly = irreducible_poly(p, n)
        basis = [(i, j) for j in range(e) for i in range(n)]
        full_mod = [p ** max(0, -((j - a) // e)) for (i, j) in basis]  # p^ceil((a-j)/e)
        keep = [idx for idx, m in enumerate(full_mod) if m > 1]
        self.basis = [basis[idx] for idx in keep]
        index = {b: t for t, b in enumerate(self.basis)}
        k = len(self.basis)
        big = p ** (-(-a // e) + 1)
        mult = np.zeros((k, k, k), dtype=object)
        for s, (i1, j1) in enumerate(self.basis):
            for u, (i2, j2) in enumerate(self.basis):
                prod = self._reduce_poly({(i1 + i2, j1 + j2): 1}, big)
                for key, c in prod.items():
                    if key in index:
                        mult[s, u, index[key]] = c
        moduli = [full_mod[idx] for idx in keep]
        mult = np.array([[[int(c) % moduli[l] for l, c in enumerate(row)] for row in plane] for plane in mult],
                        dtype=np.int64).reshape(k, k, k)
        one = np.zeros(k, dtype=np.int64)
        one[index[(0, 0)]] = 1
        super().__init__(
            p, moduli, mult, one,
            nil_index=a, residue_degree=n,
            name=name or f"O(p={p},n={n},e={e})/pi^{a}",
        )
        self._index = index

    def _reduce_poly(self, poly: dict, modulus: int) -> dict:
        """Reduce a dict {(t-deg, pi-deg): coeff} by E(pi) and m(t)."""
        e, n = self.e, self.n
        poly = dict(poly)
        changed = True
        while changed:
            changed = False
            for (i, j), c in list(poly.items()):
                if c % modulus == 0:
                    del poly[(i, j)]
                    continue
                if j >= e:
                    del poly[(i, j)]
                    for l, el in enumerate(self.eisenstein[:-1]):
                        key = (i, j - e + l)
                        poly[key] = poly.get(key, 0) - c * el
                    changed = True
                elif i >= n:
                    del poly[(i, j)]
                    for l, ml in enumerate(self.minpoly[:-1]):
                        key = (i - n + l, j)
                        poly[key] = poly.get(key, 0) - c * ml
                    changed = True
        return {key: c % modulus for key, c in poly.items() if c % modulus}

    @cached_property
    def pi(self):
        x = self.zero()
        if (0, 1) in self._index:
            x[self._index[(0, 1)]] = 1
            return x
        return self.from_int(self.p) if self.e == 1 else x

    @cached_property
    def t(self):
        x = self.zero()
        if (1, 0) in self._index:
            x[self._index[(1, 0)]] = 1
            return x
        return self.one_vec.copy()

    def residue_representatives(self):
        reps = []
        tp = [self.pow(self.t, i) for i in range(self.n)]
        for cs in itertools.product(range(self.p), repeat=self.n):
            x = self.zero()
            for c, ti in zip(cs, tp):
                x = self.add(x, self.smul(c, ti))
            reps.append(x)
        return np.array(reps, dtype=np.int64)

    @property
    def residue_order(self) -> int:
        return self.p ** self.n

    def element(self, coeffs):
        """Element from nested coefficients ``coeffs[j][i]`` of ``t^i pi^j``.

        A plain int is an integer; a flat list is read as pi-adic digits with
        integer coefficients.
        """
        if isinstance(coeffs, (int, np.integer)):
            return self.from_int(int(coeffs))
        x = self.zero()
        for j, cj in enumerate(coeffs):
            cj = [cj] if isinstance(cj, (int, np.integer)) else cj
            for i, c in enumerate(cj):
                term = self.mul(self.pow(self.t, i), self.pow(self.pi, j))
                x = self.add(x, self.smul(int(c), term))
        return x

    # ---------------------------------------------------------- chain ring
    def valuation(self, x):
        """pi-adic valuation, vectorised; zero has valuation ``a``."""
        x = np.asarray(x, dtype=np.int64) % self.moduli
        out = np.full(x.shape[:-1], self.a, dtype=np.int64)
        p = self.p
        for l, (i, j) in enumerate(self.basis):
            c = x[..., l]
            vp = np.zeros_like(c)
            cc = c.copy()
            nz = cc != 0
            mask = nz.copy()
            while mask.any():
                divisible = mask & (cc % p == 0)
                vp[divisible] += 1
                cc[divisible] //= p
                mask = divisible
            v = np.where(nz, self.e * vp + j, self.a)
            out = np.minimum(out, v)
        return out

    @cached_property
    def _p_over_pi(self):
        # E(pi) = pi^e + ... + a_1 pi + p u  =>  p/pi = -(pi^{e-1} + ... + a_1)/u
        a0 = self.eisenstein[0]
        u = a0 // self.p
        poly = self.zero()
        for l in range(1, self.e + 1):
            poly = self.add(poly, self.smul(self.eisenstein[l], self.pow(self.pi, l - 1)))
        uinv = pow(u, -1, self.max_modulus)
        return self.smul(-uinv, poly)

    def div_pi(self, x):
        """Some ``z`` with ``pi * z == x``; requires valuation(x) >= 1 (vectorised)."""
        x = np.asarray(x, dtype=np.int64) % self.moduli
        if np.any(self.valuation(x) < 1):
            raise RingError("div_pi of a unit")
        if self.e == 1:
            return (x // self.p) % self.moduli
        out = self.zero(x.shape[:-1])
        for l, (i, j) in enumerate(self.basis):
            c = x[..., l]
            if j >= 1:
                key = self._index[(i, j - 1)]
                out[..., key] = (out[..., key] + c) % self.moduli[key]
            else:
                # c * t^i is divisible by p; (c/p) t^i * (p/pi)
                ti = self.pow(self.t, i)
                term = self.mul(ti, self._p_over_pi)
                out = self.add(out, ((c // self.p)[..., None] * term) % self.moduli)
        return out % self.moduli

    def div_pi_power(self, x, v):
        """Vectorised division by ``pi**v`` (``v`` an int or array of ints)."""
        x = np.asarray(x, dtype=np.int64)
        v = np.broadcast_to(np.asarray(v), x.shape[:-1])
        out = x.copy()
        for step in range(int(v.max()) if v.size else 0):
            mask = v > step
            if mask.any():
                out[mask] = self.div_pi(out[mask])
        return out

    def divide(self, x, y):
        """Some ``z`` with ``y * z == x``; requires valuation(x) >= valuation(y)."""
        vy = self.valuation(y)
        vx = self.valuation(x)
        if np.any(vx < vy):
            raise RingError("divide: valuation of numerator too small")
        uy = self.div_pi_power(y, np.where(vy >= self.a, 0, vy))
        ux = self.div_pi_power(x, np.where(vy >= self.a, 0, vy))
        return self.mul(ux, self.inv(uy))

    def residue_class_mask(self, xs):
        return self.valuation(xs) >= 1


class ProductAlgebra(FiniteAlgebra):
    """Finite product of algebras, coordinates concatenated."""

    def __init__(self, factors, name=None):
        self.factors = list(factors)
        p = self.factors[0].p
        ks = [f.k for f in self.factors]
        k = sum(ks)
        mult = np.zeros((k, k, k), dtype=np.int64)
        one = []
        off = 0
        self.offsets = []
        for f in self.factors:
            s = slice(off, off + f.k)
            mult[s, s, s] = f.mult
            one.extend(f.one_vec.tolist())
            self.offsets.append(off)
            off += f.k
        moduli = np.concatenate([f.moduli for f in self.factors])
        rd = 1
        for f in self.factors:
            rd = math.lcm(rd, f.residue_degree)
        super().__init__(
            p, moduli, mult, one,
            nil_index=max(f.nil_index for f in self.factors),
            residue_degree=rd,
            name=name or " x ".join(f.name for f in self.factors),
        )

    def component(self, x, i):
        f = self.factors[i]
        off = self.offsets[i]
        return np.asarray(x)[..., off:off + f.k]

    def assemble(self, parts):
        return np.concatenate([np.asarray(q) for q in parts], axis=-1)


class PolynomialExtension(FiniteAlgebra):
    """``B = A[y]/(m(y))`` for a monic ``m`` with coefficients in ``A``.

    Coordinates are ``(A-coordinate) x (power of y)``, y-power major.
    """

    def __init__(self, base: FiniteAlgebra, modulus_coeffs, name=None, residue_degree=None):
        self.base = base
        m = [base.reduce(c) for c in modulus_coeffs]
        if not base.equal(m[-1], base.one_vec):
            raise RingError("modulus polynomial must be monic")
        r = len(m) - 1
        self.degree = r
        self.modulus_coeffs = m
        kb = base.k
        k = kb * r
        # y^s for s < 2r-1 reduced, as (r, kb) arrays
        powers = []
        cur = np.zeros((r, kb), dtype=np.int64)
        cur[0] = base.one_vec
        for s in range(2 * r - 1):
            powers.append(cur.copy())
            top = cur[r - 1].copy()
            nxt = np.zeros_like(cur)
            nxt[1:] = cur[:-1]
            for l in range(r):
                nxt[l] = base.sub(nxt[l], base.mul(top, m[l]))
            cur = nxt
        mult = np.zeros((k, k, k), dtype=np.int64)
        eye = np.eye(kb, dtype=np.int64)
        for s1 in range(r):
            for s2 in range(r):
                ypow = powers[s1 + s2]  # (r, kb)
                for i1 in range(kb):
                    for i2 in range(kb):
                        prod = base.mul(eye[i1], eye[i2])  # (kb,)
                        # prod * y^(s1+s2) = sum_l base.mul(prod, ypow[l]) y^l
                        for l in range(r):
                            c = base.mul(prod, ypow[l])
                            mult[s1 * kb + i1, s2 * kb + i2, l * kb:(l + 1) * kb] += c
        moduli = np.tile(base.moduli, r)
        one = np.zeros(k, dtype=np.int64)
        one[:kb] = base.one_vec
        rd = residue_degree if residue_degree is not None else r
        super().__init__(
            base.p, moduli, mult % np.tile(base.moduli, r), one,
            nil_index=base.nil_index * r,
            residue_degree=base.residue_degree * rd,
            name=name or f"{base.name}[y]/(deg {r})",
        )

    @cached_property
    def y(self):
        x = self.zero()
        if self.degree > 1:
            x[self.base.k:2 * self.base.k] = self.base.one_vec
        else:
            x[:] = self.base.neg(self.modulus_coeffs[0])
        return x

    def embed(self, a):
        """Image of a base element."""
        a = np.asarray(a)
        out = self.zero(a.shape[:-1])
        out[..., :self.base.k] = a
        return out

    def coefficients(self, x):
        """``x`` as an ``(..., r, kb)`` array of base coefficients of ``y^l``."""
        x = np.asarray(x)
        return x.reshape(x.shape[:-1] + (self.degree, self.base.k))

    def from_coefficients(self, cs):
        cs = np.asarray(cs)
        return cs.reshape(cs.shape[:-2] + (self.degree * self.base.k,))

    def eval_at(self, x, root):
        """Evaluate ``x = sum c_l y^l`` at ``y = root`` in the base ring."""
        cs = self.coefficients(x)
        out = self.base.zero(cs.shape[:-2])
        rp = self.base.one_vec
        for l in range(self.degree):
            out = self.base.add(out, self.base.mul(cs[..., l, :], rp))
            rp = self.base.mul(rp, root)
        return out


def dual_numbers(base: FiniteAlgebra) -> PolynomialExtension:
    """``A[eps]/(eps^2)``."""
    z = base.zero()
    return PolynomialExtension(base, [z, z, base.one_vec], name=f"{base.name}[eps]", residue_degree=1)


# ---------------------------------------------------------------- polynomials
def _poly_mod_p_irreducible(coeffs, p) -> bool:
    n = len(coeffs) - 1
    if n == 1:
        return True
    # brute force: no monic factor of degree <= n/2
    for d in range(1, n // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            g = list(tail) + [1]
            if _polymod(coeffs, g, p) == [0] * d:
                return False
    return True


def _polymod(f, g, p):
    f = [c % p for c in f]
    dg = len(g) - 1
    while len(f) - 1 >= dg and any(f):
        c = f[-1]
        shift = len(f) - 1 - dg
        for i, gc in enumerate(g):
            f[shift + i] = (f[shift + i] - c * gc) % p
        f.pop()
    f = f + [0] * (dg - len(f))
    return f[:dg]


_IRRED_CACHE: dict = {}


def irreducible_poly(p: int, n: int) -> list[int]:
    """Lexicographically first monic irreducible of degree n over F_p, as ints."""
    if n == 1:
        return [0, 1]
    key = (p, n)
    if key not in _IRRED_CACHE:
        for tail in itertools.product(range(p), repeat=n):
            f = list(tail) + [1]
            if f[0] and _poly_mod_p_irreducible(f, p):
                _IRRED_CACHE[key] = f
                break
    return list(_IRRED_CACHE[key])


def hensel_root(ring: FiniteAlgebra, poly, candidates=None):
    """A root in ``ring`` of the monic ``poly`` (list of ring elements),
    found by residue search then Newton iteration.  Returns None if absent."""
    poly = [ring.reduce(c) for c in poly]

    def ev(x, cs):
        out = ring.zero(np.shape(x)[:-1])
        for c in reversed(cs):
            out = ring.add(ring.mul(out, x), c)
        return out

    deriv = [ring.smul(i, c) for i, c in enumerate(poly)][1:]
    xs = ring.residue_representatives() if candidates is None else candidates
    vals = ev(xs, poly)
    dvals = ev(xs, deriv)
    ok_d = ring.units_mask(dvals)
    for x, dv, good in zip(xs, dvals, ok_d):
        if not good:
            continue
        # residue root test: poly(x) nilpotent
        if not ring.is_nilpotent(ev(x, poly)):
            continue
        r = x.copy()
        for _ in range(ring.nil_index.bit_length() + 2):
            r = ring.sub(r, ring.mul(ev(r, poly), ring.inv(ev(r, deriv))))
        if ring.is_zero(ev(r, poly)):
            return r
    del vals
    return None
