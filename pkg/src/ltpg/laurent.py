"""Truncated Laurent series over a finite coefficient algebra.

A series is known modulo ``T^N`` (its *precision*); the nonzero window of
coefficients is stored as a dense ``(length, k)`` array.  Precision is propagated by the
usual rule ``prec(fg) = min(v_f + N_g, v_g + N_f)``.
"""

from __future__ import annotations

import numpy as np

from .rings import FiniteAlgebra, NotAUnit, ProductAlgebra, RingError


class PrecisionError(RingError):
    pass


def convolve(ring: FiniteAlgebra, a, b, length: int):
    """First ``length`` coefficients of the product of two coefficient arrays."""
    out = np.zeros((max(length, 0), ring.k), dtype=np.int64)
    if length <= 0 or len(a) == 0 or len(b) == 0:
        return out
    a = np.asarray(a[:length], dtype=np.int64)
    b = np.asarray(b[:length], dtype=np.int64)
    M = ring.max_modulus
    if M * M * min(len(a), len(b)) >= 2 ** 62:
        raise OverflowError("series too long for int64 convolution at this modulus")
    mult = ring.mult
    for i in range(ring.k):
        ai = a[:, i]
        if not ai.any():
            continue
        for j in range(ring.k):
            w = mult[i, j]
            if not w.any():
                continue
            bj = b[:, j]
            if not bj.any():
                continue
            c = np.convolve(ai, bj)[:length] % M
            out[: len(c)] = (out[: len(c)] + c[:, None] * w) % ring.moduli
    return out


EXACT = 1 << 40  # precision of exactly known (polynomial) series


class TruncatedSeries:
    """An element of A((T)) known modulo T^precision.

    Stored coefficients are trimmed at both ends; missing ones are zero.
    """

    __slots__ = ("ring", "valuation", "coeffs", "precision")

    def __init__(self, ring: FiniteAlgebra, coeffs, valuation: int, precision: int):
        coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1, ring.k) % ring.moduli
        precision = int(precision)
        valuation = int(valuation)
        n = max(0, precision - valuation)
        coeffs = coeffs[:n]
        nz = np.flatnonzero(coeffs.any(axis=1))
        if len(nz) == 0:
            valuation, coeffs = precision, coeffs[:0]
        else:
            valuation += int(nz[0])
            coeffs = coeffs[nz[0]:nz[-1] + 1]
        self.ring = ring
        self.valuation = valuation
        self.coeffs = coeffs
        self.precision = precision

    # ---------------------------------------------------------------- builders
    @classmethod
    def zero(cls, ring, precision):
        return cls(ring, np.zeros((0, ring.k)), precision, precision)

    @classmethod
    def constant(cls, ring, c, precision):
        return cls(ring, np.asarray(c).reshape(1, ring.k), 0, precision)

    @classmethod
    def one(cls, ring, precision):
        return cls.constant(ring, ring.one_vec, precision)

    @classmethod
    def monomial(cls, ring, c, exponent, precision):
        return cls(ring, np.asarray(c).reshape(1, ring.k), exponent, precision)

    @classmethod
    def T(cls, ring, precision, power=1):
        return cls.monomial(ring, ring.one_vec, power, precision)

    @classmethod
    def from_ints(cls, ring, ints, valuation=0, precision=None):
        """Series with integer coefficients ``ints[i]`` at exponent ``valuation + i``."""
        if precision is None:
            precision = valuation + len(ints)
        cs = np.stack([ring.from_int(c) for c in ints]) if len(ints) else np.zeros((0, ring.k))
        return cls(ring, cs, valuation, precision)

    @classmethod
    def from_dict(cls, ring, d: dict, precision):
        if not d:
            return cls.zero(ring, precision)
        lo = min(d)
        hi = min(precision, max(d) + 1)
        cs = np.zeros((max(hi - lo, 0), ring.k), dtype=np.int64)
        for e, c in d.items():
            if e < precision:
                cs[e - lo] = np.asarray(c, dtype=np.int64)
        return cls(ring, cs, lo, precision)

    # ---------------------------------------------------------------- access
    def __repr__(self):
        return f"TruncatedSeries(v={self.valuation}, N={self.precision}, ring={self.ring.name})"

    def coefficient(self, e):
        if e >= self.precision:
            raise PrecisionError(f"coefficient of T^{e} unknown (precision {self.precision})")
        if e < self.valuation or e >= self.valuation + len(self.coeffs):
            return self.ring.zero()
        return self.coeffs[e - self.valuation]

    def dense(self, lo, hi):
        """Coefficients of exponents ``lo .. hi-1`` as an array (zero below v)."""
        if hi > self.precision:
            raise PrecisionError(f"need precision {hi}, have {self.precision}")
        out = np.zeros((max(hi - lo, 0), self.ring.k), dtype=np.int64)
        s, t = max(lo, self.valuation), min(hi, self.valuation + len(self.coeffs))
        if t > s:
            out[s - lo:t - lo] = self.coeffs[s - self.valuation:t - self.valuation]
        return out

    def is_zero(self):
        return len(self.coeffs) == 0

    def is_integral(self):
        """True if the series lies in A[[T]] to its precision."""
        return self.valuation >= 0

    def to_dict(self):
        return {self.valuation + i: c for i, c in enumerate(self.coeffs) if c.any()}

    def truncate(self, precision):
        precision = min(int(precision), self.precision)
        return TruncatedSeries(self.ring, self.coeffs, self.valuation, precision)

    def _check(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"expected TruncatedSeries, got {type(other).__name__}")
        if other.ring is not self.ring and other.ring != self.ring:
            raise RingError(f"mismatched coefficient rings {self.ring.name} / {other.ring.name}")

    def equals(self, other, precision=None):
        """Equality on the common window of known coefficients."""
        self._check(other)
        n = min(self.precision, other.precision)
        if precision is not None:
            n = min(n, precision)
        return (self - other).truncate(n).is_zero()

    # ---------------------------------------------------------------- arithmetic
    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(self.ring, self.ring.from_int(other), self.precision)
        self._check(other)
        N = min(self.precision, other.precision)
        v = min(self.valuation, other.valuation, N)
        ends = [x.valuation + len(x.coeffs) for x in (self, other) if len(x.coeffs)]
        hi = max(min(N, max(ends)), v) if ends else v
        return TruncatedSeries(self.ring, self.dense(v, hi) + other.dense(v, hi), v, N)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.ring, self.ring.neg(self.coeffs), self.valuation, self.precision)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + (-int(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Multiply by a coefficient-ring element (or an int)."""
        c = self.ring.from_int(c) if np.isscalar(c) else np.asarray(c)
        return TruncatedSeries(self.ring, self.ring.mul(self.coeffs, c), self.valuation, self.precision)

    def shift(self, m):
        """Multiply by T^m."""
        return TruncatedSeries(self.ring, self.coeffs, self.valuation + m, self.precision + m)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other)
        v = self.valuation + other.valuation
        N = min(self.valuation + other.precision, other.valuation + self.precision)
        length = min(N - v, len(self.coeffs) + len(other.coeffs) - 1)
        return TruncatedSeries(self.ring, convolve(self.ring, self.coeffs, other.coeffs, length), v, N)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.invert() ** (-n)
        out = TruncatedSeries.one(self.ring, EXACT)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def map_coefficients(self, fn, ring):
        """Apply a coordinate map ``fn`` (e.g. a ring homomorphism) coefficientwise."""
        return TruncatedSeries(ring, fn(self.coeffs) if len(self.coeffs) else np.zeros((0, ring.k)),
                               self.valuation, self.precision)

    # ---------------------------------------------------------------- inversion
    def unit_index(self):
        """Exponent of the first coefficient that is not nilpotent, or None."""
        if self.is_zero():
            return None
        mask = ~self.ring.nilpotent_mask(self.coeffs)
        idx = np.flatnonzero(mask)
        return None if len(idx) == 0 else self.valuation + int(idx[0])

    def is_unit(self):
        if isinstance(self.ring, ProductAlgebra):
            return all(s.is_unit() for s in self.components())
        m = self.unit_index()
        return m is not None and self.ring.is_unit(self.coefficient(m))

    def components(self):
        R = self.ring
        return [TruncatedSeries(F, R.component(self.coeffs, i), self.valuation, self.precision)
                for i, F in enumerate(R.factors)]

    def invert(self, precision=None):
        """Multiplicative inverse; ``precision`` caps the work for exact inputs."""
        R = self.ring
        if precision is not None:
            self = self.truncate(precision)
        if self.precision >= EXACT:
            raise PrecisionError("inverting an exact series needs an explicit precision")
        if isinstance(R, ProductAlgebra):
            parts = [s.invert() for s in self.components()]
            v = min(s.valuation for s in parts)
            N = min(s.precision for s in parts)
            arr = R.assemble([s.dense(v, N) for s in parts])
            return TruncatedSeries(R, arr, v, N)
        m = self.unit_index()
        if m is None or not R.is_unit(self.coefficient(m)):
            raise NotAUnit("series is not a unit: no unit coefficient modulo nilpotents")
        c_inv = R.inv(self.coefficient(m))
        g = self.shift(-m).scale(c_inv) - 1  # u/c - 1, lower part nilpotent
        cut = max(0, 1 - g.valuation)
        g_plus = TruncatedSeries(R, g.coeffs[cut:], g.valuation + cut, g.precision)
        g_minus = g - g_plus
        w = _invert_one_plus(g_plus)
        n = w * g_minus
        # (1 + n)^{-1} with n nilpotent: finite geometric series
        acc = TruncatedSeries.one(R, n.precision)
        term = TruncatedSeries.one(R, n.precision)
        for _ in range(R.nil_index):
            term = -(term * n)
            if term.is_zero():
                break
            acc = acc + term
        else:
            if not term.is_zero():
                raise RingError("nilpotent correction did not terminate")
        return (w * acc).scale(c_inv).shift(-m)

    # ---------------------------------------------------------------- substitution
    def substitute(self, s: "TruncatedSeries", s_inverse: "TruncatedSeries | None" = None):
        """f(s(T)) for s with nilpotent low part and a unit leading term in positive degree."""
        self._check(s)
        R = self.ring
        if s.unit_index() is None or s.unit_index() < 1:
            raise RingError("substitution needs s with non-nilpotent part in T A[[T]]")
        if s.valuation < 0:
            raise RingError("substitution needs s in A[[T]]")
        if not R.is_nilpotent(s.coefficient(0)) if s.precision > 0 else False:
            raise RingError("constant term of s is not nilpotent")
        N = self.precision
        result = TruncatedSeries.zero(R, EXACT)
        if self.valuation < N and self.valuation < 0:
            if s_inverse is None:
                cap = N if N < EXACT else s.precision
                if cap >= EXACT:
                    raise PrecisionError("substituting into an exact Laurent series needs finite precision")
                s_inverse = s.invert(cap + 4 * s.unit_index() * (1 - self.valuation))
            sinv = s_inverse
            neg = {e: c for e, c in self.to_dict().items() if e < 0}
            result = result + _horner({-e: c for e, c in neg.items()}, sinv, R, zero_term=False)
        pos = {e: c for e, c in self.to_dict().items() if e >= 0}
        result = result + _horner(pos, s, R)
        # truncation of f at T^N contributes s^N * (A[[T]]): bound by v(s^N)
        if 0 <= N < EXACT:
            # v(s^N) <= N u for the unit index u, so s mod T^(N u + 1) decides it
            cap = N * s.unit_index() + 1
            tail = s.truncate(cap) ** N if N > 0 else TruncatedSeries.one(R, s.precision)
            bound = tail.valuation if not tail.is_zero() else tail.precision
            result = result.truncate(bound)
        if result.precision <= result.valuation and result.precision <= 0 and not result.is_zero():
            raise PrecisionError("no certified coefficient after substitution")
        return result

    # ---------------------------------------------------------------- JSON
    def to_json(self):
        return {
            "valuation": int(self.valuation),
            "precision": "exact" if self.precision >= EXACT else int(self.precision),
            "coeffs": {str(self.valuation + i): [int(x) for x in c] for i, c in enumerate(self.coeffs)},
        }

    @classmethod
    def from_json(cls, ring, d):
        N = d.get("precision", "exact")
        N = EXACT if N == "exact" else int(N)
        coeffs = {}
        for e, c in d.get("coeffs", {}).items():
            # a bare integer is the image of that integer in the ring
            coeffs[int(e)] = [int(x) for x in ring.from_int(c)] if isinstance(c, int) else [int(x) for x in c]
        for e, c in coeffs.items():
            if len(c) != ring.k:
                raise RingError(f"coefficient of T^{e} has {len(c)} coordinates, expected {ring.k}")
        s = cls.from_dict(ring, coeffs, N)
        if "valuation" in d and coeffs and s.valuation < int(d["valuation"]):
            raise RingError("stored valuation exceeds first nonzero coefficient")
        return s


def _invert_one_plus(g: TruncatedSeries) -> TruncatedSeries:
    """(1 + g)^{-1} for g in T A[[T]], by Newton iteration."""
    R = g.ring
    N = g.precision
    u = g + 1
    w = TruncatedSeries.one(R, 1)
    n = 1
    while n < N:
        n = min(2 * n, N)
        w = TruncatedSeries(R, w.coeffs, w.valuation, n)
        uw = u.truncate(n) * w
        w = (w * (2 - uw)).truncate(n)
    return w.truncate(N)


def _horner(coeff_dict, s, R, zero_term=True):
    if not coeff_dict:
        return TruncatedSeries.zero(R, EXACT)
    top = max(coeff_dict)
    acc = TruncatedSeries.zero(R, EXACT)
    for e in range(top, -1, -1):
        acc = acc * s if e != top else acc
        if e in coeff_dict:
            acc = acc + TruncatedSeries.constant(R, coeff_dict[e], EXACT)
    return acc
