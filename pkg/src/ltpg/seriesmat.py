"""Matrices over A((T)) stored as one dense coefficient block, and substitution operators."""

from __future__ import annotations

import numpy as np

from .laurent import EXACT, PrecisionError, TruncatedSeries
from .linalg import ring_matmul
from .rings import FiniteAlgebra, NotAUnit, RingError


class SeriesMatrix:
    """An (r, c) matrix of Laurent series with common valuation window and precision.

    ``coeffs[i, j, l]`` is the coefficient of ``T^(valuation + l)`` of entry (i, j).
    """

    __slots__ = ("ring", "coeffs", "valuation", "precision")

    def __init__(self, ring: FiniteAlgebra, coeffs, valuation, precision):
        coeffs = np.asarray(coeffs, dtype=np.int64) % ring.moduli
        precision = int(precision)
        valuation = int(valuation)
        L = max(0, precision - valuation)
        coeffs = coeffs[:, :, :L]
        nz = np.flatnonzero(coeffs.any(axis=(0, 1, 3)))
        if len(nz) == 0:
            coeffs = coeffs[:, :, :0]
            valuation = precision
        else:
            valuation += int(nz[0])
            coeffs = coeffs[:, :, nz[0]:nz[-1] + 1]
        self.ring, self.coeffs, self.valuation, self.precision = ring, coeffs, valuation, precision

    # ------------------------------------------------------------ construction
    @property
    def shape(self):
        return self.coeffs.shape[:2]

    @classmethod
    def zeros(cls, ring, r, c, precision):
        return cls(ring, np.zeros((r, c, 0, ring.k)), 0, precision)

    @classmethod
    def identity(cls, ring, d, precision=EXACT):
        co = np.zeros((d, d, 1, ring.k), dtype=np.int64)
        for i in range(d):
            co[i, i, 0] = ring.one_vec
        return cls(ring, co, 0, precision)

    @classmethod
    def constant(cls, ring, mat, precision=EXACT):
        mat = np.asarray(mat, dtype=np.int64)
        return cls(ring, mat[:, :, None, :], 0, precision)

    @classmethod
    def from_entries(cls, ring, entries):
        """From a nested list of TruncatedSeries."""
        flat = [s for row in entries for s in row]
        N = min(s.precision for s in flat)
        nonzero = [s for s in flat if not s.truncate(N).is_zero()]
        v = min((s.valuation for s in nonzero), default=0)
        v = min(v, N)
        hi = max((min(N, s.valuation + len(s.coeffs)) for s in nonzero), default=v)
        r, c = len(entries), len(entries[0])
        co = np.zeros((r, c, max(hi - v, 0), ring.k), dtype=np.int64)
        for i, row in enumerate(entries):
            for j, s in enumerate(row):
                if s.ring != ring:
                    raise RingError("entries over different rings")
                co[i, j] = s.truncate(N).dense(v, hi) if hi > v else co[i, j]
        return cls(ring, co, v, N)

    def entry(self, i, j) -> TruncatedSeries:
        return TruncatedSeries(self.ring, self.coeffs[i, j], self.valuation, self.precision)

    def entries(self):
        r, c = self.shape
        return [[self.entry(i, j) for j in range(c)] for i in range(r)]

    def dense(self, lo, hi):
        if hi > self.precision:
            raise PrecisionError(f"need precision {hi}, have {self.precision}")
        r, c = self.shape
        out = np.zeros((r, c, max(hi - lo, 0), self.ring.k), dtype=np.int64)
        s = max(lo, self.valuation)
        t = min(hi, self.valuation + self.coeffs.shape[2])
        if t > s:
            out[:, :, s - lo:t - lo] = self.coeffs[:, :, s - self.valuation:t - self.valuation]
        return out

    def __repr__(self):
        return f"SeriesMatrix({self.shape}, v={self.valuation}, N={self.precision})"

    # ------------------------------------------------------------ arithmetic
    def truncate(self, N):
        return SeriesMatrix(self.ring, self.coeffs, self.valuation, min(N, self.precision))

    def is_zero(self):
        return self.coeffs.shape[2] == 0

    def _end(self):
        return self.valuation + self.coeffs.shape[2]

    def __add__(self, other):
        N = min(self.precision, other.precision)
        parts = [m for m in (self, other) if not m.is_zero()]
        v = min([m.valuation for m in parts] + [N])
        hi = max(min(N, max((m._end() for m in parts), default=v)), v)
        return SeriesMatrix(self.ring, self.dense(v, hi) + other.dense(v, hi), v, N)

    def __neg__(self):
        return SeriesMatrix(self.ring, self.ring.neg(self.coeffs), self.valuation, self.precision)

    def __sub__(self, other):
        return self + (-other)

    def shift(self, m):
        return SeriesMatrix(self.ring, self.coeffs, self.valuation + m, self.precision + m)

    def scale(self, c):
        return SeriesMatrix(self.ring, self.ring.mul(self.coeffs, np.asarray(c)), self.valuation, self.precision)

    def __matmul__(self, other):
        R = self.ring
        v = self.valuation + other.valuation
        N = min(self.valuation + other.precision, other.valuation + self.precision)
        La, Lb = self.coeffs.shape[2], other.coeffs.shape[2]
        L = max(0, min(N - v, La + Lb - 1))
        r, c = self.shape[0], other.shape[1]
        out = np.zeros((r, c, L, R.k), dtype=np.int64)
        if L and La and Lb:
            # out[:, :, l] = sum_{l1 + l2 = l} A_l1 @ B_l2
            B = other.coeffs  # (m, c, Lb, k)
            for l1 in range(min(La, L)):
                Al = self.coeffs[:, :, l1]  # (r, m, k)
                if not Al.any():
                    continue
                n2 = min(Lb, L - l1)
                Bl = B[:, :, :n2].reshape(B.shape[0], c * n2, R.k)
                prod = ring_matmul(R, Al, Bl).reshape(r, c, n2, R.k)
                out[:, :, l1:l1 + n2] = R.add(out[:, :, l1:l1 + n2], prod)
        return SeriesMatrix(R, out, v, N)

    def transpose(self):
        return SeriesMatrix(self.ring, self.coeffs.transpose(1, 0, 2, 3), self.valuation, self.precision)

    def equals(self, other, precision=None):
        d = self - other
        if precision is not None:
            d = d.truncate(precision)
        return d.is_zero()

    def first_difference(self, other):
        """(i, j, exponent) of the first disagreeing coefficient, or None."""
        d = self - other
        if d.is_zero():
            return None
        l = 0
        i, j = np.argwhere(d.coeffs[:, :, l].any(axis=-1))[0]
        return int(i), int(j), int(d.valuation)

    def map_coefficients(self, fn, ring):
        co = self.coeffs
        return SeriesMatrix(ring, fn(co) if co.size else np.zeros(co.shape[:3] + (ring.k,)),
                            self.valuation, self.precision)

    def min_valuation(self):
        return self.valuation if not self.is_zero() else self.precision

    def kron(self, other):
        """Kronecker product (as for column-major vectorisation)."""
        r1, c1 = self.shape
        r2, c2 = other.shape
        blocks = []
        for i in range(r1):
            row = []
            for j in range(c1):
                row.append(_scalar_times(self.entry(i, j), other))
            blocks.append(row)
        return block(blocks)

    def inverse(self):
        return matrix_inverse(self)

    def to_json(self):
        return [[self.entry(i, j).to_json() for j in range(self.shape[1])] for i in range(self.shape[0])]


def _scalar_times(s: TruncatedSeries, M: SeriesMatrix) -> SeriesMatrix:
    S = SeriesMatrix(M.ring, s.coeffs[None, None], s.valuation, s.precision)
    r, c = M.shape
    flat = SeriesMatrix(M.ring, M.coeffs.reshape(1, r * c, -1, M.ring.k), M.valuation, M.precision)
    prod = S @ flat
    return SeriesMatrix(M.ring, prod.coeffs.reshape(r, c, -1, M.ring.k), prod.valuation, prod.precision)


def block(rows):
    """Assemble a block matrix from a nested list of SeriesMatrix."""
    R = rows[0][0].ring
    N = min(b.precision for row in rows for b in row)
    nz = [b for row in rows for b in row if not b.truncate(N).is_zero()]
    v = min([b.valuation for b in nz] + [N])
    hi = max([min(N, b._end()) for b in nz] + [v])
    out = np.concatenate(
        [np.concatenate([b.truncate(N).dense(v, hi) for b in row], axis=1) for row in rows], axis=0)
    return SeriesMatrix(R, out, v, N)


def matrix_inverse(M: SeriesMatrix) -> SeriesMatrix:
    """Gauss-Jordan over the local ring A((T)) (A local): a unit pivot always exists.

    An exact constant matrix is inverted exactly over A.
    """
    d = M.shape[0]
    if M.precision >= EXACT and (M.is_zero() or (M.valuation == 0 and M.coeffs.shape[2] == 1)):
        from .base_rings import mat_inverse

        try:
            return SeriesMatrix.constant(M.ring, mat_inverse(M.ring, M.dense(0, 1)[:, :, 0]))
        except RingError as exc:
            raise NotAUnit(str(exc)) from exc
    rows = [[M.entry(i, j) for j in range(d)] for i in range(d)]
    R = M.ring
    inv = [[TruncatedSeries.one(R, EXACT) if i == j else TruncatedSeries.zero(R, EXACT)
            for j in range(d)] for i in range(d)]
    for col in range(d):
        piv = None
        best = None
        for r in range(col, d):
            e = rows[r][col]
            if e.is_unit():
                key = e.unit_index()
                if best is None or key < best:
                    piv, best = r, key
        if piv is None:
            raise NotAUnit(f"matrix not invertible (column {col})")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        pinv = rows[col][col].invert()
        rows[col] = [x * pinv for x in rows[col]]
        inv[col] = [x * pinv for x in inv[col]]
        for r in range(d):
            if r == col:
                continue
            f = rows[r][col]
            if f.is_zero():
                continue
            rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return SeriesMatrix.from_entries(R, inv)


def determinant(M: SeriesMatrix) -> TruncatedSeries:
    """Determinant by cofactor expansion (d is small)."""
    d = M.shape[0]
    E = M.entries()

    def det(rows, cols):
        if len(rows) == 1:
            return E[rows[0]][cols[0]]
        acc = None
        for idx, c in enumerate(cols):
            minor = det(rows[1:], cols[:idx] + cols[idx + 1:])
            term = E[rows[0]][c] * minor
            if idx % 2:
                term = -term
            acc = term if acc is None else acc + term
        return acc

    return det(list(range(d)), list(range(d)))


class SubstitutionOperator:
    """f(T) -> f(s(T)) on series and matrices, from cached powers of s and 1/s."""

    def __init__(self, s: TruncatedSeries, name="sigma"):
        if s.valuation < 0 or s.unit_index() is None or s.unit_index() < 1:
            raise RingError("substitution series must be nilpotent-constant with unit part in T A[[T]]")
        self.s = s
        self.name = name
        self.ring = s.ring
        self._pos = [TruncatedSeries.one(s.ring, EXACT)]
        self._neg = [TruncatedSeries.one(s.ring, EXACT)]
        self._inv = None
        self._neg_prec = None

    def power(self, j, precision):
        """s^j known at least to ``precision`` if possible."""
        if j >= 0:
            while len(self._pos) <= j:
                self._pos.append(self._pos[-1] * self.s)
            return self._pos[j]
        exact = self.s.precision >= EXACT
        u = self.s.unit_index()
        if self._inv is None:
            self._set_inverse(precision + 2 * u if exact else None)
        for _ in range(8):
            while len(self._neg) <= -j:
                self._neg.append(self._neg[-1] * self._inv)
            out = self._neg[-j]
            if not exact or out.precision >= precision:
                return out
            self._set_inverse(self._cap + (precision - out.precision) + u)
        return out

    def _set_inverse(self, cap):
        self._cap = cap
        self._inv = self.s.invert(cap)
        self._neg_prec = self._inv.precision
        self._neg = [TruncatedSeries.one(self.ring, EXACT)]

    def tail_bound(self, N, cap=None):
        """Lower bound for the T-valuation of s^N A[[T]] (truncation error of inputs), capped."""
        if N <= 0:
            return N if N < 0 else 0
        if N < len(self._pos):
            t = self._pos[N]
        else:
            cap = N * max(1, self.s.unit_index()) + 1 if cap is None else cap
            t = self.s.truncate(cap) ** N
        return t.valuation if not t.is_zero() else t.precision

    def apply_series(self, f: TruncatedSeries, target=None) -> TruncatedSeries:
        M = SeriesMatrix(f.ring, f.coeffs[None, None], f.valuation, f.precision)
        return self.apply(M, target).entry(0, 0)

    def apply(self, M: SeriesMatrix, target=None) -> SeriesMatrix:
        R = self.ring
        if M.ring != R:
            raise RingError("operator and matrix over different rings")
        N = M.precision
        bound = self.tail_bound(N, target) if N < EXACT else EXACT
        out_prec = bound if target is None else min(bound, target)
        if M.is_zero():
            return SeriesMatrix.zeros(R, *M.shape, out_prec)
        lo_j, hi_j = M.valuation, M._end()
        powers = [self.power(j, out_prec) for j in range(lo_j, hi_j)]
        out_prec = min([out_prec] + [p.precision for p in powers])
        if out_prec >= EXACT:
            raise PrecisionError("substitution result would be exact; give a target precision")
        nz = [p for p in powers if not p.truncate(out_prec).is_zero()]
        v = min([p.valuation for p in nz] + [out_prec])
        hi = max([min(out_prec, p.valuation + len(p.coeffs)) for p in nz] + [v])
        S = np.stack([p.truncate(out_prec).dense(v, hi) for p in powers])  # (J, L, k)
        C = M.coeffs  # (r, c, J, k)
        r, c, J, _ = C.shape
        Cf = C.reshape(r * c, J, R.k)
        L = S.shape[1]
        out = ring_matmul(R, Cf, S)
        return SeriesMatrix(R, out.reshape(r, c, L, R.k), v, out_prec)
