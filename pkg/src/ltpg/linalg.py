"""Matrices over finite chain rings O/varpi^a: products, Smith form, kernels, solving."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rings import FiniteAlgebra, LocalRing, RingError


def ring_matmul(R: FiniteAlgebra, X, Y):
    """Matrix product over R of (n, m, k) by (m, l, k) arrays."""
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    if R.k == 1:
        M = R.max_modulus
        if X.shape[1] * M * M >= 2 ** 62:
            out = np.zeros((X.shape[0], Y.shape[1]), dtype=np.int64)
            step = max(1, (2 ** 62) // (M * M) - 1)
            for s in range(0, X.shape[1], step):
                out = (out + X[:, s:s + step, 0] @ Y[s:s + step, :, 0]) % M
            return out[..., None]
        return ((X[..., 0] @ Y[..., 0]) % R.moduli[0])[..., None]
    Z = np.einsum("abi,bcj->acij", X, Y) % R.max_modulus
    return np.einsum("acij,ijt->act", Z, R.mult) % R.moduli


def mat_vec(R, M, v):
    return ring_matmul(R, M, np.asarray(v)[:, None, :])[:, 0, :]


def identity(R, n):
    out = R.zero((n, n))
    for i in range(n):
        out[i, i] = R.one_vec
    return out


@dataclass
class SmithForm:
    """L @ M @ Rm = D with D diagonal (entries varpi^t, t = a meaning zero)."""

    L: np.ndarray
    Linv: np.ndarray
    Rm: np.ndarray
    D: np.ndarray
    exponents: list  # t_i for i < min(m, n)

    @property
    def rank_free(self):
        return sum(1 for t in self.exponents if t == 0)


def _require_chain(R):
    if not isinstance(R, LocalRing):
        raise RingError("Smith form is implemented over chain rings O/varpi^a only")


def smith(R: LocalRing, M, track=True) -> SmithForm:
    _require_chain(R)
    M = np.array(M, dtype=np.int64) % R.moduli
    m, n = M.shape[:2]
    L = identity(R, m) if track else None
    Linv = identity(R, m) if track else None
    Rm = identity(R, n) if track else None
    exps = []
    for s in range(min(m, n)):
        sub = M[s:, s:]
        vals = R.valuation(sub)
        if vals.size == 0 or vals.min() >= R.a:
            exps.extend([R.a] * (min(m, n) - s))
            break
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        i, j = i + s, j + s
        v = int(vals.min())
        if i != s:
            M[[s, i]] = M[[i, s]]
            if track:
                L[[s, i]] = L[[i, s]]
                Linv[:, [s, i]] = Linv[:, [i, s]]
        if j != s:
            M[:, [s, j]] = M[:, [j, s]]
            if track:
                Rm[:, [s, j]] = Rm[:, [j, s]]
        piv = M[s, s]
        unit = R.div_pi_power(piv, v)
        uinv = R.inv(unit)
        # normalise pivot to varpi^v
        M[s] = R.mul(M[s], uinv)
        if track:
            L[s] = R.mul(L[s], uinv)
            Linv[:, s] = R.mul(Linv[:, s], unit)
        # clear column below
        below = M[s + 1:, s]
        if below.any():
            fac = R.div_pi_power(below, v)  # below = fac * varpi^v
            M[s + 1:] = R.sub(M[s + 1:], R.mul(fac[:, None, :], M[s][None]))
            if track:
                L[s + 1:] = R.sub(L[s + 1:], R.mul(fac[:, None, :], L[s][None]))
                Linv[:, s] = R.add(Linv[:, s], ring_matmul(R, Linv[:, s + 1:], fac[:, None, :])[:, 0])
        # clear row to the right
        right = M[s, s + 1:]
        if right.any():
            fac = R.div_pi_power(right, v)
            M[:, s + 1:] = R.sub(M[:, s + 1:], R.mul(M[:, s][:, None, :], fac[None]))
            if track:
                Rm[:, s + 1:] = R.sub(Rm[:, s + 1:], R.mul(Rm[:, s][:, None, :], fac[None]))
        exps.append(v)
    return SmithForm(L, Linv, Rm, M, exps)


def elementary_divisors(R: LocalRing, M):
    """Exponents t_i of the Smith form of M (t = a for zero diagonal entries)."""
    return smith(R, M, track=False).exponents


def kernel_generators(R: LocalRing, M):
    """Generators (as columns, (n, g, k)) of {x : M x = 0}."""
    m, n = np.shape(M)[:2]
    S = smith(R, M)
    cols = []
    for i in range(n):
        t = S.exponents[i] if i < len(S.exponents) else R.a
        if t == 0:
            continue
        col = S.Rm[:, i]
        if t < R.a:
            col = R.mul(col, R.pow(R.pi, R.a - t))
        cols.append(col)
    if not cols:
        return R.zero((n, 0))
    return np.stack(cols, axis=1)


def solve(R: LocalRing, M, b):
    """Some x with M x = b, or None if b is not in the image."""
    S = smith(R, M)
    m, n = np.shape(M)[:2]
    c = mat_vec(R, S.L, b)
    y = R.zero((n,))
    for i in range(m):
        t = S.exponents[i] if i < min(m, n) else R.a
        ci = c[i]
        if R.is_zero(ci):
            continue
        if t >= R.a or R.valuation(ci) < t:
            return None
        y[i] = R.div_pi_power(ci, t)
    return mat_vec(R, S.Rm, y)


def image_generators(R: LocalRing, M):
    """Generators of the column span of M in Smith-adapted form, with exponents."""
    S = smith(R, M)
    gens, exps = [], []
    for i, t in enumerate(S.exponents):
        if t < R.a:
            gens.append(R.mul(S.Linv[:, i], R.pow(R.pi, t)))
            exps.append(t)
    return gens, exps


def image_basis(R: LocalRing, e):
    """Basis of the image of an idempotent matrix (a free direct summand)."""
    gens, exps = image_generators(R, e)
    if any(t != 0 for t in exps):
        raise RingError("image is not free")
    return gens


def module_length(R: LocalRing, exps):
    """Length of ⊕ varpi^t A (as an O-module, counted in residue-field units)."""
    return sum(R.a - t for t in exps)


def mat_inverse(R: FiniteAlgebra, M):
    from .base_rings import mat_inverse as _inv

    return _inv(R, M)
