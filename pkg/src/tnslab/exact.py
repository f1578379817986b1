"""Exact scalars, sparse matrices, and rank over Q or a prime field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

#: Default prime for fast-mode rank; 2**31 - 1 keeps products below 2**62.
DEFAULT_PRIME = 2_147_483_647

# dense numpy elimination is used in prime mode below this many cells
_DENSE_CELLS = 1 << 22
# dense Bareiss (object arrays) is used over Q below this many cells
_DENSE_CELLS_Q = 1 << 16


def scalar(x):
    """Normalize ``x`` to an exact scalar: ``int`` when integral, else ``Fraction``."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return scalar(Fraction(x.numerator, x.denominator))
    if isinstance(x, np.integer):
        return int(x)
    raise TypeError(f"exact scalar required, got {type(x).__name__}")


def to_field(x, prime: int) -> int:
    x = scalar(x)
    if isinstance(x, int):
        return x % prime
    den = x.denominator % prime
    if den == 0:
        raise ZeroDivisionError(f"denominator divisible by {prime}")
    return x.numerator * pow(den, -1, prime) % prime


def scalar_mode(prime: int | None) -> str:
    return "rational" if prime is None else f"fp:{prime}"


@dataclass
class SparseMatrix:
    """Row-major sparse matrix: ``data[row][col] = value`` with zeros omitted."""

    nrows: int
    ncols: int
    data: dict = field(default_factory=dict)

    @classmethod
    def from_dense(cls, rows) -> "SparseMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        data = {}
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ValueError("ragged matrix")
            entries = {j: scalar(v) for j, v in enumerate(r) if v != 0}
            if entries:
                data[i] = entries
        return cls(len(rows), ncols, data)

    def to_dense(self) -> list[list]:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for i, row in self.data.items():
            for j, v in row.items():
                out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        data: dict = {}
        for i, row in self.data.items():
            for j, v in row.items():
                data.setdefault(j, {})[i] = v
        return SparseMatrix(self.ncols, self.nrows, data)

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.data.values())

    def __getitem__(self, ij):
        i, j = ij
        return self.data.get(i, {}).get(j, 0)


def _integer_row(row: dict) -> dict:
    den = 1
    for v in row.values():
        if isinstance(v, Fraction):
            den = den * v.denominator // math.gcd(den, v.denominator)
    if den == 1:
        return dict(row)
    return {j: int(v * den) for j, v in row.items()}


def _primitive(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {j: v // g for j, v in row.items()}
    return row


def _rank_rational(rows) -> int:
    # fraction-free elimination: pivot rows keyed by leading column, kept primitive
    pivots: dict[int, dict] = {}
    for row in rows:
        row = _primitive(_integer_row(row))
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                pivots[lead] = row
                break
            a, b = piv[lead], row[lead]
            new = {j: a * v for j, v in row.items()}
            for j, v in piv.items():
                w = new.get(j, 0) - b * v
                if w:
                    new[j] = w
                else:
                    new.pop(j, None)
            row = _primitive(new)
    return len(pivots)


def _rank_bareiss(A: np.ndarray) -> int:
    # fraction-free elimination: every entry stays an integer minor, so the division is exact
    m, n = A.shape
    prev, r = 1, 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        p = A[r, c]
        if r + 1 < m:
            A[r + 1 :, c + 1 :] = (A[r + 1 :, c + 1 :] * p - np.outer(A[r + 1 :, c], A[r, c + 1 :])) // prev
            A[r + 1 :, c] = 0
        prev = p
        r += 1
    return r


def _compress(rows, convert) -> np.ndarray:
    cols = sorted({j for r in rows for j in r})
    colpos = {j: t for t, j in enumerate(cols)}
    dtype = object if convert is None else np.int64
    A = np.zeros((len(rows), len(cols)), dtype=dtype)
    for i, r in enumerate(rows):
        for j, v in r.items():
            A[i, colpos[j]] = v if convert is None else convert(v)
    if A.shape[0] > A.shape[1]:
        A = np.ascontiguousarray(A.T)
    return A


def _rank_mod_sparse(rows, p: int) -> int:
    pivots: dict[int, dict] = {}
    for row in rows:
        row = {j: to_field(v, p) for j, v in row.items()}
        row = {j: v for j, v in row.items() if v}
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                inv = pow(row[lead], -1, p)
                pivots[lead] = {j: v * inv % p for j, v in row.items()}
                break
            f = row[lead]
            for j, v in piv.items():
                w = (row.get(j, 0) - f * v) % p
                if w:
                    row[j] = w
                else:
                    row.pop(j, None)
    return len(pivots)


def _rank_mod_dense(A: np.ndarray, p: int) -> int:
    A = A % p
    m, n = A.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        inv = pow(int(A[r, c]), -1, p)
        A[r] = (A[r] * inv) % p
        below = A[r + 1 :, c].copy()
        rows = np.nonzero(below)[0]
        if rows.size:
            idx = rows + r + 1
            A[idx] = (A[idx] - np.outer(below[rows], A[r])) % p
        r += 1
    return r


def rank(M: SparseMatrix, prime: int | None = None) -> int:
    """Exact rank of ``M`` over Q (``prime=None``) or over GF(prime)."""
    rows = [r for r in M.data.values() if r]
    if not rows:
        return 0
    ncols = len({j for r in rows for j in r})
    cells = len(rows) * ncols
    if prime is None:
        if cells <= _DENSE_CELLS_Q:
            return _rank_bareiss(_compress([_integer_row(r) for r in rows], None))
        return _rank_rational(rows)
    if cells <= _DENSE_CELLS and prime < (1 << 31):
        return _rank_mod_dense(_compress(rows, lambda v: to_field(v, prime)), prime)
    return _rank_mod_sparse(rows, prime)
