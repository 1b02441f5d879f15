"""
Exact dense linear algebra over a prime field F_p.

Matrices are immutable numpy int64 arrays reduced mod p. Every basis returned
here is pivot-canonical (derived from the reduced row echelon form), so equal
inputs always give bit-identical outputs.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np

from persenc.config import DEFAULT_FIELD_CHAR
from persenc.errors import DimensionMismatch, FieldMismatch, NoSolution


class Matrix:
    """rows x cols matrix over F_p. Zero-sized dimensions are legal."""

    __slots__ = ("_a", "p")

    def __init__(self, entries, p: int = DEFAULT_FIELD_CHAR, shape: Tuple[int, int] | None = None):
        a = np.array(entries, dtype=np.int64)
        if shape is not None:
            a = a.reshape(shape)
        if a.ndim != 2:
            raise ValueError(f"Matrix entries must be 2-dimensional, got shape {a.shape}")
        a = np.mod(a, p)
        a.setflags(write=False)
        self._a = a
        self.p = int(p)

    # --- constructors ---
    @classmethod
    def zeros(cls, rows: int, cols: int, p: int = DEFAULT_FIELD_CHAR) -> "Matrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), p)

    @classmethod
    def identity(cls, n: int, p: int = DEFAULT_FIELD_CHAR) -> "Matrix":
        return cls(np.eye(n, dtype=np.int64), p)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int, p: int = DEFAULT_FIELD_CHAR) -> "Matrix":
        if not columns:
            return cls.zeros(rows, 0, p)
        return cls(np.array(columns, dtype=np.int64).T, p)

    # --- accessors ---
    @property
    def rows(self) -> int:
        return int(self._a.shape[0])

    @property
    def cols(self) -> int:
        return int(self._a.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def array(self) -> np.ndarray:
        return self._a.copy()

    def tolist(self) -> List[List[int]]:
        return [[int(x) for x in row] for row in self._a]

    def entry(self, i: int, j: int) -> int:
        return int(self._a[i, j])

    def column(self, j: int) -> "Matrix":
        return Matrix(self._a[:, j : j + 1], self.p)

    def take_columns(self, idx: Iterable[int]) -> "Matrix":
        idx = list(idx)
        return Matrix(self._a[:, idx], self.p, shape=(self.rows, len(idx)))

    def take_rows(self, idx: Iterable[int]) -> "Matrix":
        idx = list(idx)
        return Matrix(self._a[idx, :], self.p, shape=(len(idx), self.cols))

    def is_zero(self) -> bool:
        return not self._a.any()

    @property
    def T(self) -> "Matrix":
        return Matrix(self._a.T, self.p)

    # --- arithmetic ---
    def _check_field(self, other: "Matrix") -> None:
        if self.p != other.p:
            raise FieldMismatch(
                f"Cannot combine matrices over F_{self.p} and F_{other.p}",
                {"left": self.p, "right": other.p},
            )

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"Cannot multiply {self.shape} by {other.shape}",
                {"left": list(self.shape), "right": list(other.shape)},
            )
        return Matrix((self._a @ other._a) % self.p, self.p, shape=(self.rows, other.cols))

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"Cannot add {self.shape} and {other.shape}")
        return Matrix(self._a + other._a, self.p, shape=self.shape)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"Cannot subtract {self.shape} and {other.shape}")
        return Matrix(self._a - other._a, self.p, shape=self.shape)

    def __neg__(self) -> "Matrix":
        return Matrix(-self._a, self.p, shape=self.shape)

    def scale(self, c: int) -> "Matrix":
        return Matrix(self._a * (int(c) % self.p), self.p, shape=self.shape)

    def kron(self, other: "Matrix") -> "Matrix":
        self._check_field(other)
        shape = (self.rows * other.rows, self.cols * other.cols)
        return Matrix(np.kron(self._a, other._a) if all(shape) else np.zeros(shape), self.p, shape=shape)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and bool(np.array_equal(self._a, other._a))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Matrix({self.tolist()}, p={self.p}, shape={self.shape})"


def hstack(*ms: Matrix) -> Matrix:
    p = ms[0].p
    return Matrix(np.hstack([m._a for m in ms]), p, shape=(ms[0].rows, sum(m.cols for m in ms)))


def vstack(*ms: Matrix) -> Matrix:
    p = ms[0].p
    return Matrix(np.vstack([m._a for m in ms]), p, shape=(sum(m.rows for m in ms), ms[0].cols))


def block_diagonal(*ms: Matrix, p: int = DEFAULT_FIELD_CHAR) -> Matrix:
    if ms:
        p = ms[0].p
    out = np.zeros((sum(m.rows for m in ms), sum(m.cols for m in ms)), dtype=np.int64)
    r = c = 0
    for m in ms:
        out[r : r + m.rows, c : c + m.cols] = m._a
        r += m.rows
        c += m.cols
    return Matrix(out, p, shape=out.shape)


def rref(m: Matrix) -> Tuple[Matrix, List[int]]:
    """
    Reduced row echelon form over F_p.
    Returns (R, pivot_columns); rank(m) == len(pivot_columns).
    """
    p = m.p
    a = m.array
    rows, cols = a.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r] = (a[r] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            a[hit] = (a[hit] - np.outer(col[hit], a[r])) % p
        pivots.append(c)
        r += 1
    return Matrix(a, p, shape=(rows, cols)), pivots


def rank(m: Matrix) -> int:
    return len(rref(m)[1])


def kernel_basis(m: Matrix) -> Matrix:
    """Columns form a basis of {v : m v = 0}, one column per free variable."""
    p = m.p
    r, pivots = rref(m)
    pivot_set = set(pivots)
    free = [c for c in range(m.cols) if c not in pivot_set]
    ra = r.array
    k = np.zeros((m.cols, len(free)), dtype=np.int64)
    for j, f in enumerate(free):
        k[f, j] = 1
        for i, pc in enumerate(pivots):
            k[pc, j] = (-ra[i, f]) % p
    return Matrix(k, p, shape=(m.cols, len(free)))


def column_span_basis(m: Matrix) -> Matrix:
    """The pivot columns of m: a basis of its column space."""
    _, pivots = rref(m)
    return m.take_columns(pivots)


def solve_in_span(basis: Matrix, target: Matrix) -> Matrix:
    """
    Returns X with basis @ X == target.
    Free variables are set to zero, so X is unique when basis has independent columns.
    """
    if basis.rows != target.rows:
        raise DimensionMismatch(
            f"basis has {basis.rows} rows, target has {target.rows}",
            {"basis": list(basis.shape), "target": list(target.shape)},
        )
    k = basis.cols
    r, pivots = rref(hstack(basis, target))
    bad = [c - k for c in pivots if c >= k]
    if bad:
        raise NoSolution(
            "target column is not in the span of the basis",
            {"target_column": bad[0]},
        )
    ra = r.array
    x = np.zeros((k, target.cols), dtype=np.int64)
    for i, pc in enumerate(pivots):
        x[pc] = ra[i, k:]
    return Matrix(x, basis.p, shape=(k, target.cols))


def cokernel_projection(m: Matrix) -> Matrix:
    """
    Surjection q: F^rows -> F^(rows - rank m) with q @ m == 0.
    Its rows are the kernel basis of m transposed.
    """
    return kernel_basis(m.T).T
