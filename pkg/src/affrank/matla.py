"""Dense exact matrices over GF(p).

Entries are plain ints in ``[0, p)`` stored row-major in a flat tuple, so a
matrix doubles as its coordinate vector in ``GF(p)^(rows*cols)``.  The
row-list helpers at the bottom (``echelon``, ``nullspace``, ``solve``) are the
shared Gaussian-elimination backbone for every other module.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, FieldMismatchError, ShapeMismatchError, SingularMatrixError
from .field import FieldSpec, GF

DEFAULT_GL_BUDGET = 10 ** 7


@dataclass(frozen=True)
class Matrix:
    field: FieldSpec
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ShapeMismatchError(f"matrix dimensions must be positive, got {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise ShapeMismatchError("entry count does not match shape")

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, field: FieldSpec | int, rows: Sequence[Sequence[int]]) -> Matrix:
        if isinstance(field, int):
            field = GF(field)
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ShapeMismatchError("empty matrix")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ShapeMismatchError("ragged rows")
        p = field.p
        return cls(field, len(rows), ncols, tuple(int(x) % p for r in rows for x in r))

    @classmethod
    def from_vector(cls, field: FieldSpec, rows: int, cols: int, vec: Iterable[int]) -> Matrix:
        p = field.p
        return cls(field, rows, cols, tuple(int(x) % p for x in vec))

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int | None = None) -> Matrix:
        cols = rows if cols is None else cols
        return cls(field, rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> Matrix:
        return cls(field, n, n, tuple(int(i == j) for i in range(n) for j in range(n)))

    @classmethod
    def unit(cls, field: FieldSpec, rows: int, cols: int, i: int, j: int) -> Matrix:
        """The matrix unit E_ij (0-based)."""
        e = [0] * (rows * cols)
        e[i * cols + j] = 1
        return cls(field, rows, cols, tuple(e))

    @classmethod
    def diag_block(cls, field: FieldSpec, rows: int, cols: int, r: int) -> Matrix:
        """Block-diagonal ``(I_r, 0)`` of shape rows x cols."""
        return cls(field, rows, cols, tuple(int(i == j and i < r) for i in range(rows) for j in range(cols)))

    # access -------------------------------------------------------------
    @property
    def p(self) -> int:
        return self.field.p

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row_list(self) -> list[list[int]]:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols)

    @classmethod
    def from_array(cls, field: FieldSpec, arr) -> Matrix:
        arr = np.asarray(arr, dtype=np.int64) % field.p
        return cls(field, arr.shape[0], arr.shape[1], tuple(int(x) for x in arr.ravel()))

    def block(self, r0: int, r1: int, c0: int, c1: int) -> Matrix:
        return Matrix.from_rows(self.field, [row[c0:c1] for row in self.row_list()[r0:r1]])

    def __repr__(self):
        return f"Matrix(GF({self.p}), {self.row_list()})"

    # arithmetic ---------------------------------------------------------
    def _check(self, other: Matrix):
        if other.field.p != self.field.p:
            raise FieldMismatchError(f"cannot combine {self.field} and {other.field} matrices")

    def __add__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.shape != other.shape:
            raise ShapeMismatchError(f"{self.shape} + {other.shape}")
        p = self.p
        return Matrix(self.field, self.rows, self.cols,
                      tuple((a + b) % p for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.shape != other.shape:
            raise ShapeMismatchError(f"{self.shape} - {other.shape}")
        p = self.p
        return Matrix(self.field, self.rows, self.cols,
                      tuple((a - b) % p for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> Matrix:
        p = self.p
        return Matrix(self.field, self.rows, self.cols, tuple(-a % p for a in self.entries))

    def scale(self, c: int) -> Matrix:
        p = self.p
        c = int(c) % p
        return Matrix(self.field, self.rows, self.cols, tuple(a * c % p for a in self.entries))

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check(other)
        if self.cols != other.rows:
            raise ShapeMismatchError(f"cannot multiply {self.shape} by {other.shape}")
        p = self.p
        a = self.row_list()
        bt = other.T.row_list()
        out = tuple(sum(x * y for x, y in zip(ra, cb)) % p for ra in a for cb in bt)
        return Matrix(self.field, self.rows, other.cols, out)

    @property
    def T(self) -> Matrix:
        n, m = self.rows, self.cols
        e = self.entries
        return Matrix(self.field, m, n, tuple(e[i * m + j] for j in range(m) for i in range(n)))

    def is_zero(self) -> bool:
        return not any(self.entries)

    def to_json(self) -> dict:
        return {"field": self.p, "rows": self.rows, "cols": self.cols, "entries": self.row_list()}

    @classmethod
    def from_json(cls, data: dict) -> Matrix:
        m = cls.from_rows(GF(int(data["field"])), data["entries"])
        if (m.rows, m.cols) != (int(data.get("rows", m.rows)), int(data.get("cols", m.cols))):
            raise ShapeMismatchError("declared shape does not match entries")
        return m


def transpose(M: Matrix) -> Matrix:
    return M.T


def rank(M: Matrix) -> int:
    return len(echelon(M.row_list(), M.p)[1])


def rref(M: Matrix) -> tuple[Matrix, tuple[int, ...], Matrix]:
    """Return ``(R, pivots, E)`` with ``E @ M == R`` in reduced row-echelon form, E invertible."""
    n, m = M.shape
    aug = [row + [int(i == j) for j in range(n)] for i, row in enumerate(M.row_list())]
    red, piv = echelon(aug, M.p, ncols=m, full=True)
    R = Matrix.from_rows(M.field, [r[:m] for r in red])
    E = Matrix.from_rows(M.field, [r[m:] for r in red])
    return R, tuple(piv), E


def _extend_to_basis(rows: list[list[int]], n: int, p: int) -> list[list[int]]:
    """Extend independent rows to a basis of GF(p)^n using unit vectors."""
    out = [list(r) for r in rows]
    _, piv = echelon(out, p)
    have = len(piv)
    for j in range(n):
        if have == n:
            break
        cand = out + [[int(i == j) for i in range(n)]]
        if len(echelon(cand, p)[1]) > have:
            out = cand
            have += 1
    return out


def inverse(M: Matrix) -> Matrix:
    if M.rows != M.cols:
        raise ShapeMismatchError("inverse of a non-square matrix")
    R, piv, E = rref(M)
    if len(piv) < M.rows:
        raise SingularMatrixError("matrix is singular")
    return E


def det(M: Matrix) -> int:
    if M.rows != M.cols:
        raise ShapeMismatchError("determinant of a non-square matrix")
    p = M.p
    a = M.row_list()
    n = M.rows
    d = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            d = -d
        d = d * a[c][c] % p
        inv = pow(a[c][c], p - 2, p)
        for i in range(c + 1, n):
            f = a[i][c] * inv % p
            if f:
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[c])]
    return d % p


def kernel(M: Matrix) -> list[Matrix]:
    """Basis of the right kernel {x : M x = 0}, as column matrices."""
    return [Matrix(M.field, M.cols, 1, tuple(v)) for v in nullspace(M.row_list(), M.p, M.cols)]


def is_invertible(M: Matrix) -> bool:
    return M.rows == M.cols and rank(M) == M.rows


def gl_order(n: int, q: int) -> int:
    out = 1
    for i in range(n):
        out *= q ** n - q ** i
    return out


def enumerate_matrices(n: int, m: int, f: FieldSpec, budget: int = DEFAULT_GL_BUDGET) -> Iterator[Matrix]:
    """All n x m matrices, lexicographic on row-major entries."""
    total = f.p ** (n * m)
    if total > budget:
        raise BudgetExceededError(f"{total} matrices exceed budget {budget}", needed=total, budget=budget)
    for e in itertools.product(range(f.p), repeat=n * m):
        yield Matrix(f, n, m, e)


def enumerate_gl(n: int, f: FieldSpec, budget: int = DEFAULT_GL_BUDGET) -> Iterator[Matrix]:
    """Every invertible n x n matrix exactly once, lexicographic on row-major entries."""
    for e in gl_array(n, f.p, budget):
        yield Matrix(f, n, n, tuple(int(x) for x in e.ravel()))


_GL_CACHE: dict[tuple[int, int], np.ndarray] = {}


def gl_array(n: int, q: int, budget: int = DEFAULT_GL_BUDGET) -> np.ndarray:
    """GL_n(F_q) as an int8 array of shape (|GL|, n, n), in lexicographic order."""
    total = q ** (n * n)
    if total > budget:
        raise BudgetExceededError(f"enumerating GL_{n}(F_{q}) needs {total} candidates, budget {budget}",
                                  needed=total, budget=budget)
    key = (n, q)
    if key not in _GL_CACHE:
        allm = all_matrices_array(n, n, q)
        arr = allm[batch_rank(allm, q) == n]
        arr.setflags(write=False)
        _GL_CACHE[key] = arr
    return _GL_CACHE[key]


def all_matrices_array(n: int, m: int, q: int) -> np.ndarray:
    """Every n x m matrix as an int8 array, lexicographic; row k has base-q digits of k."""
    k = n * m
    idx = np.arange(q ** k, dtype=np.int64)
    digits = np.empty((q ** k, k), dtype=np.int8)
    for pos in range(k - 1, -1, -1):
        digits[:, pos] = idx % q
        idx //= q
    return digits.reshape(-1, n, m)


def batch_rank(arr: np.ndarray, q: int) -> np.ndarray:
    """Ranks of a stack of matrices (shape (N, n, m)) over GF(q), vectorised elimination.

    Works in int16: entries stay below q <= 31, so a row update stays below 31^2.
    """
    a = np.array(arr, dtype=np.int16) % q
    if a.ndim == 2:
        a = a[None]
    N, n, m = a.shape
    rk = np.zeros(N, dtype=np.int64)
    if N == 0 or n == 0:
        return rk
    inv = np.zeros(q, dtype=np.int16)
    inv[1:] = [pow(x, q - 2, q) for x in range(1, q)]
    rows = np.arange(n)
    ar = np.arange(N)
    for c in range(m):
        cand = (a[:, :, c] != 0) & (rows[None, :] >= rk[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        tgt = np.minimum(rk, n - 1)
        piv = np.where(has, cand.argmax(axis=1), tgt)
        # swap the pivot row into position rk (a no-op where there is no pivot)
        prow = a[ar, piv]
        a[ar, piv] = a[ar, tgt]
        a[ar, tgt] = prow
        prow = prow * inv[prow[:, c]][:, None] % q
        factors = a[:, :, c] * ((rows[None, :] > tgt[:, None]) & has[:, None])
        a -= factors[:, :, None] * prow[:, None, :]
        a %= q
        rk += has
        if (rk == n).all():
            break
    return rk


# Row-list linear algebra ------------------------------------------------

def echelon(rows: Sequence[Sequence[int]], p: int, ncols: int | None = None,
            full: bool = False) -> tuple[list[list[int]], list[int]]:
    """Reduced row-echelon form of ``rows`` mod p.

    Pivots are searched among the first ``ncols`` columns (all columns by
    default).  Rows left without a pivot are dropped unless ``full``, in
    which case every row is returned (pivot rows first).  Returns
    ``(reduced_rows, pivot_columns)``.
    """
    a = [[x % p for x in r] for r in rows]
    if not a:
        return [], []
    width = len(a[0]) if ncols is None else ncols
    piv: list[int] = []
    r = 0
    nrows = len(a)
    for c in range(width):
        if r == nrows:
            break
        sel = next((i for i in range(r, nrows) if a[i][c]), None)
        if sel is None:
            continue
        a[r], a[sel] = a[sel], a[r]
        iv = pow(a[r][c], p - 2, p)
        if iv != 1:
            a[r] = [x * iv % p for x in a[r]]
        pr = a[r]
        for i in range(nrows):
            if i != r:
                f = a[i][c]
                if f:
                    a[i] = [(x - f * y) % p for x, y in zip(a[i], pr)]
        piv.append(c)
        r += 1
    return (a if full else a[:r]), piv


def nullspace(rows: Sequence[Sequence[int]], p: int, ncols: int) -> list[list[int]]:
    """Basis of {x in GF(p)^ncols : rows @ x == 0}, one vector per free column."""
    red, piv = echelon(rows, p) if rows else ([], [])
    pivset = set(piv)
    basis = []
    for fcol in range(ncols):
        if fcol in pivset:
            continue
        v = [0] * ncols
        v[fcol] = 1
        for row, pc in zip(red, piv):
            v[pc] = -row[fcol] % p
        basis.append(v)
    return basis


def solve(rows: Sequence[Sequence[int]], rhs: Sequence[int], p: int, ncols: int) -> list[int] | None:
    """One solution x of ``rows @ x == rhs`` (free variables zero), or None if inconsistent."""
    if not rows:
        return [0] * ncols
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, piv = echelon(aug, p, ncols=ncols, full=True)
    if any(row[ncols] for row in red[len(piv):]):
        return None
    x = [0] * ncols
    for row, pc in zip(red, piv):
        x[pc] = row[ncols] % p
    return x


def span_basis(vectors: Iterable[Sequence[int]], p: int) -> list[list[int]]:
    """Canonical (RREF) basis of the span of ``vectors``."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return []
    return echelon(vecs, p)[0]


def complete_basis(rows: Sequence[Sequence[int]], n: int, p: int) -> list[list[int]]:
    """Independent ``rows`` followed by unit vectors completing them to a basis of GF(p)^n."""
    return _extend_to_basis([list(r) for r in rows], n, p)
