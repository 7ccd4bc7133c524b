"""Affine subspaces of M_{n,p}(GF(q)) and the standard constructions on them.

A subspace is stored canonically: the translation space as the RREF of its
basis (matrices flattened row-major) and the offset reduced to zero at every
pivot coordinate.  Two subspaces are equal as point sets iff their encodings
are identical, so ``AffineSubspace`` hashes and compares by encoding.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, FieldMismatchError, InvalidSpecError, ShapeMismatchError, SingularMatrixError
from .field import FieldSpec, GF
from .matla import Matrix, batch_rank, is_invertible, nullspace, span_basis
from .quadform import is_nonisotropic, nonisotropic_classes

DEFAULT_LRK_BUDGET = 10 ** 7
_CHUNK = 1 << 15


@dataclass(frozen=True)
class AffineSubspace:
    field: FieldSpec
    rows: int
    cols: int
    offset_vec: tuple[int, ...]
    basis_vecs: tuple[tuple[int, ...], ...]

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def dim(self) -> int:
        return len(self.basis_vecs)

    @property
    def codim(self) -> int:
        return self.rows * self.cols - self.dim

    @property
    def offset(self) -> Matrix:
        return Matrix(self.field, self.rows, self.cols, self.offset_vec)

    @property
    def basis(self) -> list[Matrix]:
        return [Matrix(self.field, self.rows, self.cols, b) for b in self.basis_vecs]

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(b) if x) for b in self.basis_vecs)

    @property
    def is_linear(self) -> bool:
        return not any(self.offset_vec)

    def translation(self) -> AffineSubspace:
        """The translation vector space, as a subspace with zero offset."""
        return AffineSubspace(self.field, self.rows, self.cols, (0,) * len(self.offset_vec), self.basis_vecs)

    def contains(self, M: Matrix) -> bool:
        return contains(self, M)

    def __contains__(self, M: Matrix) -> bool:
        return contains(self, M)

    def __len__(self) -> int:
        return self.p ** self.dim

    def to_json(self) -> dict:
        return {
            "field": self.p,
            "rows": self.rows,
            "cols": self.cols,
            "offset": self.offset.row_list(),
            "basis": [b.row_list() for b in self.basis],
        }

    @classmethod
    def from_json(cls, data: dict) -> AffineSubspace:
        f = GF(int(data["field"]))
        n, m = int(data["rows"]), int(data["cols"])
        off = Matrix.from_rows(f, data["offset"])
        gens = [Matrix.from_rows(f, b) for b in data.get("basis", [])]
        if off.shape != (n, m) or any(g.shape != (n, m) for g in gens):
            raise ShapeMismatchError("declared shape does not match offset/basis entries")
        return make_subspace(off, gens)


def _reduce(vec: Sequence[int], basis: Sequence[Sequence[int]], pivots: Sequence[int], p: int) -> list[int]:
    v = list(vec)
    for b, pc in zip(basis, pivots):
        c = v[pc]
        if c:
            v = [(x - c * y) % p for x, y in zip(v, b)]
    return v


def from_vectors(f: FieldSpec, rows: int, cols: int, offset: Sequence[int],
                 generators: Sequence[Sequence[int]]) -> AffineSubspace:
    """Canonicalise an offset vector and generator vectors (flattened matrices)."""
    p = f.p
    basis = span_basis(generators, p)
    piv = [next(i for i, x in enumerate(b) if x) for b in basis]
    off = _reduce([x % p for x in offset], basis, piv, p)
    return AffineSubspace(f, rows, cols, tuple(off), tuple(tuple(b) for b in basis))


def make_subspace(offset: Matrix, generators: Sequence[Matrix] = ()) -> AffineSubspace:
    for g in generators:
        if g.field.p != offset.field.p:
            raise FieldMismatchError("generators live over a different field than the offset")
        if g.shape != offset.shape:
            raise ShapeMismatchError(f"generator of shape {g.shape} in M{offset.shape}")
    return from_vectors(offset.field, offset.rows, offset.cols, offset.entries, [g.entries for g in generators])


def linear_span(f: FieldSpec, rows: int, cols: int, generators: Sequence[Matrix]) -> AffineSubspace:
    return make_subspace(Matrix.zeros(f, rows, cols), generators)


def full_space(f: FieldSpec, rows: int, cols: int) -> AffineSubspace:
    return linear_span(f, rows, cols, [Matrix.unit(f, rows, cols, i, j) for i in range(rows) for j in range(cols)])


def _check_shape(S: AffineSubspace, M: Matrix):
    if M.field.p != S.p:
        raise FieldMismatchError(f"matrix over GF({M.p}) vs subspace over GF({S.p})")
    if M.shape != S.shape:
        raise ShapeMismatchError(f"matrix of shape {M.shape} vs ambient M{S.shape}")


def contains(S: AffineSubspace, M: Matrix) -> bool:
    _check_shape(S, M)
    diff = [(a - b) % S.p for a, b in zip(M.entries, S.offset_vec)]
    return not any(_reduce(diff, S.basis_vecs, S.pivots, S.p))


def annihilator(S: AffineSubspace) -> list[list[int]]:
    """Basis of the orthogonal of the translation space for the pairing tr(A^T M)."""
    return nullspace(S.basis_vecs, S.p, S.rows * S.cols)


def _coefficient_grid(q: int, d: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = q ** d if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), d), dtype=np.int64)
    for pos in range(d - 1, -1, -1):
        out[:, pos] = idx % q
        idx //= q
    return out


def iter_point_chunks(S: AffineSubspace, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Member matrices as arrays of shape (k, rows, cols), in enumeration order."""
    q, d = S.p, S.dim
    B = np.array(S.basis_vecs, dtype=np.int64).reshape(d, S.rows * S.cols)
    off = np.array(S.offset_vec, dtype=np.int64)
    total = q ** d
    for start in range(0, total, chunk):
        C = _coefficient_grid(q, d, start, min(total, start + chunk))
        pts = (C @ B + off) % q if d else np.broadcast_to(off, (1, off.size))
        yield pts.reshape(-1, S.rows, S.cols)


def points_array(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> np.ndarray:
    if len(S) > budget:
        raise BudgetExceededError(f"{len(S)} points exceed budget {budget}", needed=len(S), budget=budget)
    return np.concatenate(list(iter_point_chunks(S)))


def enumerate_points(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> Iterator[Matrix]:
    """All members, lexicographic over basis coefficients (first coefficient most significant)."""
    if len(S) > budget:
        raise BudgetExceededError(f"{len(S)} points exceed budget {budget}", needed=len(S), budget=budget)
    p = S.p
    for coeffs in itertools.product(range(p), repeat=S.dim):
        v = list(S.offset_vec)
        for c, b in zip(coeffs, S.basis_vecs):
            if c:
                v = [(x + c * y) % p for x, y in zip(v, b)]
        yield Matrix(S.field, S.rows, S.cols, tuple(v))


def rank_histogram(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> dict[int, int]:
    """Rank -> number of members with that rank (exhaustive)."""
    if len(S) > budget:
        raise BudgetExceededError(f"{len(S)} points exceed budget {budget}", needed=len(S), budget=budget)
    counts = np.zeros(min(S.rows, S.cols) + 1, dtype=np.int64)
    for pts in iter_point_chunks(S):
        counts += np.bincount(batch_rank(pts, S.p), minlength=counts.size)
    return {k: int(c) for k, c in enumerate(counts) if c}


def lrk(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET, sample: int = 4096, seed: int = 0) -> int:
    """Exact lower rank.  Over budget, raises with a sampled upper bound attached."""
    if len(S) > budget:
        rng = np.random.default_rng(seed)
        d = S.dim
        C = rng.integers(0, S.p, size=(min(sample, budget), d))
        B = np.array(S.basis_vecs, dtype=np.int64).reshape(d, S.rows * S.cols)
        pts = (C @ B + np.array(S.offset_vec)) % S.p
        ub = int(batch_rank(pts.reshape(-1, S.rows, S.cols), S.p).min())
        raise BudgetExceededError(
            f"lrk needs {len(S)} rank evaluations, budget {budget}; sampled upper bound {ub}",
            needed=len(S), budget=budget, upper_bound=ub)
    best = min(S.rows, S.cols)
    for pts in iter_point_chunks(S):
        best = min(best, int(batch_rank(pts, S.p).min()))
        if best == 0:
            break
    return best


def alternate_basis(n: int, f: FieldSpec) -> list[Matrix]:
    """Basis {E_ij - E_ji : i < j} of the alternate n x n matrices."""
    if n < 1:
        raise ShapeMismatchError("n must be positive")
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            e = [0] * (n * n)
            e[i * n + j] = 1
            e[j * n + i] = f.p - 1
            out.append(Matrix(f, n, n, tuple(e)))
    return out


def alternate_space(n: int, f: FieldSpec) -> AffineSubspace:
    return linear_span(f, n, n, alternate_basis(n, f))


def _pad(vec: Sequence[int], r: int, c: int, n: int, m: int, r0: int, c0: int) -> list[int]:
    """Place an r x c block (flattened) at (r0, c0) inside a zero n x m matrix."""
    out = [0] * (n * m)
    for i in range(r):
        out[(r0 + i) * m + c0:(r0 + i) * m + c0 + c] = vec[i * c:(i + 1) * c]
    return out


def vee(A: AffineSubspace, B: AffineSubspace) -> AffineSubspace:
    """Block upper-triangular space [[A, *], [0, B]] with a free upper-right block."""
    if A.p != B.p:
        raise FieldMismatchError("vee of subspaces over different fields")
    a1, a2 = A.shape
    b1, b2 = B.shape
    n, m = a1 + b1, a2 + b2
    off = [(x + y) % A.p for x, y in zip(_pad(A.offset_vec, a1, a2, n, m, 0, 0),
                                          _pad(B.offset_vec, b1, b2, n, m, a1, a2))]
    gens = [_pad(v, a1, a2, n, m, 0, 0) for v in A.basis_vecs]
    gens += [_pad(v, b1, b2, n, m, a1, a2) for v in B.basis_vecs]
    for i in range(a1):
        for j in range(a2, m):
            e = [0] * (n * m)
            e[i * m + j] = 1
            gens.append(e)
    return from_vectors(A.field, n, m, off, gens)


def embed_inp(W: AffineSubspace, n: int, p: int) -> AffineSubspace:
    """Top-left block ranges over W, every other entry free."""
    r1, r2 = W.shape
    if n < r1 or p < r2:
        raise ShapeMismatchError(f"cannot embed M{W.shape} into M({n},{p})")
    off = _pad(W.offset_vec, r1, r2, n, p, 0, 0)
    gens = [_pad(v, r1, r2, n, p, 0, 0) for v in W.basis_vecs]
    for i in range(n):
        for j in range(p):
            if i >= r1 or j >= r2:
                e = [0] * (n * p)
                e[i * p + j] = 1
                gens.append(e)
    return from_vectors(W.field, n, p, off, gens)


def transform(S: AffineSubspace, P: Matrix, Q: Matrix) -> AffineSubspace:
    """Canonical encoding of P . S . Q."""
    if P.shape != (S.rows, S.rows) or Q.shape != (S.cols, S.cols):
        raise ShapeMismatchError("transform factors do not match the ambient shape")
    if P.p != S.p or Q.p != S.p:
        raise FieldMismatchError("transform factors over a different field")
    if not is_invertible(P) or not is_invertible(Q):
        raise SingularMatrixError("transform factors must be invertible")
    return _transform_unchecked(S, P, Q)


def _transform_unchecked(S: AffineSubspace, P: Matrix, Q: Matrix) -> AffineSubspace:
    q = S.p
    Pa, Qa = P.to_array(), Q.to_array()
    mats = np.array((S.offset_vec,) + S.basis_vecs, dtype=np.int64).reshape(-1, S.rows, S.cols)
    out = (Pa @ mats @ Qa % q).reshape(len(mats), S.rows * S.cols)
    return from_vectors(S.field, S.rows, S.cols, out[0].tolist(), out[1:].tolist())


def transpose_space(S: AffineSubspace) -> AffineSubspace:
    mats = np.array((S.offset_vec,) + S.basis_vecs, dtype=np.int64).reshape(-1, S.rows, S.cols)
    out = mats.transpose(0, 2, 1).reshape(len(mats), S.rows * S.cols)
    return from_vectors(S.field, S.cols, S.rows, out[0].tolist(), out[1:].tolist())


def left_multiply_linear(P: Matrix, S: AffineSubspace) -> AffineSubspace:
    """P . S for a linear S and an arbitrary square P (not necessarily invertible)."""
    q = S.p
    mats = np.array(S.basis_vecs, dtype=np.int64).reshape(-1, S.rows, S.cols)
    out = (P.to_array() @ mats % q).reshape(len(mats), S.rows * S.cols)
    return from_vectors(S.field, S.rows, S.cols, [0] * (S.rows * S.cols), out.tolist())


@dataclass(frozen=True)
class CanonicalFamilySpec:
    """Blocks P_1, ..., P_k of non-isotropic matrices; r is the sum of their sizes."""
    blocks: tuple[Matrix, ...]

    @property
    def parts(self) -> tuple[int, ...]:
        return tuple(b.rows for b in self.blocks)

    @property
    def r(self) -> int:
        return sum(self.parts)

    @property
    def field(self) -> FieldSpec:
        return self.blocks[0].field

    @classmethod
    def from_parts(cls, parts: Sequence[int], f: FieldSpec) -> CanonicalFamilySpec:
        """Use the preferred class representative for every part size."""

        blocks = []
        for k in parts:
            reps = nonisotropic_classes(int(k), f)
            if not reps:
                raise InvalidSpecError(f"no non-isotropic {k}x{k} matrix exists over {f}")
            blocks.append(reps[0])
        return cls(tuple(blocks))

    def to_json(self) -> dict:
        return {"blocks": [b.to_json() for b in self.blocks]}


def construct_canonical(spec: CanonicalFamilySpec) -> AffineSubspace:
    """I_r + (P_1 Alt_{n_1} v ... v P_k Alt_{n_k})."""

    if not spec.blocks:
        raise InvalidSpecError("canonical family needs at least one block")
    f = spec.field
    acc = None
    for P in spec.blocks:
        if P.field.p != f.p:
            raise InvalidSpecError("blocks over different fields")
        if P.rows != P.cols or not is_invertible(P) or not is_nonisotropic(P):
            raise InvalidSpecError(f"block {P.row_list()} is not a non-isotropic invertible matrix")
        k = P.rows
        block = linear_span(f, k, k, [P @ A for A in alternate_basis(k, f)])
        acc = block if acc is None else vee(acc, block)
    r = spec.r
    return make_subspace(Matrix.identity(f, r), acc.basis)


def construct_intro_example(n: int, p: int, r: int, f: FieldSpec) -> AffineSubspace:
    """Top-left block I_r + strictly upper-triangular, everything else free."""
    if not 1 <= r <= min(n, p):
        raise InvalidSpecError(f"need 1 <= r <= min(n, p), got r={r}, n={n}, p={p}")
    upper = [Matrix.unit(f, r, r, i, j) for i in range(r) for j in range(i + 1, r)]
    return embed_inp(make_subspace(Matrix.identity(f, r), upper), n, p)


def expected_extremal_codim(r: int) -> int:
    return comb(r + 1, 2)
