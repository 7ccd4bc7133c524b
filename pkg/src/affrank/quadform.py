"""Quadratic forms X -> X^T P X: isotropy, congruence and similarity over GF(p).

A form only sees the symmetric part of its gram matrix, so ``similar`` and
``nonisotropic_classes`` work with forms, while ``congruent`` is the exact
matrix relation A = R B R^T.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BudgetExceededError, InconclusiveError, ShapeMismatchError
from .field import GF, FieldSpec
from .matla import DEFAULT_GL_BUDGET, Matrix, det, gl_array, is_invertible

DEFAULT_FORM_BUDGET = 10 ** 7


@dataclass(frozen=True)
class QuadForm:
    gram: Matrix

    def __post_init__(self):
        if self.gram.rows != self.gram.cols:
            raise ShapeMismatchError("gram matrix must be square")

    @property
    def dim(self) -> int:
        return self.gram.rows

    @property
    def field(self) -> FieldSpec:
        return self.gram.field

    def __call__(self, x) -> int:
        n, p = self.dim, self.gram.p
        e = self.gram.entries
        return sum(x[i] * e[i * n + j] * x[j] for i in range(n) for j in range(n)) % p

    def symmetric_gram(self) -> Matrix:
        return symmetric_part(self.gram)


@dataclass(frozen=True)
class QuadSignature:
    """Ordered block sizes of a canonical decomposition plus a class label per block.

    Over odd prime fields a block size fixes its similarity class, so the label
    is the preferred representative gram of that class.
    """
    parts: tuple[int, ...]
    labels: tuple[Matrix, ...] = field(default=(), compare=False)

    @property
    def r(self) -> int:
        return sum(self.parts)

    def to_json(self) -> dict:
        out = {"parts": list(self.parts)}
        if self.labels:
            out["labels"] = [m.row_list() for m in self.labels]
        return out


def symmetric_part(P: Matrix) -> Matrix:
    p = P.p
    half = (p + 1) // 2
    return Matrix(P.field, P.rows, P.cols,
                  tuple((a + b) * half % p for a, b in zip(P.entries, P.T.entries)))


def _nonzero_vectors(n: int, q: int) -> np.ndarray:
    vecs = np.array(list(itertools.product(range(q), repeat=n)), dtype=np.int64)
    return vecs[1:]


def _projective_points(n: int, q: int) -> np.ndarray:
    """One nonzero vector per line (first nonzero coordinate 1); x^T G x scales by squares."""
    vecs = _nonzero_vectors(n, q)
    lead = vecs[np.arange(len(vecs)), (vecs != 0).argmax(axis=1)]
    return vecs[lead == 1]


def form_values(grams: np.ndarray, vecs: np.ndarray, q: int) -> np.ndarray:
    """Values x^T G x for every gram (G, n, n) and vector (V, n): shape (G, V)."""
    return np.einsum("vi,gij,vj->gv", vecs, grams.astype(np.int64), vecs) % q


def is_nonisotropic(P: Matrix, budget: int = DEFAULT_FORM_BUDGET) -> bool:
    """True iff X^T P X != 0 for every nonzero X; False for singular P."""
    if P.rows != P.cols:
        raise ShapeMismatchError("non-isotropy needs a square matrix")
    q, n = P.p, P.rows
    if q ** n - 1 > budget:
        raise BudgetExceededError(f"{q ** n - 1} vectors exceed budget {budget}", needed=q ** n - 1, budget=budget)
    if not is_invertible(P):
        return False
    vals = form_values(P.to_array()[None], _nonzero_vectors(n, q), q)
    return bool(vals.all())


def congruent(A: Matrix, B: Matrix, budget: int = DEFAULT_GL_BUDGET) -> Matrix | None:
    """R with A = R B R^T, or None after an exhaustive search of GL_n."""
    if A.shape != B.shape or A.rows != A.cols:
        raise ShapeMismatchError("congruence needs square matrices of equal size")
    q, n = A.p, A.rows
    if A == B:
        return Matrix.identity(A.field, n)
    gl = _gl_or_inconclusive(n, q, budget)
    target = A.to_array()
    imgs = np.einsum("gij,jk,glk->gil", gl.astype(np.int64), B.to_array(), gl.astype(np.int64)) % q
    hit = np.flatnonzero((imgs == target).all(axis=(1, 2)))
    if hit.size:
        return Matrix.from_array(A.field, gl[hit[0]])
    return None


def _gl_or_inconclusive(n: int, q: int, budget: int) -> np.ndarray:
    try:
        return gl_array(n, q, budget)
    except BudgetExceededError as exc:
        raise InconclusiveError(f"GL_{n}(F_{q}) search exceeds budget {budget}") from exc


def similar(A: Matrix, B: Matrix, budget: int = DEFAULT_GL_BUDGET) -> tuple[int, Matrix] | None:
    """(lam, R) with sym(A) = lam R sym(B) R^T, or None when no such pair exists.

    Prefilter: when both forms are nondegenerate and n is even, det(A)/det(B)
    must be a square since lam^n is one.
    """
    if A.shape != B.shape or A.rows != A.cols:
        raise ShapeMismatchError("similarity needs square matrices of equal size")
    f, q, n = A.field, A.p, A.rows
    SA, SB = symmetric_part(A), symmetric_part(B)
    if SA == SB:
        return 1, Matrix.identity(f, n)
    dA, dB = det(SA), det(SB)
    if (dA == 0) != (dB == 0):
        return None
    if dA and n % 2 == 0 and not f.is_square(dA * f.inv(dB)):
        return None
    gl = _gl_or_inconclusive(n, q, budget).astype(np.int64)
    imgs = np.einsum("gij,jk,glk->gil", gl, SB.to_array(), gl) % q
    target = SA.to_array()
    for lam in range(1, q):
        hit = np.flatnonzero((imgs * lam % q == target).all(axis=(1, 2)))
        if hit.size:
            return lam, Matrix.from_array(f, gl[hit[0]])
    return None


@lru_cache(maxsize=None)
def _classes(r_part: int, q: int, budget: int) -> tuple[tuple[int, ...], ...]:
    f = GF(q)
    n = r_part
    free = n * (n + 1) // 2
    work = q ** free * (q ** n - 1) // (q - 1)
    if work > budget:
        raise BudgetExceededError(f"form enumeration for n={n} over GF({q}) exceeds budget {budget}",
                                  needed=work, budget=budget)
    # Lower-triangular grams are one per form, and in lexicographic matrix order
    # the first gram met in a class is the smallest gram (of any shape) of that class.
    tri = [(i, j) for i in range(n) for j in range(n) if j <= i]
    grams = np.zeros((q ** free, n, n), dtype=np.int64)
    digits = np.array(list(itertools.product(range(q), repeat=free)), dtype=np.int64)
    for k, (i, j) in enumerate(tri):
        grams[:, i, j] = digits[:, k]
    flat = grams.reshape(len(grams), -1)
    order = np.lexsort(flat.T[::-1])
    grams = grams[order]
    vecs = _projective_points(n, q)
    ok = np.ones(len(grams), dtype=bool)
    for s in range(0, len(grams), 4096):
        ok[s:s + 4096] = form_values(grams[s:s + 4096], vecs, q).all(axis=1)
    cands = grams[ok]
    half = (q + 1) // 2
    weights = q ** np.arange(n * n, dtype=np.int64)

    def key(mats):
        sym = (mats + mats.transpose(0, 2, 1)) * half % q
        return sym.reshape(len(sym), n * n) @ weights

    cand_keys = key(cands)
    covered = np.zeros(len(cands), dtype=bool)
    reps: list[Matrix] = []
    if not len(cands):
        return ()
    gl = gl_array(n, q, budget).astype(np.int64)
    for i in range(len(cands)):
        if covered[i]:
            continue
        reps.append(Matrix.from_array(f, cands[i]))
        # similarity orbit of this form: lam * R S R^T over GL_n and nonzero lam
        base = np.einsum("gij,jk,glk->gil", gl, cands[i], gl) % q
        orbit = np.unique(np.concatenate([key(base * lam % q) for lam in range(1, q)]))
        covered |= np.isin(cand_keys, orbit)
    return tuple(m.entries for m in reps)


def nonisotropic_classes(r_part: int, f: FieldSpec, budget: int = DEFAULT_FORM_BUDGET) -> list[Matrix]:
    """One representative gram per similarity class of non-isotropic forms of dimension r_part."""
    if r_part < 1:
        raise ShapeMismatchError("form dimension must be positive")
    return [Matrix(f, r_part, r_part, e) for e in _classes(r_part, f.p, budget)]
