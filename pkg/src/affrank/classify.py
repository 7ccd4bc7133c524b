"""Reduction of extremal affine spaces to the normal form i_{n,p}(W), with witnesses.

Pipeline for an affine space V of M_{n,p} with lower rank r and codimension
binom(r+1, 2):

1. ``rough_reduce``: move a rank-r member onto J = diag(I_r, 0).
2. Solve for row corrections (rows k <= r receive multiples of rows i > r)
   and column corrections (columns k <= r receive multiples of columns
   j > r) so that the translation space contains every matrix whose
   top-left r x r block is zero.  Under the pairing <A, M> = tr(A^T M) this
   says that each annihilating matrix N has its column space inside
   colspan [I_r; Lam^T] and its row space inside colspan [I_r; Mu], two
   linear systems in the coefficients.
3. ``core_space`` of the corrected space gives W, and the witness is checked
   by exact comparison of canonical encodings.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .errors import (BudgetExceededError, InconclusiveError, InvalidSpecError, NotExtremalError,
                     ShapeMismatchError, TheoremFalsifiedError)
from .field import FieldSpec
from .matla import (Matrix, batch_rank, gl_array, inverse, nullspace,
                    rank, rref, solve, span_basis)
from .quadform import QuadSignature, nonisotropic_classes
from .spaces import (DEFAULT_LRK_BUDGET, AffineSubspace, CanonicalFamilySpec, _coefficient_grid,
                     _transform_unchecked, annihilator, construct_canonical, embed_inp, from_vectors,
                     iter_point_chunks, lrk, rank_histogram, transpose_space)

DEFAULT_SEARCH_BUDGET = 10 ** 7
_Q_CHUNK = 4096


@dataclass(frozen=True)
class RoughReduction:
    P: Matrix
    Q: Matrix
    reduced: AffineSubspace


@dataclass(frozen=True)
class CoreSpaceReport:
    W: AffineSubspace
    dim_core: int
    dim_H: int


@dataclass(frozen=True)
class ClassificationWitness:
    P: Matrix
    Q: Matrix
    W: AffineSubspace
    signature: QuadSignature

    def to_json(self) -> dict:
        return {"P": self.P.to_json(), "Q": self.Q.to_json(), "W": self.W.to_json(),
                "signature": self.signature.to_json()}


@dataclass(frozen=True)
class HyperplaneClass:
    """V = {M : tr(A^T M) = 1}; rank(A) is the full equivalence invariant."""
    A: Matrix
    rank: int

    def to_json(self) -> dict:
        return {"A": self.A.to_json(), "rank": self.rank}


def _J(f: FieldSpec, n: int, p: int, r: int) -> Matrix:
    return Matrix.diag_block(f, n, p, r)


def first_member_of_rank(V: AffineSubspace, r: int, budget: int = DEFAULT_LRK_BUDGET) -> Matrix | None:
    seen = 0
    for pts in iter_point_chunks(V):
        hit = np.flatnonzero(batch_rank(pts, V.p) == r)
        if hit.size:
            return Matrix.from_array(V.field, pts[hit[0]])
        seen += len(pts)
        if seen >= budget:
            raise BudgetExceededError(f"no rank-{r} member among the first {seen} points",
                                      needed=len(V), budget=budget)
    return None


def rank_factor(M: Matrix) -> tuple[Matrix, Matrix]:
    """(P, Q) invertible with P M Q = diag(I_rk, 0)."""
    R, piv, E = rref(M)
    m = M.cols
    k = len(piv)
    rows = [list(R.entries[i * m:(i + 1) * m]) for i in range(k)]
    rows += [[int(c == j) for c in range(m)] for j in range(m) if j not in piv]
    Q = inverse(Matrix.from_rows(M.field, rows))
    return E, Q


def rough_reduce(V: AffineSubspace, r: int, budget: int = DEFAULT_LRK_BUDGET) -> RoughReduction:
    f, n, p = V.field, V.rows, V.cols
    if not 1 <= r <= min(n, p):
        raise InvalidSpecError(f"r={r} out of range for M({n},{p})")
    J = _J(f, n, p, r)
    if V.contains(J):
        return RoughReduction(Matrix.identity(f, n), Matrix.identity(f, p), V)
    M = first_member_of_rank(V, r, budget)
    if M is None:
        raise NotExtremalError(f"no member of rank {r}")
    P, Q = rank_factor(M)
    reduced = _transform_unchecked(V, P, Q)
    assert reduced.contains(J)
    return RoughReduction(P, Q, reduced)


def core_space(V: AffineSubspace, r: int) -> CoreSpaceReport:
    """Core space I_r + {A : diag(A, 0) in the translation space} of a roughly-reduced V."""
    f, n, p = V.field, V.rows, V.cols
    if not V.contains(_J(f, n, p, r)):
        raise NotExtremalError("core_space needs a roughly-reduced space (containing J)")
    q = V.p
    inside = [i * p + j for i in range(r) for j in range(r)]
    outside = [k for k in range(n * p) if k not in set(inside)]
    B = V.basis_vecs
    if B:
        out_cols = [[b[k] for b in B] for k in outside]
        combos = nullspace(out_cols, q, len(B))
        dim_H = len(span_basis([[b[k] for k in outside] for b in B], q))
    else:
        combos, dim_H = [], 0
    gens = []
    for c in combos:
        gens.append([sum(ci * b[k] for ci, b in zip(c, B)) % q for k in inside])
    I_r = Matrix.identity(f, r)
    W = from_vectors(f, r, r, I_r.entries, gens)
    return CoreSpaceReport(W, W.dim, dim_H)


def kw_invariant(S: AffineSubspace) -> list[list[int]]:
    """RREF basis of {x : x y^T lies in the translation space of S for every y}.

    x qualifies iff each generator x e_j^T is in the space, i.e. iff x is
    orthogonal to column j of every annihilating matrix.
    """
    n, p, q = S.rows, S.cols, S.p
    rows = []
    for N in annihilator(S):
        for j in range(p):
            rows.append([N[i * p + j] for i in range(n)])
    return span_basis(nullspace(rows, q, n), q) if rows else [[int(i == j) for j in range(n)] for i in range(n)]


def kw_dims(S: AffineSubspace) -> tuple[int, int]:
    """(column-type, row-type) invariant dimensions."""
    return len(kw_invariant(S)), len(kw_invariant(transpose_space(S)))


def _corrections(T: AffineSubspace, r: int):
    """Solve for (Lam, Mu) making diag-block corrections; None if a system is inconsistent."""
    n, p, q = T.rows, T.cols, T.p
    ann = annihilator(T)
    # Lam is r x (n-r): row k gets sum_i Lam[k, i] * row (r + i).  Need Lam^T N_top = N_bot.
    lam_rows, lam_rhs = [], []
    nr = n - r
    for N in ann:
        for i in range(nr):
            for j in range(p):
                row = [0] * (r * nr)
                for k in range(r):
                    row[k * nr + i] = N[k * p + j]
                lam_rows.append(row)
                lam_rhs.append(N[(r + i) * p + j])
    lam = solve(lam_rows, lam_rhs, q, r * nr) if nr else []
    # Mu is (p-r) x r: column k gets sum_j Mu[j, k] * column (r + j).  Need N_right = N_left Mu^T.
    pr = p - r
    mu_rows, mu_rhs = [], []
    for N in ann:
        for a in range(n):
            for j in range(pr):
                row = [0] * (pr * r)
                for k in range(r):
                    row[j * r + k] = N[a * p + k]
                mu_rows.append(row)
                mu_rhs.append(N[a * p + r + j])
    mu = solve(mu_rows, mu_rhs, q, pr * r) if pr else []
    if lam is None or mu is None:
        return None
    f = T.field
    Pc = [[int(i == j) for j in range(n)] for i in range(n)]
    for k in range(r):
        for i in range(nr):
            Pc[k][r + i] = lam[k * nr + i]
    Qc = [[int(i == j) for j in range(p)] for i in range(p)]
    for j in range(pr):
        for k in range(r):
            Qc[r + j][k] = mu[j * r + k]
    return Matrix.from_rows(f, Pc), Matrix.from_rows(f, Qc), (lam_rows, lam_rhs, mu_rows, mu_rhs)


def check_extremal(V: AffineSubspace, r: int, budget: int = DEFAULT_LRK_BUDGET) -> None:
    if not 1 <= r <= min(V.rows, V.cols):
        raise NotExtremalError(f"r={r} out of range for M{V.shape}")
    want = comb(r + 1, 2)
    if V.codim != want:
        raise NotExtremalError(f"codimension {V.codim}, expected binom({r}+1, 2) = {want}")
    try:
        low = lrk(V, budget)
    except BudgetExceededError as exc:
        raise InconclusiveError(str(exc)) from exc
    if low != r:
        raise NotExtremalError(f"lower rank {low}, expected {r}")


def reduce_to_canonical(V: AffineSubspace, r: int, budget: int = DEFAULT_LRK_BUDGET,
                        search_budget: int = DEFAULT_SEARCH_BUDGET) -> ClassificationWitness:
    """Witness (P, Q, W, signature) with P V Q = i_{n,p}(W)."""
    check_extremal(V, r, budget)
    f, n, p = V.field, V.rows, V.cols
    if r == 1 and min(n, p) > 1 and classify_r1(V).rank != 1:
        raise NotExtremalError("hyperplane {tr(A^T M) = 1} with rank(A) > 1 has no normal form i_{n,p}(W)")
    rr = rough_reduce(V, r, budget)
    fixed = _corrections(rr.reduced, r)
    if fixed is None:
        raise TheoremFalsifiedError(
            "correction system is inconsistent on an extremal space",
            dump={"field": f.p, "r": r, "V": V.to_json(), "reduced": rr.reduced.to_json()})
    Pc, Qc, _ = fixed
    P = Pc @ rr.P
    Q = rr.Q @ Qc
    image = _transform_unchecked(V, P, Q)
    core = core_space(image, r)
    target = embed_inp(core.W, n, p)
    if image != target or core.dim_core != comb(r, 2) or core.dim_H != n * p - r * r:
        raise TheoremFalsifiedError(
            "corrected space is not of the form i_{n,p}(W)",
            dump={"field": f.p, "r": r, "V": V.to_json(), "P": P.to_json(), "Q": Q.to_json(),
                  "image": image.to_json()})
    sig = signature(core.W, search_budget)
    return ClassificationWitness(P, Q, core.W, sig)


def compositions(r: int, sizes: Sequence[int]) -> list[tuple[int, ...]]:
    """Ordered compositions of r with parts drawn from ``sizes``, lexicographic."""
    out = []

    def rec(left, acc):
        if left == 0:
            out.append(tuple(acc))
            return
        for s in sorted(sizes):
            if s <= left:
                rec(left - s, acc + [s])

    rec(r, [])
    return sorted(out)


def class_representatives(k: int, f: FieldSpec) -> list[Matrix]:
    """Similarity-class representatives of non-isotropic k-dim forms.

    Enumerated whenever the budget allows.  Beyond it, k >= 3 falls back on
    Chevalley-Warning: a form in three or more variables over a finite field
    has a nontrivial zero, so there is nothing to list.
    """
    try:
        return nonisotropic_classes(k, f)
    except BudgetExceededError:
        if k >= 3:
            return []
        raise


def canonical_candidates(r: int, f: FieldSpec) -> list[CanonicalFamilySpec]:
    """Every canonical family of size r built from class representatives, in lexicographic order."""
    reps = {k: class_representatives(k, f) for k in range(1, r + 1)}
    sizes = [k for k, v in reps.items() if v]
    out = []
    for comp in compositions(r, sizes):
        for blocks in itertools.product(*(reps[k] for k in comp)):
            out.append(CanonicalFamilySpec(tuple(blocks)))
    return out


def signature(W: AffineSubspace, budget: int = DEFAULT_SEARCH_BUDGET) -> QuadSignature:
    return signature_with_witness(W, budget)[0]


def signature_with_witness(W: AffineSubspace, budget: int = DEFAULT_SEARCH_BUDGET):
    """(signature, P, Q) with P W Q equal to the canonical space of that signature."""
    r = W.rows
    if W.rows != W.cols:
        raise ShapeMismatchError("signature needs a space of square matrices")
    if W.dim != comb(r, 2):
        raise NotExtremalError(f"dimension {W.dim}, a maximal space has {comb(r, 2)}")
    try:
        if lrk(W, budget) != r:
            raise NotExtremalError("space contains a singular matrix")
    except BudgetExceededError as exc:
        raise InconclusiveError(str(exc)) from exc
    hist = rank_histogram(W.translation(), budget)
    inconclusive = False
    for spec in canonical_candidates(r, W.field):
        C = construct_canonical(spec)
        if rank_histogram(C.translation(), budget) != hist:
            continue
        try:
            wit = equiv_decide(W, C, budget)
        except InconclusiveError:
            inconclusive = True
            continue
        if wit is not None:
            return QuadSignature(spec.parts, spec.blocks), wit[0], wit[1]
    if inconclusive:
        raise InconclusiveError("signature search ran out of budget")
    raise TheoremFalsifiedError("maximal nonsingular space matches no canonical family",
                                dump={"field": W.p, "W": W.to_json()})


def translation_rank_multiset(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> dict[int, int]:
    return rank_histogram(S.translation(), budget)


def strata_spans(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> dict[int, tuple[list, list]]:
    """For each rank k of the translation space: RREF bases of the span of the
    column spaces and of the row spaces of its rank-k members.

    Under M -> P M Q column spaces move by P and row spaces by Q^T.
    """
    L = S.translation()
    if len(L) > budget:
        raise BudgetExceededError(f"{len(L)} points exceed budget {budget}", needed=len(L), budget=budget)
    q, n, p = S.p, S.rows, S.cols
    wc, wr = q ** np.arange(n, dtype=np.int64), q ** np.arange(p, dtype=np.int64)
    cols: dict[int, set] = {}
    rows: dict[int, set] = {}
    for pts in iter_point_chunks(L):
        rk = batch_rank(pts, q)
        for k in np.unique(rk):
            sel = pts[rk == k]
            cols.setdefault(int(k), set()).update(np.unique(sel.transpose(0, 2, 1) @ wc).tolist())
            rows.setdefault(int(k), set()).update(np.unique(sel @ wr).tolist())

    def basis(codes, length):
        return span_basis([[c // q ** i % q for i in range(length)] for c in sorted(codes)], q)

    return {k: (basis(cols[k], n), basis(rows[k], p)) for k in sorted(cols)}


def span_profile(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> tuple:
    """(k, column-span dim, row-span dim) per rank k: an equivalence invariant that
    separates, for instance, the block orders of a vee chain."""
    return tuple((k, len(c), len(r)) for k, (c, r) in strata_spans(S, budget).items())


def invariants(S: AffineSubspace, budget: int = DEFAULT_LRK_BUDGET) -> tuple:
    return (S.dim, lrk(S, budget), tuple(sorted(translation_rank_multiset(S, budget).items())), kw_dims(S),
            span_profile(S, budget))


def equiv_decide(S: AffineSubspace, T: AffineSubspace, budget: int = DEFAULT_SEARCH_BUDGET,
                 prefilter: bool = True) -> tuple[Matrix, Matrix] | None:
    """(P, Q) with P S Q = T, or None when the exhaustive search finds none.

    Enumerates the right factor over GL_p in lexicographic order, keeping
    only those compatible with the row-type invariant, and solves linearly
    for the left factor; the first invertible left factor wins.  The
    smaller side is enumerated (transposing both spaces if needed).
    """
    if S.shape != T.shape:
        raise ShapeMismatchError(f"M{S.shape} vs M{T.shape}")
    if S.p != T.p:
        raise ShapeMismatchError("spaces over different fields")
    f, n, p = S.field, S.rows, S.cols
    if S == T:
        return Matrix.identity(f, n), Matrix.identity(f, p)
    if S.dim != T.dim:
        return None
    if prefilter:
        try:
            if invariants(S, budget) != invariants(T, budget):
                return None
        except BudgetExceededError:
            pass
    if p > n:
        wit = _search(transpose_space(S), transpose_space(T), budget)
        return None if wit is None else (wit[1].T, wit[0].T)
    return _search(S, T, budget)


def _search(S: AffineSubspace, T: AffineSubspace, budget: int) -> tuple[Matrix, Matrix] | None:
    f, n, p, q = S.field, S.rows, S.cols, S.p
    try:
        gl = gl_array(p, q, budget)
    except BudgetExceededError as exc:
        raise InconclusiveError(str(exc)) from exc
    work = 0
    # Row-type subspaces R of S (the kw invariant, the row spans of each rank
    # stratum) obey R(P S Q) = R(S) Q, so Q must carry each onto its partner.
    pairs = [(kw_invariant(transpose_space(S)), kw_invariant(transpose_space(T)))]
    try:
        sa, ta = strata_spans(S, budget), strata_spans(T, budget)
        if sa.keys() != ta.keys():
            return None
        pairs += [(sa[k][1], ta[k][1]) for k in sa]
    except BudgetExceededError:
        pass
    keep = np.ones(len(gl), dtype=bool)
    gl64 = gl.astype(np.int64)
    for RS, RT in pairs:
        if len(RS) != len(RT):
            return None
        if not 0 < len(RS) < p:
            continue
        perp = np.array(nullspace(RT, q, p), dtype=np.int64)
        imgs = np.einsum("gji,kj->gki", gl64, np.array(RS, dtype=np.int64)) % q
        keep &= ~(np.einsum("zi,gki->gzk", perp, imgs) % q).any(axis=(1, 2))
    ann = np.array(annihilator(T), dtype=np.int64).reshape(-1, n, p)
    Sb = np.array(S.basis_vecs, dtype=np.int64).reshape(-1, n, p)
    So = np.array(S.offset_vec, dtype=np.int64).reshape(n, p)
    rhs_off = (ann * np.array(T.offset_vec, dtype=np.int64).reshape(n, p)).sum(axis=(1, 2)) % q
    rhs = np.concatenate([np.zeros(len(ann) * len(Sb), dtype=np.int64), rhs_off])
    order = np.flatnonzero(keep)
    for start in range(0, len(order), _Q_CHUNK):
        idx = order[start:start + _Q_CHUNK]
        Qs = gl[idx].astype(np.int64)
        work += len(idx)
        A = _systems(ann, Sb, So, Qs, q)
        # consistent iff appending the right-hand side does not raise the rank
        aug = np.concatenate([A, np.broadcast_to(rhs[:, None], (len(idx), len(rhs), 1))], axis=2)
        ok = batch_rank(A, q) == batch_rank(aug, q) if len(rhs) else np.ones(len(idx), dtype=bool)
        for g in np.flatnonzero(ok):
            rows = A[g].tolist()
            x0 = solve(rows, rhs.tolist(), q, n * n)
            ker = nullspace(rows, q, n * n) if rows else [[int(i == j) for j in range(n * n)] for i in range(n * n)]
            P, used = _first_invertible(x0, ker, n, q, budget - work)
            work += used
            if P is not None:
                Pm = Matrix.from_array(f, P)
                Qm = Matrix.from_array(f, Qs[g])
                if _transform_unchecked(S, Pm, Qm) != T:
                    raise TheoremFalsifiedError("linear solve produced a non-witness",
                                                dump={"S": S.to_json(), "T": T.to_json()})
                return Pm, Qm
        if work > budget:
            raise InconclusiveError(f"equivalence search exceeded budget {budget}")
    return None


def _systems(ann, Sb, So, Qs, q):
    """Coefficient matrices, one per right factor, of the conditions on P for P S Q = T.

    The coefficient of P_ik in <N, P B Q> is (N (B Q)^T)_ik.
    """
    G, n = len(Qs), So.shape[0]
    BQ = np.einsum("bij,gjk->gbik", Sb, Qs) % q
    lin = np.einsum("aij,gbkj->gabik", ann, BQ).reshape(G, -1, n * n)
    off = np.einsum("aij,gkj->gaik", ann, np.einsum("ij,gjk->gik", So, Qs) % q).reshape(G, -1, n * n)
    return np.concatenate([lin, off], axis=1) % q


def _first_invertible(x0, ker, n, q, budget):
    """First invertible matrix in x0 + span(ker), lexicographic over coefficients."""
    x0 = np.array(x0, dtype=np.int64)
    K = np.array(ker, dtype=np.int64).reshape(len(ker), n * n)
    total = q ** len(ker)
    used = 0
    chunk = 1 << 14
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        C = _coefficient_grid(q, len(ker), start, stop)
        cands = ((C @ K + x0) % q).reshape(-1, n, n) if len(ker) else x0.reshape(1, n, n)
        used += len(cands)
        hit = np.flatnonzero(batch_rank(cands, q) == n)
        if hit.size:
            return cands[hit[0]], used
        if used > budget:
            raise InconclusiveError("left-factor search exceeded budget")
    return None, used


def classify_r1(V: AffineSubspace) -> HyperplaneClass:
    """A with V = {M : tr(A^T M) = 1}, for a non-linear hyperplane V."""
    if V.codim != 1:
        raise NotExtremalError(f"codimension {V.codim}, a hyperplane has codimension 1")
    q = V.p
    (N,) = annihilator(V)
    c = sum(a * b for a, b in zip(N, V.offset_vec)) % q
    if c == 0:
        raise InvalidSpecError("hyperplane is linear (contains 0)")
    ci = pow(c, q - 2, q)
    A = Matrix(V.field, V.rows, V.cols, tuple(x * ci % q for x in N))
    return HyperplaneClass(A, rank(A))


def classify_subspace(V: AffineSubspace, r: int, budget: int = DEFAULT_LRK_BUDGET):
    """Dispatch: hyperplane invariant for r = 1, normal-form witness otherwise."""
    if r == 1 and min(V.rows, V.cols) > 1:
        check_extremal(V, 1, budget)
        return classify_r1(V)
    return reduce_to_canonical(V, r, budget)
