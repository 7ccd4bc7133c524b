"""Exhaustive census of affine subspaces of small matrix spaces.

Linear subspaces are walked once each by RREF pivot pattern; affine
subspaces are their cosets, with offsets supported off the pivot columns.
Every matrix of M_{n,p}(F_q) gets an integer index (base-q digits, row-major)
and ranks come from a precomputed table, so the lower rank of a subspace is a
table lookup over its point indices.  A subspace's sorted point-index tuple is
its hash key for orbit membership.

Work is split into tasks (pivot pattern x slice of free-entry fillings) whose
results are merged in task order, so reports do not depend on the number of
worker processes.
"""
from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterator

import numpy as np

from .errors import BudgetExceededError, TheoremFalsifiedError
from .field import FieldSpec
from .classify import canonical_candidates
from .matla import Matrix, all_matrices_array, batch_rank, gl_order, inverse, nullspace
from .spaces import (AffineSubspace, alternate_space, construct_canonical, embed_inp, from_vectors,
                     iter_point_chunks, left_multiply_linear, linear_span, transform)

DEFAULT_CENSUS_BUDGET = 2 * 10 ** 8
_CELLS = 1 << 21


def gaussian_binomial(m: int, d: int, q: int) -> int:
    if d < 0 or d > m:
        return 0
    num = den = 1
    for i in range(d):
        num *= q ** (m - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def affine_count(m: int, d: int, q: int) -> int:
    return q ** (m - d) * gaussian_binomial(m, d, q)


@dataclass
class CensusReport:
    field: int
    n: int
    p_cols: int
    r: int
    d: int
    total: int = 0
    lrk_histogram: dict[int, int] = field(default_factory=dict)
    extremal_count: int = 0
    orbit_count: int = 0
    orbit_sizes: list[int] = field(default_factory=list)
    orbit_hits: list[int] = field(default_factory=list)
    signatures: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["lrk_histogram"] = {str(k): v for k, v in sorted(self.lrk_histogram.items())}
        return out

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lrk", "count"])
        for k, v in sorted(self.lrk_histogram.items()):
            w.writerow([k, v])
        return buf.getvalue()


# Pivot-pattern traversal ------------------------------------------------

def pivot_patterns(m: int, d: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(m), d))


def free_positions(pivots: tuple[int, ...], m: int) -> list[tuple[int, int]]:
    piv = set(pivots)
    return [(i, c) for i, pc in enumerate(pivots) for c in range(pc + 1, m) if c not in piv]


def _digits(q: int, k: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), k), dtype=np.int64)
    for pos in range(k - 1, -1, -1):
        out[:, pos] = idx % q
        idx //= q
    return out


def rref_bases(pivots: tuple[int, ...], m: int, q: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """RREF bases with the given pivots, fillings ``start:stop`` in lexicographic order: (L, d, m)."""
    d = len(pivots)
    free = free_positions(pivots, m)
    total = q ** len(free)
    stop = total if stop is None else min(stop, total)
    fill = _digits(q, len(free), start, stop)
    out = np.zeros((stop - start, d, m), dtype=np.int64)
    for i, c in enumerate(pivots):
        out[:, i, c] = 1
    for k, (i, c) in enumerate(free):
        out[:, i, c] = fill[:, k]
    return out


def coset_offsets(pivots: tuple[int, ...], m: int, q: int) -> np.ndarray:
    """All offsets vanishing on pivot coordinates, lexicographic: (q^(m-d), m)."""
    nonpiv = [c for c in range(m) if c not in set(pivots)]
    dig = _digits(q, len(nonpiv), 0, q ** len(nonpiv))
    out = np.zeros((len(dig), m), dtype=np.int64)
    out[:, nonpiv] = dig
    return out


def iter_linear_subspaces(m: int, d: int, q: int) -> Iterator[np.ndarray]:
    for piv in pivot_patterns(m, d):
        yield rref_bases(piv, m, q)


def enumerate_affine(n: int, p_cols: int, d: int, f: FieldSpec,
                     budget: int = DEFAULT_CENSUS_BUDGET) -> Iterator[AffineSubspace]:
    """Every affine subspace of dimension d of M_{n,p_cols} exactly once, canonically encoded."""
    m, q = n * p_cols, f.p
    total = affine_count(m, d, q)
    if total > budget:
        raise BudgetExceededError(f"{total} subspaces exceed budget {budget}", needed=total, budget=budget)
    for piv in pivot_patterns(m, d):
        offs = coset_offsets(piv, m, q)
        offs_t = [tuple(int(x) for x in o) for o in offs]
        for B in rref_bases(piv, m, q):
            basis = tuple(tuple(int(x) for x in row) for row in B)
            for o in offs_t:
                yield AffineSubspace(f, n, p_cols, o, basis)


# Rank tables and point keys ---------------------------------------------

@lru_cache(maxsize=8)
def rank_table(n: int, p_cols: int, q: int) -> np.ndarray:
    mats = all_matrices_array(n, p_cols, q)
    return batch_rank(mats, q).astype(np.int8)


def index_weights(m: int, q: int) -> np.ndarray:
    return q ** np.arange(m - 1, -1, -1, dtype=np.int64)


def point_indices(S: AffineSubspace) -> np.ndarray:
    """Sorted indices of the members of S."""
    q, d = S.p, S.dim
    C = _digits(q, d, 0, q ** d)
    B = np.array(S.basis_vecs, dtype=np.int64).reshape(d, S.rows * S.cols)
    pts = (C @ B + np.array(S.offset_vec, dtype=np.int64)) % q
    return np.sort(pts @ index_weights(S.rows * S.cols, q))


def subspace_from_indices(idx, n: int, p_cols: int, f: FieldSpec) -> AffineSubspace:
    q, m = f.p, n * p_cols
    idx = np.asarray(idx, dtype=np.int64)
    pts = (idx[:, None] // index_weights(m, q)[None, :]) % q
    base = pts[0]
    return from_vectors(f, n, p_cols, base.tolist(), ((pts[1:] - base) % q).tolist())


# Census tasks -----------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    n: int
    p_cols: int
    q: int
    pivots: tuple[int, ...]
    start: int
    stop: int
    key_lrk: int | None      # collect point keys of subspaces with this lower rank
    bad_from: int | None     # report the first subspace with lrk >= bad_from


def _run_task(t: _Task):
    m, q, d = t.n * t.p_cols, t.q, len(t.pivots)
    table = rank_table(t.n, t.p_cols, q)
    w = index_weights(m, q)
    B = rref_bases(t.pivots, m, q, t.start, t.stop)                   # (L, d, m)
    offs = coset_offsets(t.pivots, m, q)                              # (O, m)
    C = _digits(q, d, 0, q ** d)                                      # (K, d)
    lin = np.einsum("kd,ldm->lkm", C, B) % q                          # (L, K, m)
    hist = np.zeros(min(t.n, t.p_cols) + 1, dtype=np.int64)
    keys = []
    first_bad = None
    o_step = max(1, _CELLS // max(1, lin.size))
    for o_start in range(0, len(offs), o_step):
        o = offs[o_start:o_start + o_step]
        pts = (lin[:, None, :, :] + o[None, :, None, :]) % q          # (L, O, K, m)
        idx = pts @ w                                                 # (L, O, K)
        low = table[idx].min(axis=2)                                  # (L, O)
        hist += np.bincount(low.ravel(), minlength=hist.size)
        if t.key_lrk is not None:
            sel = low == t.key_lrk
            if sel.any():
                keys.append(np.sort(idx[sel], axis=1).astype(np.int32))
        if t.bad_from is not None and first_bad is None:
            bad = np.argwhere(low >= t.bad_from)
            if len(bad):
                first_bad = np.sort(idx[bad[0][0], bad[0][1]]).tolist()
    kk = np.concatenate(keys) if keys else np.zeros((0, q ** d), dtype=np.int32)
    return hist, kk, first_bad


def _tasks(n, p_cols, d, q, key_lrk, bad_from):
    m = n * p_cols
    size = max(1, _CELLS // (q ** d * m))
    out = []
    for piv in pivot_patterns(m, d):
        total = q ** len(free_positions(piv, m))
        for s in range(0, total, size):
            out.append(_Task(n, p_cols, q, piv, s, min(total, s + size), key_lrk, bad_from))
    return out


def census(n: int, p_cols: int, d: int, f: FieldSpec, *, jobs: int = 1, key_lrk: int | None = None,
           bad_from: int | None = None, budget: int = DEFAULT_CENSUS_BUDGET):
    """Scan every d-dimensional affine subspace of M_{n,p_cols}.

    Returns ``(total, lrk_histogram, keys, first_bad)`` where ``keys`` holds the
    sorted point indices of subspaces whose lower rank equals ``key_lrk`` and
    ``first_bad`` the first subspace (enumeration order) with lrk >= ``bad_from``.
    """
    q, m = f.p, n * p_cols
    total = affine_count(m, d, q)
    if total * q ** d > budget or q ** m > budget:
        raise BudgetExceededError(f"census of {total} subspaces x {q ** d} points exceeds budget {budget}",
                                  needed=total * q ** d, budget=budget)
    tasks = _tasks(n, p_cols, d, q, key_lrk, bad_from)
    rank_table(n, p_cols, q)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_task(t) for t in tasks]
    hist = np.zeros(min(n, p_cols) + 1, dtype=np.int64)
    keys, first_bad = [], None
    for h, k, b in results:
        hist += h
        if len(k):
            keys.append(k)
        if first_bad is None and b is not None:
            first_bad = b
    counted = int(hist.sum())
    if counted != total:
        raise TheoremFalsifiedError(f"enumeration produced {counted} subspaces, closed form says {total}")
    kk = np.concatenate(keys) if keys else np.zeros((0, q ** d), dtype=np.int32)
    return total, {i: int(c) for i, c in enumerate(hist) if c}, kk, first_bad


# Orbits -----------------------------------------------------------------

def gl_generators(n: int, q: int) -> list[np.ndarray]:
    """Transvections I + E_ij (i != j) and diag(g, 1, ..., 1), g a primitive root: they generate GL_n."""
    g = next(a for a in range(2, q) if all(pow(a, (q - 1) // d, q) != 1 for d in _prime_factors(q - 1))) if q > 2 else 1
    gens = []
    for i in range(n):
        for j in range(n):
            if i != j:
                T = np.eye(n, dtype=np.int64)
                T[i, j] = 1
                gens.append(T)
    D = np.eye(n, dtype=np.int64)
    D[0, 0] = g
    gens.append(D)
    return gens


def _prime_factors(k: int) -> list[int]:
    out, d = [], 2
    while d * d <= k:
        if k % d == 0:
            out.append(d)
            while k % d == 0:
                k //= d
        d += 1
    if k > 1:
        out.append(k)
    return out


def orbit_keys(S: AffineSubspace, budget: int = DEFAULT_CENSUS_BUDGET) -> set[bytes]:
    """Point-set keys of every P S Q, (P, Q) in GL_n x GL_p, by closure under group generators."""
    n, p_cols, q = S.rows, S.cols, S.p
    K = q ** S.dim
    w = index_weights(n * p_cols, q)
    left = gl_generators(n, q)
    right = gl_generators(p_cols, q)
    start = point_indices(S).astype(np.int32)
    seen = {start.tobytes()}
    frontier = start[None]
    limit = gl_order(n, q) * gl_order(p_cols, q)
    while len(frontier):
        pts = ((frontier[..., None].astype(np.int64) // w) % q).reshape(len(frontier), K, n, p_cols)
        images = [np.einsum("ij,fkjl->fkil", G, pts) for G in left]
        images += [np.einsum("fkil,lj->fkij", pts, G) for G in right]
        fresh = []
        for img in images:
            keys = np.sort((img % q).reshape(len(frontier), K, -1) @ w, axis=1).astype(np.int32)
            for row in keys:
                b = row.tobytes()
                if b not in seen:
                    seen.add(b)
                    fresh.append(row)
        if len(seen) * K > budget or len(seen) > limit:
            raise BudgetExceededError("orbit enumeration exceeds budget", needed=len(seen) * K, budget=budget)
        frontier = np.array(fresh, dtype=np.int32).reshape(-1, K)
    return seen


def _classify_keys(keys: np.ndarray, orbits: list[set[bytes]]):
    hits = [0] * len(orbits)
    uncovered = None
    multi = None
    for row in keys:
        b = row.tobytes()
        found = [i for i, o in enumerate(orbits) if b in o]
        if not found and uncovered is None:
            uncovered = row
        if len(found) > 1 and multi is None:
            multi = row
        for i in found:
            hits[i] += 1
    return hits, uncovered, multi


def _canonical_reps(n: int, p_cols: int, r: int, f: FieldSpec):
    """(label, representative) pairs for the expected orbits of extremal spaces."""

    if r == 1 and min(n, p_cols) > 1:
        reps = []
        for k in range(1, min(n, p_cols) + 1):
            A = Matrix.diag_block(f, n, p_cols, k)
            reps.append(({"rank_A": k}, hyperplane(A)))
        return reps
    return [({"parts": list(spec.parts)}, embed_inp(construct_canonical(spec), n, p_cols))
            for spec in canonical_candidates(r, f)]


def hyperplane(A: Matrix) -> AffineSubspace:
    """{M : tr(A^T M) = 1} for nonzero A."""
    q = A.p
    a = list(A.entries)
    j = next(i for i, x in enumerate(a) if x)
    off = [0] * len(a)
    off[j] = pow(a[j], q - 2, q)
    gens = []
    for k in range(len(a)):
        if k == j:
            continue
        g = [0] * len(a)
        g[k] = 1
        g[j] = -a[k] * pow(a[j], q - 2, q) % q
        gens.append(g)
    return from_vectors(A.field, A.rows, A.cols, off, gens)


def _orbit_partition(report: CensusReport, keys: np.ndarray, reps, f: FieldSpec, budget: int):
    n, p_cols = report.n, report.p_cols
    orbits = [orbit_keys(S, budget) for _, S in reps]
    group = gl_order(n, f.p) * gl_order(p_cols, f.p)
    sizes = [len(o) for o in orbits]
    for s in sizes:
        if group % s:
            raise TheoremFalsifiedError(f"orbit size {s} does not divide |GL x GL| = {group}")
    hits, uncovered, multi = _classify_keys(keys, orbits)
    if uncovered is not None:
        S = subspace_from_indices(uncovered, n, p_cols, f)
        raise TheoremFalsifiedError("extremal subspace outside every canonical orbit",
                                    dump={"field": f.p, "subspace": S.to_json()})
    if multi is not None:
        S = subspace_from_indices(multi, n, p_cols, f)
        raise TheoremFalsifiedError("extremal subspace in two canonical orbits",
                                    dump={"field": f.p, "subspace": S.to_json()})
    report.orbit_sizes = sizes
    report.orbit_hits = hits
    report.orbit_count = sum(1 for h in hits if h)
    report.signatures = [label for label, _ in reps]
    if hits != sizes:
        raise TheoremFalsifiedError("canonical orbit not fully realised among scanned subspaces",
                                    dump={"sizes": sizes, "hits": hits})


# Verifiers --------------------------------------------------------------

def verify_bound(n: int, p_cols: int, r: int, f: FieldSpec, *, jobs: int = 1,
                 budget: int = DEFAULT_CENSUS_BUDGET, extremal_histogram: bool = True) -> CensusReport:
    """Check that no subspace of codimension < binom(r+1, 2) has lower rank >= r."""
    m = n * p_cols
    ext_codim = comb(r + 1, 2)
    ext_dim = m - ext_codim
    report = CensusReport(f.p, n, p_cols, r, ext_dim)
    checks = {}
    for d in range(max(ext_dim + 1, 0), m + 1):
        total, hist, _, bad = census(n, p_cols, d, f, jobs=jobs, bad_from=r, budget=budget)
        if bad is not None:
            S = subspace_from_indices(bad, n, p_cols, f)
            raise TheoremFalsifiedError(f"codimension {m - d} subspace with lower rank >= {r}",
                                        dump={"field": f.p, "subspace": S.to_json()})
        checks[str(m - d)] = {"dim": d, "total": total, "max_lrk": max(hist), "violations": 0}
    report.checks = {"codim_below_bound": checks}
    if extremal_histogram and ext_dim >= 0:
        total, hist, _, _ = census(n, p_cols, ext_dim, f, jobs=jobs, budget=budget)
        report.total = total
        report.lrk_histogram = hist
        report.extremal_count = hist.get(r, 0)
    return report


def verify_classification(n: int, p_cols: int, r: int, f: FieldSpec, *, jobs: int = 1,
                          budget: int = DEFAULT_CENSUS_BUDGET) -> CensusReport:
    """Every extremal subspace lies in exactly one canonical orbit, and every orbit is realised."""
    m = n * p_cols
    d = m - comb(r + 1, 2)
    report = CensusReport(f.p, n, p_cols, r, d)
    total, hist, keys, _ = census(n, p_cols, d, f, jobs=jobs, key_lrk=r, budget=budget)
    report.total, report.lrk_histogram, report.extremal_count = total, hist, len(keys)
    if any(k > r for k in hist):
        raise TheoremFalsifiedError(f"subspace of codimension binom({r}+1,2) with lower rank > {r}")
    _orbit_partition(report, keys, _canonical_reps(n, p_cols, r, f), f, budget)
    return report


def verify_maximality(r: int, f: FieldSpec, *, jobs: int = 1, budget: int = DEFAULT_CENSUS_BUDGET) -> CensusReport:
    """Affine subspaces of M_r inside GL_r: none of dim binom(r,2)+1, and canonical orbits at binom(r,2)."""

    d = comb(r, 2)
    report = CensusReport(f.p, r, r, r, d)
    total, hist, keys, _ = census(r, r, d, f, jobs=jobs, key_lrk=r, budget=budget)
    report.total, report.lrk_histogram, report.extremal_count = total, hist, len(keys)
    if d + 1 <= r * r:
        total1, hist1, _, bad = census(r, r, d + 1, f, jobs=jobs, bad_from=r, budget=budget)
        if bad is not None:
            S = subspace_from_indices(bad, r, r, f)
            raise TheoremFalsifiedError("nonsingular affine subspace above the maximal dimension",
                                        dump={"field": f.p, "subspace": S.to_json()})
        report.checks = {"dim_above": {"dim": d + 1, "total": total1, "nonsingular": 0}}
    reps = [({"parts": list(spec.parts)}, construct_canonical(spec)) for spec in canonical_candidates(r, f)]
    _orbit_partition(report, keys, reps, f, budget)
    return report


def _random_gl(rng: np.random.Generator, n: int, q: int) -> np.ndarray:
    while True:
        M = rng.integers(0, q, size=(n, n))
        if batch_rank(M[None], q)[0] == n:
            return M


def verify_facts(n: int, f: FieldSpec, *, samples: int = 100, seed: int = 0) -> dict:
    """Alternate-matrix facts: even ranks, P Alt Q^-1 = (P Q^T) Alt, and Alt X = X-perp."""
    q = f.p
    alt = alternate_space(n, f)
    ranks: set[int] = set()
    for chunk in iter_point_chunks(alt):
        ranks.update(int(k) for k in np.unique(batch_rank(chunk, q)))
    ranks_sorted = sorted(ranks)
    even = all(k % 2 == 0 for k in ranks_sorted)
    rng = np.random.default_rng(seed)
    fact_i = 0
    for _ in range(samples):
        P = Matrix.from_array(f, _random_gl(rng, n, q))
        Q = Matrix.from_array(f, _random_gl(rng, n, q))
        fact_i += transform(alt, P, inverse(Q)) == left_multiply_linear(P @ Q.T, alt)
    fact_ii = 0
    vecs = list(itertools.product(range(q), repeat=n))[1:]
    for X in vecs:
        xm = Matrix(f, n, 1, tuple(X))
        image = linear_span(f, n, 1, [A @ xm for A in alt.basis])
        perp = linear_span(f, n, 1, [Matrix(f, n, 1, tuple(v)) for v in nullspace([list(X)], q, n)])
        fact_ii += image == perp
    return {
        "field": q, "n": n,
        "alternate_ranks": ranks_sorted, "even_rank": even,
        "fact_i_samples": samples, "fact_i_holds": int(fact_i),
        "fact_ii_vectors": len(vecs), "fact_ii_holds": int(fact_ii),
        "ok": even and fact_i == samples and fact_ii == len(vecs),
    }
