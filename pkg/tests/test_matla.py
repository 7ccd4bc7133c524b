from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affrank.errors import BudgetExceededError, FieldMismatchError, ShapeMismatchError, SingularMatrixError
from affrank.field import GF
from affrank.matla import (Matrix, batch_rank, det, enumerate_gl, enumerate_matrices, gl_array, gl_order, inverse, is_invertible,
                           kernel, nullspace, rank, rref, solve)

from oracles import brute_gl, brute_rank, leibniz_det


def mats(p, max_dim=3):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_dim))
        m = draw(st.integers(1, max_dim))
        e = draw(st.lists(st.integers(0, p - 1), min_size=n * m, max_size=n * m))
        return Matrix(GF(p), n, m, tuple(e))
    return build()


def test_rank_examples(f3):
    assert rank(Matrix.identity(f3, 3)) == 3
    assert rank(Matrix.zeros(f3, 2)) == 0
    assert rank(Matrix.from_rows(f3, [[1, 2], [2, 1]])) == 1


def test_rref_examples(f3):
    R, piv, _ = rref(Matrix.identity(f3, 2))
    assert R == Matrix.identity(f3, 2) and piv == (0, 1)
    R, piv, _ = rref(Matrix.from_rows(f3, [[0, 1], [0, 2]]))
    assert R.row_list() == [[0, 1], [0, 0]] and piv == (1,)


def test_inverse_examples(f3):
    assert inverse(Matrix.identity(f3, 3)) == Matrix.identity(f3, 3)
    A = Matrix.from_rows(f3, [[0, 1], [2, 0]])
    Ai = inverse(A)
    assert Ai.row_list() == [[0, 2], [1, 0]]
    assert A @ Ai == Matrix.identity(f3, 2)
    with pytest.raises(SingularMatrixError):
        inverse(Matrix.from_rows(f3, [[1, 1], [1, 1]]))


@pytest.mark.parametrize("n,q,count", [(1, 3, 2), (2, 3, 48), (3, 3, 11232), (1, 5, 4), (2, 5, 480)])
def test_gl_counts(n, q, count):
    assert gl_order(n, q) == count
    assert sum(1 for _ in enumerate_gl(n, GF(q))) == count


@pytest.mark.parametrize("n,q", [(1, 3), (2, 3), (1, 5)])
def test_gl_matches_brute_force(n, q):
    ours = [M.row_list() for M in enumerate_gl(n, GF(q))]
    assert ours == brute_gl(n, q)


def test_gl_count_three_by_three_exhaustive():
    # independent count via a product over all 3^9 matrices
    count = sum(1 for e in itertools.product(range(3), repeat=9)
                if leibniz_det([e[0:3], e[3:6], e[6:9]], 3))
    assert count == 11232


def test_gl_order_five_three_by_three():
    assert gl_order(3, 5) == (125 - 1) * (125 - 5) * (125 - 25)


def test_gl_budget():
    with pytest.raises(BudgetExceededError):
        list(enumerate_gl(3, GF(5), budget=1000))
    with pytest.raises(BudgetExceededError):
        list(enumerate_matrices(3, 3, GF(3), budget=100))


def test_field_and_shape_checks(f3, f5):
    with pytest.raises(FieldMismatchError):
        Matrix.identity(f3, 2) + Matrix.identity(f5, 2)
    with pytest.raises(ShapeMismatchError):
        Matrix.identity(f3, 2) @ Matrix.identity(f3, 3)
    with pytest.raises(ShapeMismatchError):
        Matrix.from_rows(f3, [[1, 2], [1]])


def test_json_round_trip(f5):
    M = Matrix.from_rows(f5, [[1, 2, 3], [4, 0, 1]])
    assert Matrix.from_json(M.to_json()) == M


def test_batch_rank_agrees_with_brute_force():
    q = 3
    allm = list(itertools.product(range(q), repeat=4))
    arr = np.array(allm).reshape(-1, 2, 2)
    got = batch_rank(arr, q)
    want = [brute_rank([list(e[:2]), list(e[2:])], q) for e in allm]
    assert got.tolist() == want


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([3, 5, 7]).flatmap(mats))
def test_rank_properties(M):
    q = M.p
    r = rank(M)
    assert r == rank(M.T)
    assert r == brute_rank(M.row_list(), q)
    assert int(batch_rank(M.to_array()[None], q)[0]) == r
    R, piv, E = rref(M)
    assert E @ M == R and len(piv) == r and is_invertible(E)
    for v in kernel(M):
        assert (M @ v).is_zero()
    assert len(kernel(M)) == M.cols - r


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([3, 5]).flatmap(lambda p: mats(p, 3)), st.data())
def test_rank_invariant_under_equivalence(M, data):
    f, q = M.field, M.p
    gl_l, gl_r = gl_array(M.rows, q), gl_array(M.cols, q)
    P = Matrix.from_array(f, gl_l[data.draw(st.integers(0, len(gl_l) - 1))])
    Q = Matrix.from_array(f, gl_r[data.draw(st.integers(0, len(gl_r) - 1))])
    assert rank(P @ M @ Q) == rank(M)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(1, 3), st.data())
def test_det_and_inverse(q, n, data):
    e = data.draw(st.lists(st.integers(0, q - 1), min_size=n * n, max_size=n * n))
    M = Matrix(GF(q), n, n, tuple(e))
    assert det(M) == leibniz_det(M.row_list(), q)
    if det(M):
        assert M @ inverse(M) == Matrix.identity(M.field, n)
    else:
        with pytest.raises(SingularMatrixError):
            inverse(M)


def test_solve_and_nullspace():
    q = 5
    A = [[1, 2, 0], [0, 1, 4]]
    x = solve(A, [3, 1], q, 3)
    assert [sum(a * b for a, b in zip(row, x)) % q for row in A] == [3, 1]
    assert solve([[1, 1], [2, 2]], [1, 0], q, 2) is None
    ns = nullspace(A, q, 3)
    assert len(ns) == 1
    assert all(sum(a * b for a, b in zip(row, ns[0])) % q == 0 for row in A)
