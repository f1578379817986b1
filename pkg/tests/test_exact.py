from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_rank
from tnslab.exact import DEFAULT_PRIME, SparseMatrix, rank, scalar, to_field

small_ints = st.integers(min_value=-5, max_value=5)


def matrices(max_side=6, elements=small_ints):
    return st.integers(1, max_side).flatmap(
        lambda m: st.integers(1, max_side).flatmap(
            lambda n: st.lists(st.lists(elements, min_size=n, max_size=n), min_size=m, max_size=m)
        )
    )


def test_scalar_normalizes_and_rejects_floats():
    assert scalar(Fraction(6, 3)) == 2 and isinstance(scalar(Fraction(6, 3)), int)
    assert scalar(True) == 1
    with pytest.raises(TypeError):
        scalar(0.5)


def test_to_field_handles_fractions():
    x = to_field(Fraction(1, 2), 7)
    assert x * 2 % 7 == 1
    with pytest.raises(ZeroDivisionError):
        to_field(Fraction(1, 7), 7)


def test_sparse_matrix_round_trip():
    rows = [[0, 1, 0], [2, 0, 3]]
    M = SparseMatrix.from_dense(rows)
    assert M.to_dense() == rows
    assert M.nnz == 3
    assert M.transpose().to_dense() == [[0, 2], [1, 0], [0, 3]]
    assert M[1, 2] == 3


def test_zero_and_empty_rank():
    assert rank(SparseMatrix(3, 4)) == 0
    assert rank(SparseMatrix(3, 4), 101) == 0


def test_identity_rank():
    n = 9
    M = SparseMatrix(n, n, {i: {i: 1} for i in range(n)})
    assert rank(M) == n
    assert rank(M, DEFAULT_PRIME) == n


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_rational_rank_matches_dense_oracle(rows):
    assert rank(SparseMatrix.from_dense(rows)) == dense_rank(rows)


@settings(max_examples=100, deadline=None)
@given(matrices(elements=st.fractions(min_value=-3, max_value=3, max_denominator=5)))
def test_rational_rank_with_fractions(rows):
    assert rank(SparseMatrix.from_dense(rows)) == dense_rank(rows)


@settings(max_examples=150, deadline=None)
@given(matrices(), st.sampled_from([2, 3, 7, 101, DEFAULT_PRIME]))
def test_prime_rank_never_exceeds_rational(rows, p):
    M = SparseMatrix.from_dense(rows)
    assert rank(M, p) <= rank(M)


@settings(max_examples=100, deadline=None)
@given(matrices())
def test_large_prime_agrees_on_small_entries(rows):
    M = SparseMatrix.from_dense(rows)
    assert rank(M, DEFAULT_PRIME) == rank(M)


def test_prime_rank_can_drop():
    M = SparseMatrix.from_dense([[1, 1], [1, 3]])
    assert rank(M) == 2
    assert rank(M, 2) == 1


def test_sparse_prime_path_matches_dense(monkeypatch):
    import tnslab.exact as ex

    rows = [[(i * 7 + j * 3) % 5 - 2 for j in range(12)] for i in range(10)]
    M = SparseMatrix.from_dense(rows)
    want = rank(M, 101)
    monkeypatch.setattr(ex, "_DENSE_CELLS", 0)
    assert rank(M, 101) == want


def test_rank_is_transpose_invariant(rng):
    for _ in range(30):
        rows = [[rng.randint(-3, 3) for _ in range(5)] for _ in range(7)]
        M = SparseMatrix.from_dense(rows)
        assert rank(M) == rank(M.transpose())


def test_sparse_rational_path_matches_dense(monkeypatch):
    import tnslab.exact as ex

    rows = [[(i * i + 3 * j) % 7 - 3 for j in range(9)] for i in range(11)]
    rows[4] = [a + b for a, b in zip(rows[1], rows[2])]
    M = SparseMatrix.from_dense(rows)
    want = dense_rank(rows)
    assert rank(M) == want
    monkeypatch.setattr(ex, "_DENSE_CELLS_Q", 0)
    assert rank(M) == want
