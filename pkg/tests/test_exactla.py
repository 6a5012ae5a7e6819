import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracle import rank_mod
from hochblocks.exactla import (FieldMismatch, Mat, ShapeMismatch, block_diag, inverse, kernel_basis, kron, rank,
                                rref, solve, transpose)
from hochblocks.field import FieldError, FieldSpec, gf

PRIMES = [2, 3, 5, 7]


def matrices(max_side=7):
    return st.tuples(st.sampled_from(PRIMES), st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda t: st.tuples(st.just(t[0]), st.lists(st.integers(0, t[0] - 1), min_size=t[1] * t[2],
                                                    max_size=t[1] * t[2]).map(
            lambda xs, r=t[1], c=t[2]: np.array(xs, dtype=np.int64).reshape(r, c))))


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_rank_matches_oracle(pm):
    p, a = pm
    f = gf(p)
    assert rank(Mat(f, a)) == rank_mod(a, p)
    assert rank(Mat(f, a).to_sparse()) == rank_mod(a, p)


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_kernel_is_kernel_and_complete(pm):
    p, a = pm
    m = Mat(gf(p), a)
    ker = kernel_basis(m)
    assert len(ker) == a.shape[1] - rank_mod(a, p)
    for v in ker:
        assert not np.any(a @ v % p)
    if ker:
        assert rank_mod(np.stack(ker), p) == len(ker)


@given(matrices(5))
@settings(max_examples=40, deadline=None)
def test_rref_rows_span_row_space(pm):
    p, a = pm
    r, rk, piv = rref(Mat(gf(p), a))
    assert rk == rank_mod(a, p) == len(piv)
    d = r.dense()[:rk]
    assert rank_mod(np.vstack([a, d]), p) == rk
    for i, c in enumerate(piv):
        assert d[i, c] == 1 and np.count_nonzero(d[:, c]) == 1


def test_inverse_and_solve():
    f = gf(5)
    a = Mat(f, [[1, 2], [3, 4]])
    ai = inverse(a)
    assert ai @ a == Mat.identity(f, 2)
    b = Mat(f, [[1], [0]])
    assert a @ solve(a, b) == b


def test_kron_and_block_diag_shapes():
    f = gf(3)
    a = Mat(f, [[1, 2], [0, 1]])
    b = Mat(f, [[2]])
    assert kron(a, b) == a.scale(2)
    assert block_diag([a, b]).shape == (3, 3)
    assert transpose(a).dense()[1, 0] == 2


def test_mismatches_raise():
    with pytest.raises(FieldMismatch):
        Mat(gf(2), [[1]]) @ Mat(gf(3), [[1]])
    with pytest.raises(ShapeMismatch):
        Mat(gf(2), [[1, 0]]) + Mat(gf(2), [[1]])


def test_extension_field_arithmetic():
    f = gf(2, 2)
    assert f.q == 4
    units = [x for x in f.elements() if x]
    for x in units:
        assert f.mul(x, f.inv(x)) == 1
    # F4^* is cyclic of order 3
    assert sorted(f.order(x) for x in units) == [1, 3, 3]
    # rows (1, x) and (x, x^2) are proportional
    w = 2  # the generator x
    singular = Mat(f, [[1, w], [w, f.mul(w, w)]])
    assert rank(singular) == 1
    m = Mat(f, [[1, w], [0, 1]])
    assert inverse(m) @ m == Mat.identity(f, 2)


def test_field_rejects_composite():
    with pytest.raises(FieldError):
        FieldSpec(4)


def test_json_roundtrip():
    m = Mat(gf(7), [[1, 6], [0, 3]])
    assert Mat.from_json(m.to_json()) == m
