import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linstrand.errors import FieldMismatch
from linstrand.field import (Field, Matrix, inverse, nullspace, rank, rank_array, rref, row_space_basis,
                             solve)
from linstrand.harness import fraction_free_rank

FP = Field.fp()
QQ = Field.rational()
small = st.integers(-20, 20)


def test_field_construction():
    assert Field.fp().p == 32003
    assert Field.rational().is_rational
    with pytest.raises(ValueError):
        Field.fp(32004)
    assert Field.from_flag("fp:13") == Field.fp(13)
    assert Field.from_flag("rational") == QQ
    with pytest.raises(ValueError):
        Field.from_flag("reals")


@pytest.mark.parametrize("field", [FP, QQ])
def test_scalar_json_roundtrip(field):
    for x in (0, 1, -1, Fraction(3, 7), Fraction(-22, 5)):
        v = field(x)
        assert field.parse(field.fmt(v)) == v
    assert Field.from_json(field.to_json()) == field


def test_fp_fraction_parse():
    assert FP.parse("1/2") == FP.inv(2)
    assert FP.mul(FP.parse("3/4"), 4) == 3


@given(st.integers(1, 32002))
def test_fp_inverse(x):
    assert FP.mul(x, FP.inv(x)) == 1


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        FP.inv(0)


def test_sqrt_against_exhaustive_search():
    f = Field.fp(13)
    squares = {x * x % 13: x for x in range(13)}
    for a in range(13):
        r = f.sqrt(a)
        if a in squares:
            assert r is not None and r * r % 13 == a
        else:
            assert r is None


def test_sqrt_rational():
    assert QQ.sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert QQ.sqrt(2) is None
    assert QQ.sqrt(-1) is None


def test_solve_identity():
    assert solve(Matrix.identity(FP, 3), [4, 5, 6]) == [4, 5, 6]


def test_solve_inconsistent():
    m = Matrix(QQ, [[1, 1], [1, 1]])
    assert solve(m, [1, 2]) is None


def test_solve_random_invertible_fp():
    rng = random.Random(5)
    for _ in range(20):
        rows = [[rng.randrange(FP.p) for _ in range(4)] for _ in range(4)]
        m = Matrix(FP, rows)
        if rank(m) < 4:
            continue
        b = [rng.randrange(FP.p) for _ in range(4)]
        x = solve(m, b)
        assert (m @ x) == [FP(v) for v in b]


def test_inverse_and_singular():
    m = Matrix(QQ, [[2, 1], [1, 1]])
    assert m @ inverse(m) == Matrix.identity(QQ, 2)
    with pytest.raises(ValueError):
        inverse(Matrix(QQ, [[1, 2], [2, 4]]))


def test_rref_shape():
    r, piv = rref(Matrix(QQ, [[0, 2, 4], [1, 1, 1]]))
    assert piv == [0, 1]
    assert r.tolist() == [[1, 0, -1], [0, 1, 2]]


def test_field_mismatch():
    with pytest.raises(FieldMismatch):
        Matrix(QQ, [[1]]) @ Matrix(FP, [[1]])


def test_matmul_matches_python_ints():
    rng = np.random.default_rng(0)
    a = rng.integers(0, FP.p, size=(6, 40))
    b = rng.integers(0, FP.p, size=(40, 5))
    want = [[sum(int(a[i, k]) * int(b[k, j]) for k in range(40)) % FP.p for j in range(5)] for i in range(6)]
    assert FP.matmul(a, b).tolist() == want


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=5),
       st.sampled_from([FP, QQ]))
def test_rank_agrees_with_fraction_free(rows, field):
    assert rank_array(field, field.array(rows)) == fraction_free_rank(field, rows)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(small, min_size=5, max_size=5), min_size=1, max_size=4),
       st.sampled_from([FP, QQ]))
def test_nullspace_is_kernel(rows, field):
    m = Matrix(field, rows)
    ker = nullspace(m)
    assert len(ker) == m.cols - rank(m)
    for v in ker:
        assert all(x == 0 for x in m @ v)


def test_row_space_basis_is_canonical():
    a = row_space_basis(QQ, [[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    b = row_space_basis(QQ, [[0, 2, 2], [1, 3, 4]])
    assert a.tolist() == b.tolist()
