import random
from itertools import combinations
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from linstrand.errors import ConfigError
from linstrand.field import Field
from linstrand.harness import GenSpec, generate, strand_oracle
from linstrand.ideal import Form, ideal_degree_part, monomials
from linstrand.koszul import (KoszulElement, a_top_via_intersection, check_syzygy_relation,
                              coefficient_identities, ext_basis, extract_special_quadrics,
                              has_coordinate_points, koszul_delta, strand_betti, syzygy_cubic)
from linstrand.projective import PointConfig, frame_transform
from linstrand.selftest import normalized

from conftest import coordinate_rows, twisted_cubic_points

FP = Field.fp()
QQ = Field.rational()


def test_ext_basis_order():
    assert ext_basis(3, 2)[:3] == ((0, 1), (0, 2), (0, 3))
    assert len(ext_basis(5, 3)) == 20


def test_delta_k1_is_multiplication():
    D = koszul_delta(2, 1, 2, QQ)  # e_i (x) R_1 -> R_2
    assert D.shape == (6, 9)
    mons = monomials(2, 2)
    for i in range(3):
        for v in range(3):
            col = [D[r, 3 * i + v] for r in range(6)]
            e = [0, 0, 0]
            e[i] += 1
            e[v] += 1
            assert col == [1 if m == tuple(e) else 0 for m in mons]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_delta_squares_to_zero(n):
    for k in range(2, n + 2):
        for d in range(k, k + 2):
            prod = koszul_delta(n, k - 1, d, FP) @ koszul_delta(n, k, d, FP)
            assert prod.is_zero()


@pytest.mark.parametrize("n,k,d", [(3, 2, 3), (4, 3, 4), (5, 3, 5), (2, 1, 3)])
def test_delta_dimensions(n, k, d):
    D = koszul_delta(n, k, d, FP)
    assert D.shape == (comb(n + 1, k - 1) * comb(n + d - k + 1, n), comb(n + 1, k) * comb(n + d - k, n))


def test_delta_rejects_bad_k():
    with pytest.raises(ValueError):
        koszul_delta(2, 4, 4, FP)


def test_twisted_cubic_strand(twisted_cubic):
    assert strand_betti(twisted_cubic).a == (3, 2, 0)
    assert strand_oracle(twisted_cubic) == (3, 2, 0)
    count, kes = a_top_via_intersection(twisted_cubic, extract=False)
    assert count == 2


def test_strand_examples():
    seven = generate(GenSpec("general", 3, 7, FP, seed=11))[0]
    assert strand_betti(seven).a_top == 0
    assert strand_oracle(seven)[1] == 0
    # 10 general points impose independent conditions on the 10 quadrics of P^3
    ten = generate(GenSpec("general", 3, 10, FP, seed=2))[0]
    assert ideal_degree_part(ten, 2).dim == 0
    assert strand_betti(ten).a[0] == 0
    assert a_top_via_intersection(ten)[0] == 0


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(0, 3), st.integers(0, 10_000))
def test_strand_matches_oracle(n, extra, seed):
    cfg = generate(GenSpec("general", n, n + 1 + extra, FP, seed=seed))[0]
    a = strand_betti(cfg).a
    assert a == strand_oracle(cfg)
    assert a[0] == ideal_degree_part(cfg, 2).dim


@pytest.mark.parametrize("family,n,s,extra", [("rnc", 3, 7, {}), ("rnc", 4, 8, {}),
                                               ("union", 4, 8, dict(k=1, r=3, s_a=3, s_b=5)),
                                               ("special", 4, 7, dict(i=1))])
def test_strand_matches_oracle_on_families(family, n, s, extra):
    cfg = generate(GenSpec(family, n, s, FP, seed=1, **extra))[0]
    a = strand_betti(cfg).a
    assert a == strand_oracle(cfg)
    assert a[n - 2] == a_top_via_intersection(cfg, extract=False)[0]


def test_extract_requires_coordinate_points(twisted_cubic):
    assert not has_coordinate_points(twisted_cubic)
    raw = a_top_via_intersection(twisted_cubic, extract=False)[1]
    with pytest.raises(ConfigError):
        extract_special_quadrics(twisted_cubic, raw[0])


def test_twisted_cubic_special_quadrics(twisted_cubic):
    c2 = frame_transform(twisted_cubic, [0, 1, 2, 3])[1]
    count, kes = a_top_via_intersection(c2)
    assert count == 2
    for ke in kes:
        assert not ke.is_zero()
        assert check_syzygy_relation(ke) and coefficient_identities(ke)
        for j, q in ke.components.items():
            C = [v for v in range(4) if v not in j]
            assert set(q.support()) <= set(C)
            assert all(q(P) == 0 for P in c2.points)


def _zero_element(n, field):
    return KoszulElement(n, field, {j: Form.zero(field, n, 2) for j in ext_basis(n, n - 2)})


def test_zero_element_passes():
    z = _zero_element(4, QQ)
    assert check_syzygy_relation(z) and coefficient_identities(z)


def test_single_coefficient_perturbation_fails():
    rng = random.Random(1)
    cfg = normalized(generate(GenSpec("union", 4, 8, FP, seed=3, k=2, r=2, s_a=4, s_b=4))[0])
    for ke in a_top_via_intersection(cfg)[1]:
        for j in ke.components:
            C = [v for v in range(5) if v not in j]
            a, b = rng.sample(C, 2)
            bad = ke.replace(j, ke.components[j] + Form.from_terms(FP, 4, 2, {(a, b): 1}))
            assert not check_syzygy_relation(bad)
            assert not coefficient_identities(bad)


def test_syzygy_cubic_sign_pattern():
    # the relation is antisymmetric bookkeeping: a nonzero F_{123} alone breaks 0123
    n = 3
    z = _zero_element(n, QQ)
    bad = z.replace((0,), Form.from_terms(QQ, n, 2, {(1, 2): 1}))
    assert bad.F(1, 2, 3) == Form.from_terms(QQ, n, 2, {(1, 2): 1})
    assert not syzygy_cubic(bad, 0, 1, 2, 3).is_zero()


def test_koszul_element_json_roundtrip():
    cfg = normalized(generate(GenSpec("rnc", 4, 8, FP, seed=2))[0])
    for ke in a_top_via_intersection(cfg)[1]:
        assert KoszulElement.from_json(4, FP, ke.to_json()) == ke


def test_coefficient_access():
    n = 3
    q = Form.from_terms(QQ, n, 2, {(0, 1): 2, (0, 2): 3, (1, 2): 5})
    ke = _zero_element(n, QQ).replace((3,), q)
    assert ke.coeffs(0, 1, 2) == (2, 3, 5)
    assert ke.F(2, 0, 1) == q


def test_intersection_basis_is_coordinate_free():
    # the count does not depend on the coordinates
    cfg = generate(GenSpec("special", 4, 7, FP, seed=5, i=1))[0]
    c2 = normalized(cfg)
    assert a_top_via_intersection(cfg, extract=False)[0] == a_top_via_intersection(c2)[0]


def test_a1_is_dim_I2_for_coordinate_plus_points():
    cfg = PointConfig.from_coords(QQ, coordinate_rows(3) + [[1, 1, 1, 1], [1, 2, 3, 4]])
    assert strand_betti(cfg).a[0] == ideal_degree_part(cfg, 2).dim == 4


def test_all_subsets_relation_count():
    cfg = normalized(twisted_cubic_points(range(8)))
    ke = a_top_via_intersection(cfg)[1][0]
    assert all(syzygy_cubic(ke, *abcd).is_zero() for abcd in combinations(range(4), 4))
