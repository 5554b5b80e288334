"""Koszul differentials, the linear strand a_1..a_n, and special quadrics.

Bases of ``wedge^k V (x) R_d`` are ordered by (subset in lex order, monomial in
graded lex order), subset-major.  The differential is

    delta(e_{j_1} ^ ... ^ e_{j_k}) = sum_l (-1)^(l+1) x_{j_l} e_{j_1} ^ .. ^e_{j_l}^ .. ^ e_{j_k}

with l counted from 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Mapping

import numpy as np

from .errors import ConfigError, NotInIdeal, NotSquareFree
from .field import Field, Matrix, nullspace_array, rank_array, row_space_basis
from .ideal import Form, evaluation_array, ideal_degree_part, monomial_index, monomials, n_monomials
from .projective import PointConfig


@lru_cache(maxsize=None)
def ext_basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-subsets of {0..n} in lex order."""
    return tuple(combinations(range(n + 1), k))


@lru_cache(maxsize=None)
def _delta_int(n: int, k: int, d: int) -> np.ndarray:
    src_sets, dst_sets = ext_basis(n, k), ext_basis(n, k - 1)
    src_m = monomials(n, d - k) if d >= k else ()
    dst_m = monomials(n, d - k + 1) if d >= k - 1 else ()
    dst_sidx = {J: t for t, J in enumerate(dst_sets)}
    dst_midx = monomial_index(n, d - k + 1) if dst_m else {}
    nd, ns = len(dst_m), len(src_m)
    out = np.zeros((len(dst_sets) * nd, len(src_sets) * ns), dtype=np.int64)
    for a, J in enumerate(src_sets):
        for b, m in enumerate(src_m):
            col = a * ns + b
            for l, v in enumerate(J):
                Jp = J[:l] + J[l + 1:]
                mp = list(m)
                mp[v] += 1
                row = dst_sidx[Jp] * nd + dst_midx[tuple(mp)]
                out[row, col] += 1 if l % 2 == 0 else -1
    return out


def koszul_delta(n: int, k: int, d: int, field: Field) -> Matrix:
    """Matrix of delta_k : wedge^k V (x) R_{d-k} -> wedge^{k-1} V (x) R_{d-k+1}."""
    if not 1 <= k <= n + 1:
        raise ValueError(f"k must be in 1..{n + 1}")
    return Matrix(field, _delta_array(n, k, d, field))


def _delta_array(n: int, k: int, d: int, field: Field) -> np.ndarray:
    return field.array(_delta_int(n, k, d).tolist()) if field.is_rational else \
        _delta_int(n, k, d) % field.p


@dataclass(frozen=True)
class LinearStrand:
    a: tuple[int, ...]

    def __getitem__(self, i: int) -> int:
        """1-based access: strand[i] = a_i."""
        return self.a[i - 1]

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def a_top(self) -> int:
        """a_{n-1}."""
        return self.a[self.n - 2]


def strand_betti(cfg: PointConfig) -> LinearStrand:
    """a_i = dim H of wedge^{i+1}V (x) A_0 -> wedge^i V (x) A_1 -> wedge^{i-1} V (x) A_2.

    A_2 = R_2/I_2 is realised through the evaluation map R_2 -> k^s, whose
    kernel is exactly I_2; A_1 = R_1 because X spans P^n.
    """
    f, n = cfg.field, cfg.n
    E2 = evaluation_array(cfg, 2)
    N2 = n_monomials(n, 2)
    out = []
    for i in range(1, n + 1):
        D = _delta_array(n, i, i + 1, f)
        blocks = [f.matmul(E2, D[t * N2:(t + 1) * N2]) for t in range(comb(n + 1, i - 1))]
        outmap = np.vstack(blocks)
        ker = D.shape[1] - rank_array(f, outmap)
        inmap = _delta_array(n, i + 1, i + 1, f) if i + 1 <= n + 1 else f.zeros((D.shape[1], 0))
        out.append(ker - rank_array(f, inmap))
    return LinearStrand(tuple(out))


@dataclass(frozen=True)
class KoszulElement:
    """alpha = sum_j eps_j (x) F_{C_j}, keyed by the (n-2)-subset j."""

    n: int
    field: Field
    components: Mapping[tuple[int, ...], Form] = dc_field(hash=False)

    def F(self, *abc: int) -> Form:
        """The special quadric F_{abc} for three distinct indices (any order)."""
        C = tuple(sorted(abc))
        j = tuple(v for v in range(self.n + 1) if v not in C)
        return self.components[j]

    def coeffs(self, a: int, b: int, c: int) -> tuple:
        """(lambda, mu, nu) of F_{abc} = lambda x_a x_b + mu x_a x_c + nu x_b x_c, a<b<c."""
        q = self.F(a, b, c)
        return q.coeff(a, b), q.coeff(a, c), q.coeff(b, c)

    def is_zero(self) -> bool:
        return all(q.is_zero() for q in self.components.values())

    def replace(self, j: tuple[int, ...], q: Form) -> KoszulElement:
        comps = dict(self.components)
        comps[j] = q
        return KoszulElement(self.n, self.field, comps)

    def to_json(self) -> dict:
        return {"components": {str(list(j)): q.to_json() for j, q in self.components.items()}}

    @classmethod
    def from_json(cls, n: int, field: Field, data: dict) -> KoszulElement:
        comps = {}
        for key, coeffs in data["components"].items():
            j = tuple(int(v) for v in key.strip("[] ").split(",") if v.strip())
            comps[j] = Form.from_json(field, n, 2, coeffs)
        return cls(n, field, comps)


def _intersection_vectors(cfg: PointConfig) -> np.ndarray:
    """Canonical basis (RREF rows) of (wedge^{n-2}V (x) I_2) cap K_{n-2}."""
    f, n = cfg.field, cfg.n
    k = n - 2
    I2 = ideal_degree_part(cfg, 2)
    N2 = n_monomials(n, 2)
    nsets = comb(n + 1, k)
    if I2.dim == 0:
        return f.zeros((0, nsets * N2))
    B = I2.coeff_array().T  # N2 x q
    q = B.shape[1]
    if k == 0:
        coeffs = f.identity(q)
    else:
        D = _delta_array(n, k, n, f)
        M = np.hstack([f.matmul(D[:, t * N2:(t + 1) * N2], B) for t in range(nsets)])
        coeffs = nullspace_array(f, M)
    if coeffs.shape[0] == 0:
        return f.zeros((0, nsets * N2))
    alphas = np.hstack([f.matmul(coeffs[:, t * q:(t + 1) * q], B.T) for t in range(nsets)])
    return row_space_basis(f, list(alphas))


def a_top_via_intersection(cfg: PointConfig, extract: bool = True) -> tuple[int, list]:
    """a_{n-1} as dim[(wedge^{n-2}V (x) I_2) cap K_{n-2}], with a canonical basis.

    With ``extract`` the basis vectors are returned as :class:`KoszulElement`;
    otherwise as raw coefficient rows (the only option when the coordinate
    points are not on X).
    """
    vecs = _intersection_vectors(cfg)
    if not extract:
        return len(vecs), [list(v) for v in vecs]
    return len(vecs), [extract_special_quadrics(cfg, v) for v in vecs]


def has_coordinate_points(cfg: PointConfig) -> bool:
    f, n = cfg.field, cfg.n
    pts = {P.coords for P in cfg.points}
    return all(tuple(f.one if k == l else f.zero for k in range(n + 1)) in pts for l in range(n + 1))


def extract_special_quadrics(cfg: PointConfig, alpha) -> KoszulElement:
    """Group a raw intersection vector by eps_j and validate each F_{C_j}.

    The square-free shape of the components only holds in coordinates where
    e_0..e_n are points of X, so that is a precondition.
    """
    f, n = cfg.field, cfg.n
    if not has_coordinate_points(cfg):
        raise ConfigError("special quadrics need e_0..e_n among the points; apply frame_transform first")
    N2 = n_monomials(n, 2)
    comps = {}
    for t, j in enumerate(ext_basis(n, n - 2)):
        q = Form(f, n, 2, tuple(f(c) for c in alpha[t * N2:(t + 1) * N2]))
        C = [v for v in range(n + 1) if v not in j]
        for e, c in zip(monomials(n, 2), q.coeffs):
            if c == 0:
                continue
            vs = [v for v, x in enumerate(e) if x]
            if max(e) > 1 or any(v not in C for v in vs):
                raise NotSquareFree(f"F_{tuple(C)} = {q} is not square-free in x_{C}")
        if not q.is_zero():
            if not all(q(P) == 0 for P in cfg.points):
                raise NotInIdeal(f"F_{tuple(C)} does not vanish on X")
        comps[j] = q
    return KoszulElement(n, f, comps)


def syzygy_cubic(ke: KoszulElement, a: int, b: int, c: int, d: int) -> Form:
    """(-1)^a x_a F_bcd + (-1)^(b-1) x_b F_acd + (-1)^(c-2) x_c F_abd + (-1)^(d-3) x_d F_abc."""
    f, n = ke.field, ke.n
    total = Form.zero(f, n, 3)
    for sign_exp, v, rest in ((a, a, (b, c, d)), (b - 1, b, (a, c, d)),
                              (c - 2, c, (a, b, d)), (d - 3, d, (a, b, c))):
        term = Form.var(f, n, v) * ke.F(*rest)
        total = total + (term if sign_exp % 2 == 0 else -term)
    return total


def check_syzygy_relation(ke: KoszulElement) -> bool:
    """The alternating cubic relation among special quadrics holds for every 4-subset."""
    return all(syzygy_cubic(ke, *abcd).is_zero() for abcd in combinations(range(ke.n + 1), 4))


def _sgn(e: int) -> int:
    return 1 if e % 2 == 0 else -1


def coefficient_identities(ke: KoszulElement) -> bool:
    """The four signed coefficient identities on lambda, mu, nu for each d<e<f<g."""
    fld = ke.field
    for d, e, f, g in combinations(range(ke.n + 1), 4):
        lam, mu, nu = {}, {}, {}
        for T in ((e, f, g), (d, f, g), (d, e, g), (d, e, f)):
            lam[T], mu[T], nu[T] = ke.coeffs(*T)
        eqs = [
            [(_sgn(d), lam[e, f, g]), (_sgn(e - 1), lam[d, f, g]), (_sgn(f - 2), lam[d, e, g])],
            [(_sgn(d), mu[e, f, g]), (_sgn(e - 1), mu[d, f, g]), (_sgn(g - 3), lam[d, e, f])],
            [(_sgn(d), nu[e, f, g]), (_sgn(f - 2), mu[d, e, g]), (_sgn(g - 3), mu[d, e, f])],
            [(_sgn(e - 1), nu[d, f, g]), (_sgn(f - 2), nu[d, e, g]), (_sgn(g - 3), nu[d, e, f])],
        ]
        for eq in eqs:
            total = fld.zero
            for s, v in eq:
                total = fld.add(total, v if s > 0 else fld.neg(v))
            if total != 0:
                return False
    return True
