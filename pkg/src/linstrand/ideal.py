"""Forms on P^n, evaluation matrices, graded pieces of I(X) and quadric splitting."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotSplit, NotSplitOverField, ZeroQuadric
from .field import Field, Matrix, nullspace_array, rank_array, row_space_basis, solve
from .projective import PointConfig, ProjPoint

MAX_DEGREE = 4


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors of degree d in x_0..x_n, graded lex with x_0 > ... > x_n."""
    if d == 0:
        return ((0,) * (n + 1),)
    out = []

    def rec(prefix, var, left):
        if var == n:
            out.append(tuple(prefix) + (left,))
            return
        for e in range(left, -1, -1):
            rec(prefix + [e], var + 1, left - e)

    rec([], 0, d)
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(n: int, d: int) -> dict[tuple[int, ...], int]:
    return {m: k for k, m in enumerate(monomials(n, d))}


def n_monomials(n: int, d: int) -> int:
    return comb(n + d, d)


def var_exp(n: int, *vs: int) -> tuple[int, ...]:
    e = [0] * (n + 1)
    for v in vs:
        e[v] += 1
    return tuple(e)


@dataclass(frozen=True)
class Form:
    """Homogeneous polynomial of a fixed degree, coefficients in monomial order."""

    field: Field
    n: int
    degree: int
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != n_monomials(self.n, self.degree):
            raise DimensionMismatch("coefficient vector has wrong length")

    @classmethod
    def zero(cls, field: Field, n: int, degree: int) -> Form:
        return cls(field, n, degree, (field.zero,) * n_monomials(n, degree))

    @classmethod
    def from_terms(cls, field: Field, n: int, degree: int, terms: dict) -> Form:
        """Build from ``{(variable indices): coefficient}``, e.g. ``{(0, 1): 3}``."""
        idx = monomial_index(n, degree)
        c = [field.zero] * len(idx)
        for key, v in terms.items():
            e = var_exp(n, *key)
            c[idx[e]] = field.add(c[idx[e]], field(v))
        return cls(field, n, degree, tuple(c))

    @classmethod
    def linear(cls, field: Field, coeffs: Sequence) -> Form:
        return cls(field, len(coeffs) - 1, 1, tuple(field(c) for c in coeffs))

    @classmethod
    def var(cls, field: Field, n: int, v: int) -> Form:
        return cls.linear(field, [1 if k == v else 0 for k in range(n + 1)])

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def coeff(self, *vs: int):
        """Coefficient of the monomial x_{vs[0]} x_{vs[1]} ..."""
        return self.coeffs[monomial_index(self.n, self.degree)[var_exp(self.n, *vs)]]

    def support(self) -> list[int]:
        """Variables occurring with nonzero coefficient."""
        out = set()
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            if c != 0:
                out.update(k for k, x in enumerate(e) if x)
        return sorted(out)

    def __call__(self, point) -> object:
        pt = point.coords if isinstance(point, ProjPoint) else point
        f = self.field
        total = f.zero
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            if c == 0:
                continue
            term = c
            for k, x in enumerate(e):
                for _ in range(x):
                    term = f.mul(term, pt[k])
            total = f.add(total, term)
        return total

    def _same(self, other: Form):
        if other.field != self.field or other.n != self.n:
            raise DimensionMismatch("forms live in different rings")

    def __add__(self, other: Form) -> Form:
        self._same(other)
        if other.degree != self.degree:
            raise DimensionMismatch("adding forms of different degree")
        f = self.field
        return Form(f, self.n, self.degree, tuple(f.add(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> Form:
        f = self.field
        return Form(f, self.n, self.degree, tuple(f.neg(a) for a in self.coeffs))

    def __sub__(self, other: Form) -> Form:
        return self + (-other)

    def scale(self, c) -> Form:
        f = self.field
        c = f(c)
        return Form(f, self.n, self.degree, tuple(f.mul(a, c) for a in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, Form):
            return self.scale(other)
        self._same(other)
        f = self.field
        deg = self.degree + other.degree
        idx = monomial_index(self.n, deg)
        out = [f.zero] * len(idx)
        for e1, c1 in zip(monomials(self.n, self.degree), self.coeffs):
            if c1 == 0:
                continue
            for e2, c2 in zip(monomials(self.n, other.degree), other.coeffs):
                if c2 == 0:
                    continue
                k = idx[tuple(a + b for a, b in zip(e1, e2))]
                out[k] = f.add(out[k], f.mul(c1, c2))
        return Form(f, self.n, deg, tuple(out))

    __rmul__ = scale

    def divide_by_var(self, v: int) -> Form | None:
        """``self / x_v`` if x_v divides self, else None."""
        f = self.field
        out = {}
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            if c == 0:
                continue
            if e[v] == 0:
                return None
            q = list(e)
            q[v] -= 1
            out[tuple(q)] = c
        res = Form.zero(f, self.n, self.degree - 1)
        idx = monomial_index(self.n, self.degree - 1)
        c = list(res.coeffs)
        for e, v2 in out.items():
            c[idx[e]] = v2
        return Form(f, self.n, self.degree - 1, tuple(c))

    def to_json(self) -> list[str]:
        return [self.field.fmt(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, field: Field, n: int, degree: int, data: Sequence[str]) -> Form:
        return cls(field, n, degree, tuple(field.parse(str(c)) for c in data))

    def __str__(self) -> str:
        terms = []
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            if c == 0:
                continue
            mono = "*".join(f"x{k}" + (f"^{x}" if x > 1 else "") for k, x in enumerate(e) if x)
            terms.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(terms) or "0"


LinearForm = Form
Quadric = Form


@dataclass(frozen=True)
class FormSpace:
    """A subspace of R_d given by a linearly independent basis."""

    field: Field
    n: int
    degree: int
    basis: tuple[Form, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coeff_array(self) -> np.ndarray:
        if not self.basis:
            return self.field.zeros((0, n_monomials(self.n, self.degree)))
        return self.field.array([list(q.coeffs) for q in self.basis])


QuadSpace = FormSpace


def _check_degree(d: int):
    if not 1 <= d <= MAX_DEGREE:
        raise ValueError(f"degree must be in 1..{MAX_DEGREE}")


def evaluation_array(cfg: PointConfig, d: int) -> np.ndarray:
    f = cfg.field
    a = cfg.coord_array()
    rows = []
    for P in a:
        row = []
        for e in monomials(cfg.n, d):
            v = f.one
            for k, x in enumerate(e):
                for _ in range(x):
                    v = f.mul(v, P[k])
            row.append(v)
        rows.append(row)
    return f.array(rows)


def evaluation_matrix(cfg: PointConfig, d: int) -> Matrix:
    """s x C(n+d, d) matrix of monomials evaluated at the points of X."""
    _check_degree(d)
    return Matrix(cfg.field, evaluation_array(cfg, d))


def ideal_degree_part(cfg: PointConfig, d: int = 2) -> FormSpace:
    """I(X)_d as the kernel of the evaluation map."""
    _check_degree(d)
    f = cfg.field
    ker = nullspace_array(f, evaluation_array(cfg, d))
    return FormSpace(f, cfg.n, d, tuple(Form(f, cfg.n, d, tuple(f(c) for c in row)) for row in ker))


def hilbert_function(cfg: PointConfig, d: int) -> int:
    _check_degree(d)
    return rank_array(cfg.field, evaluation_array(cfg, d))


def contains(space: FormSpace, q: Form) -> bool:
    """Membership by comparing ranks with and without ``q``."""
    if q.degree != space.degree or q.n != space.n or q.field != space.field:
        raise DimensionMismatch("form does not live in the space's ambient R_d")
    if q.is_zero():
        return True
    f = space.field
    base = space.coeff_array()
    both = np.vstack([base, f.array([list(q.coeffs)])])
    return rank_array(f, both) == space.dim


def vanishes_on_X(cfg: PointConfig, form: Form | Callable) -> bool:
    return all(form(P) == 0 for P in cfg.points)


def product_in_ideal(cfg: PointConfig, L: Form, M: Form) -> bool:
    """True iff L*M vanishes on X, i.e. X lies on {L=0} u {M=0}."""
    return all(L(P) == 0 or M(P) == 0 for P in cfg.points)


def symmetric_matrix(q: Form) -> np.ndarray:
    f = q.field
    n = q.n
    two_inv = f.inv(f(2))
    S = f.zeros((n + 1, n + 1))
    for e, c in zip(monomials(n, 2), q.coeffs):
        vs = [k for k, x in enumerate(e) for _ in range(x)]
        a, b = vs
        if a == b:
            S[a, a] = c
        else:
            h = f.mul(c, two_inv)
            S[a, b] = h
            S[b, a] = h
    return S


def split_quadric(q: Form) -> tuple[Form, Form]:
    """Factor a quadric as a product of two linear forms over its own field.

    Raises :class:`NotSplit` when rank >= 3 and :class:`NotSplitOverField`
    when the factors would need a square root the field lacks.
    """
    if q.degree != 2:
        raise DimensionMismatch("not a quadric")
    if q.is_zero():
        raise ZeroQuadric("cannot split the zero quadric")
    f, n = q.field, q.n
    S = symmetric_matrix(q)
    r = rank_array(f, S)
    if r >= 3:
        raise NotSplit(f"quadric has rank {r}", q)
    if r == 1:
        i = next(k for k in range(n + 1) if S[k, k] != 0)
        L = Form.linear(f, list(S[i]))
        return L, L.scale(f.inv(S[i, i]))
    # rank 2: write q = a U^2 + b U W + c W^2 with U, W spanning the row space
    U_row, W_row = row_space_basis(f, list(S))
    U, W = Form.linear(f, list(U_row)), Form.linear(f, list(W_row))
    cols = [U * U, U * W, W * W]
    A = Matrix(f, f.array([[g.coeffs[k] for g in cols] for k in range(len(q.coeffs))]))
    abc = solve(A, list(q.coeffs))
    if abc is None:
        raise AssertionError("rank-2 quadric not in Sym^2 of its row space")
    a, b, c = (f(v) for v in abc)
    if a == 0:
        return W, U.scale(b) + W.scale(c)
    disc = f.sub(f.mul(b, b), f.mul(f(4), f.mul(a, c)))
    root = f.sqrt(disc)
    if root is None:
        raise NotSplitOverField("discriminant is not a square in the field", q)
    inv2a = f.inv(f.mul(f(2), a))
    r1 = f.mul(f.sub(f.neg(b), root), inv2a)
    r2 = f.mul(f.add(f.neg(b), root), inv2a)
    return (U - W.scale(r1)).scale(a), U - W.scale(r2)
