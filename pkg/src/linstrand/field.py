"""Exact scalars and dense linear algebra over Q and F_p.

Scalars are plain Python values: ``Fraction`` for the rationals and ``int``
residues in ``[0, p)`` for a prime field.  Matrices wrap a numpy array with
``dtype=object`` (rationals) or ``int64`` (residues); every operation is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import isqrt
from typing import Iterable, Sequence

import numpy as np
from sympy import isprime
from sympy.ntheory.residue_ntheory import sqrt_mod

from .errors import FieldMismatch

DEFAULT_PRIME = 32003


@dataclass(frozen=True)
class Field:
    """Descriptor of the coefficient field; ``p is None`` means Q."""

    p: int | None = None

    def __post_init__(self):
        if self.p is not None and (self.p < 3 or not isprime(self.p)):
            raise ValueError(f"modulus {self.p} is not an odd prime")

    @classmethod
    def rational(cls) -> Field:
        return cls(None)

    @classmethod
    def fp(cls, p: int = DEFAULT_PRIME) -> Field:
        return cls(p)

    @property
    def is_rational(self) -> bool:
        return self.p is None

    @property
    def dtype(self):
        return object if self.p is None else np.int64

    @cached_property
    def zero(self):
        return self(0)

    @cached_property
    def one(self):
        return self(1)

    def __call__(self, x):
        """Coerce an int, Fraction or numeric string into this field."""
        if isinstance(x, str):
            return self.parse(x)
        if self.p is None:
            return Fraction(x)
        if isinstance(x, Fraction):
            return (x.numerator % self.p) * pow(x.denominator % self.p, -1, self.p) % self.p
        return int(x) % self.p

    def inv(self, x):
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.p is None:
            return 1 / Fraction(x)
        return pow(int(x), -1, self.p)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def mul(self, a, b):
        return a * b if self.p is None else int(a) * int(b) % self.p

    def add(self, a, b):
        return a + b if self.p is None else (int(a) + int(b)) % self.p

    def sub(self, a, b):
        return a - b if self.p is None else (int(a) - int(b)) % self.p

    def neg(self, a):
        return -a if self.p is None else (-int(a)) % self.p

    def sqrt(self, x):
        """A square root of ``x`` in the field, or None when there is none."""
        x = self(x)
        if self.p is None:
            if x < 0:
                return None
            rn, rd = isqrt(x.numerator), isqrt(x.denominator)
            if rn * rn == x.numerator and rd * rd == x.denominator:
                return Fraction(rn, rd)
            return None
        if x == 0:
            return 0
        r = sqrt_mod(int(x), self.p)
        return None if r is None else int(r)

    # -- arrays -----------------------------------------------------------

    def array(self, rows) -> np.ndarray:
        """Build a reduced 2-d (or 1-d) array of field elements."""
        if self.p is None:
            a = np.array(rows, dtype=object)
            flat = a.reshape(-1)
            for idx, v in enumerate(flat):
                if not isinstance(v, Fraction):
                    flat[idx] = Fraction(v)
            return a
        a = np.array(rows, dtype=object)
        flat = [self(v) for v in a.reshape(-1)]
        return np.array(flat, dtype=np.int64).reshape(a.shape)

    def zeros(self, shape) -> np.ndarray:
        if self.p is None:
            a = np.empty(shape, dtype=object)
            a.fill(Fraction(0))
            return a
        return np.zeros(shape, dtype=np.int64)

    def identity(self, k: int) -> np.ndarray:
        a = self.zeros((k, k))
        for i in range(k):
            a[i, i] = self.one
        return a

    def reduce(self, a: np.ndarray) -> np.ndarray:
        return a if self.p is None else a % self.p

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.p is None:
            return np.dot(a, b)
        # chunk the inner dimension so int64 accumulation cannot overflow
        k = a.shape[-1]
        step = max(1, (2**62) // (self.p * self.p))
        if k <= step:
            return np.dot(a, b) % self.p
        out = None
        for s in range(0, k, step):
            part = np.dot(a[..., s:s + step], b[s:s + step]) % self.p
            out = part if out is None else (out + part) % self.p
        return out

    # -- serialization ----------------------------------------------------

    def fmt(self, x) -> str:
        return str(self(x))

    def parse(self, s: str):
        s = s.strip()
        if self.p is None:
            return Fraction(s)
        if "/" in s:
            num, den = s.split("/")
            return self(Fraction(int(num), int(den)))
        return int(s) % self.p

    def to_json(self) -> dict:
        return {"type": "rational"} if self.p is None else {"type": "fp", "p": self.p}

    @classmethod
    def from_json(cls, data: dict) -> Field:
        kind = data.get("type")
        if kind == "rational":
            return cls.rational()
        if kind == "fp":
            return cls.fp(int(data["p"]))
        raise ValueError(f"unknown field type {kind!r}")

    @classmethod
    def from_flag(cls, flag: str) -> Field:
        """Parse ``rational`` / ``q`` / ``fp:P``."""
        flag = flag.strip().lower()
        if flag in ("rational", "q", "qq"):
            return cls.rational()
        if flag.startswith("fp"):
            _, _, p = flag.partition(":")
            return cls.fp(int(p) if p else DEFAULT_PRIME)
        raise ValueError(f"bad field flag {flag!r}")

    def __str__(self) -> str:
        return "QQ" if self.p is None else f"GF({self.p})"


class Matrix:
    """Immutable dense matrix over a :class:`Field`."""

    __slots__ = ("field", "_a")

    def __init__(self, field: Field, data):
        a = data if isinstance(data, np.ndarray) and data.dtype == field.dtype else field.array(data)
        if a.ndim != 2:
            a = a.reshape(a.shape[0] if a.ndim else 0, -1)
        a = a.copy()
        a.flags.writeable = False
        self.field = field
        self._a = a

    @classmethod
    def zeros(cls, field: Field, rows: int, cols: int) -> Matrix:
        return cls(field, field.zeros((rows, cols)))

    @classmethod
    def identity(cls, field: Field, k: int) -> Matrix:
        return cls(field, field.identity(k))

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._a

    def __getitem__(self, idx):
        return self._a[idx]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._a]

    @property
    def T(self) -> Matrix:
        return Matrix(self.field, self._a.T)

    def _check(self, other: Matrix):
        if other.field != self.field:
            raise FieldMismatch(f"{self.field} vs {other.field}")

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            self._check(other)
            return Matrix(self.field, self.field.matmul(self._a, other._a))
        v = self.field.array(list(other))
        return list(self.field.matmul(self._a, v))

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.field == other.field and self.shape == other.shape
                and bool(np.all(self._a == other._a)))

    def __hash__(self):
        return hash((self.field, self.shape, tuple(self._a.reshape(-1).tolist())))

    def vstack(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix(self.field, np.vstack([self._a, other._a]))

    def hstack(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix(self.field, np.hstack([self._a, other._a]))

    def is_zero(self) -> bool:
        return not bool(np.any(self._a != 0))

    def __repr__(self) -> str:
        return f"Matrix({self.field}, {self.tolist()!r})"


def rref_array(field: Field, a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a raw array; returns (R, pivot columns)."""
    a = np.array(a, dtype=field.dtype, copy=True)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c] != 0)
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        a[r] = field.reduce(a[r] * field.inv(a[r, c]))
        col = a[:, c].copy()
        col[r] = 0
        others = np.flatnonzero(col != 0)
        if others.size:
            a[others] = field.reduce(a[others] - np.outer(col[others], a[r]))
        pivots.append(c)
        r += 1
    return a, pivots


def rank_array(field: Field, a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return len(rref_array(field, a)[1])


def nullspace_array(field: Field, a: np.ndarray) -> np.ndarray:
    """Canonical kernel basis as the rows of the returned array."""
    rows, cols = a.shape
    if rows == 0:
        return field.identity(cols)
    r, pivots = rref_array(field, a)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = field.zeros((len(free), cols))
    for b, f in enumerate(free):
        basis[b, f] = field.one
        for i, pc in enumerate(pivots):
            basis[b, pc] = field.neg(r[i, f])
    return basis


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    r, piv = rref_array(m.field, m.array)
    return Matrix(m.field, r), piv


def rank(m: Matrix) -> int:
    return rank_array(m.field, m.array)


def nullspace(m: Matrix) -> list[list]:
    """Basis of ``{v : m v = 0}``; each vector has a 1 in its own free column."""
    return [list(row) for row in nullspace_array(m.field, m.array)]


def solve(m: Matrix, b: Sequence) -> list | None:
    """A particular solution of ``m x = b``, or None if the system is inconsistent."""
    f = m.field
    if len(b) != m.rows:
        raise ValueError("right-hand side has wrong length")
    bb = f.array(list(b)).reshape(-1, 1)
    aug = np.hstack([m.array, bb]) if m.rows else f.zeros((0, m.cols + 1))
    r, pivots = rref_array(f, aug)
    if pivots and pivots[-1] == m.cols:
        return None
    x = [f.zero] * m.cols
    for i, pc in enumerate(pivots):
        x[pc] = r[i, m.cols]
    return x


def inverse(m: Matrix) -> Matrix:
    """Inverse of a square matrix; raises ValueError when singular."""
    f = m.field
    k = m.rows
    if m.cols != k:
        raise ValueError("inverse of a non-square matrix")
    r, pivots = rref_array(f, np.hstack([m.array, f.identity(k)]))
    if len(pivots) < k or pivots[k - 1] != k - 1:
        raise ValueError("singular matrix")
    return Matrix(f, r[:, k:])


def row_space_basis(field: Field, vectors: Iterable[Sequence]) -> np.ndarray:
    """Nonzero rows of the RREF of the stacked vectors (canonical span basis)."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return field.zeros((0, 0))
    r, piv = rref_array(field, field.array(vecs))
    return r[: len(piv)]
