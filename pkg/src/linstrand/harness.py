"""Configuration generators with ground truth, and brute-force oracles.

The oracles here deliberately avoid :mod:`linstrand.field`'s elimination and
:mod:`linstrand.koszul`'s bases so that they can serve as independent checks.
"""
from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations
from typing import Any, Sequence

from .errors import ConfigError, RejectionOverflow, SizeLimit
from .field import Field
from .projective import PointConfig, is_general_position, special_position_index

MAX_ATTEMPTS = 10_000
FAMILIES = ("rnc", "union", "general", "special")


# -- independent elimination ---------------------------------------------------

def fraction_free_rank(field: Field, rows: Sequence[Sequence]) -> int:
    """Rank by fraction-free (cross-multiplying) elimination, no inverses used.

    Rationals are first cleared to integers row by row; residues are kept as
    integers reduced mod p.
    """
    p = field.p
    mat = []
    for r in rows:
        if p is None:
            fr = [Fraction(x) for x in r]
            den = 1
            for x in fr:
                den = den * x.denominator // _gcd(den, x.denominator)
            mat.append([int(x * den) for x in fr])
        else:
            mat.append([int(x) % p for x in r])
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        a = mat[rank][c]
        for i in range(rank + 1, len(mat)):
            b = mat[i][c]
            if b == 0:
                continue
            new = [a * x - b * y for x, y in zip(mat[i], mat[rank])]
            if p is None:
                g = 0
                for x in new:
                    g = _gcd(g, x)
                if g > 1:
                    new = [x // g for x in new]
            else:
                new = [x % p for x in new]
            mat[i] = new
        rank += 1
    return rank


def _gcd(a: int, b: int) -> int:
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


# -- generators ------------------------------------------------------------------

@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    s: int
    field: Field = dc_field(default_factory=Field.fp)
    seed: int = 0
    k: int | None = None
    r: int | None = None
    s_a: int | None = None
    s_b: int | None = None
    i: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.s < self.n + 1:
            raise ValueError("need s >= n+1")
        if self.family == "union":
            if None in (self.k, self.r, self.s_a, self.s_b):
                raise ValueError("union family needs k, r, s_a, s_b")
            if self.k + self.r != self.n or self.k < 1 or self.r < 1:
                raise ValueError("need k, r >= 1 and k + r = n")
            if self.s_a + self.s_b != self.s:
                raise ValueError("need s_a + s_b = s")
        if self.family == "special":
            if self.i is None or not 0 <= self.i <= self.n - 2:
                raise ValueError("special family needs 0 <= i <= n-2")
            if self.s < self.n + 2:
                raise ValueError("special family needs s >= n+2")

    def to_json(self) -> dict:
        d = asdict(self)
        d["field"] = self.field.to_json()
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_json(cls, data: dict) -> GenSpec:
        d = dict(data)
        d["field"] = Field.from_json(d.get("field", {"type": "fp", "p": 32003}))
        return cls(**d)


def _rand_scalar(rng: random.Random, field: Field, lo: int = -9, hi: int = 9):
    if field.is_rational:
        return Fraction(rng.randint(lo, hi))
    return rng.randrange(field.p)


def _rand_invertible(rng: random.Random, field: Field, size: int) -> list[list]:
    while True:
        m = [[_rand_scalar(rng, field) for _ in range(size)] for _ in range(size)]
        if fraction_free_rank(field, m) == size:
            return m


def random_frame(field: Field, n: int, seed: int) -> list[list]:
    """A seeded random invertible (n+1)x(n+1) matrix."""
    return _rand_invertible(random.Random(f"frame:{n}:{seed}"), field, n + 1)


def _apply(field: Field, g: list[list], v: Sequence) -> list:
    return [field(sum(field(a) * field(b) for a, b in zip(row, v))) for row in g]


def _combo(rng, field, basis):
    coeffs = [_rand_scalar(rng, field) for _ in basis]
    return [field(sum(c * field(b[k]) for c, b in zip(coeffs, basis))) for k in range(len(basis[0]))]


def _try_config(field, n, rows):
    try:
        return PointConfig.from_coords(field, rows, n)
    except ConfigError:
        return None


def generate(spec: GenSpec) -> tuple[PointConfig, dict[str, Any]]:
    """Sample a configuration of the requested family, with ground truth."""
    rng = random.Random(f"{spec.family}:{spec.n}:{spec.s}:{spec.seed}:{spec.k}:{spec.r}:{spec.i}")
    gen = {"rnc": _gen_rnc, "union": _gen_union, "general": _gen_general, "special": _gen_special}
    for _ in range(MAX_ATTEMPTS):
        out = gen[spec.family](rng, spec)
        if out is not None:
            return out
    raise RejectionOverflow(f"no valid {spec.family} configuration after {MAX_ATTEMPTS} attempts")


def _gen_rnc(rng, spec):
    f, n = spec.field, spec.n
    ts = []
    while len(ts) < spec.s:
        t = _rand_scalar(rng, f, -30, 30)
        if t not in ts:
            ts.append(t)
    g = _rand_invertible(rng, f, n + 1)
    rows = [_apply(f, g, [f(t) ** k if f.is_rational else pow(int(t), k, f.p) for k in range(n + 1)])
            for t in ts]
    cfg = _try_config(f, n, rows)
    if cfg is None:
        return None
    return cfg, {"family": "rnc", "params": [f.fmt(t) for t in ts],
                 "frame": [[f.fmt(x) for x in row] for row in g]}


def _gen_union(rng, spec, k=None, r=None, s_a=None, s_b=None, extra_meet=False):
    f, n = spec.field, spec.n
    k = spec.k if k is None else k
    r = spec.r if r is None else r
    s_a = spec.s_a if s_a is None else s_a
    s_b = spec.s_b if s_b is None else s_b
    A = [[_rand_scalar(rng, f) for _ in range(n + 1)] for _ in range(k + 1)]
    B = [[_rand_scalar(rng, f) for _ in range(n + 1)] for _ in range(r + 1)]
    if fraction_free_rank(f, A) != k + 1 or fraction_free_rank(f, B) != r + 1:
        return None
    if fraction_free_rank(f, A + B) != n + 1:
        return None
    pts_a = [_combo(rng, f, A) for _ in range(s_a)]
    pts_b = [_combo(rng, f, B) for _ in range(s_b)]
    rows = pts_a + pts_b
    tags = ["A"] * s_a + ["B"] * s_b
    if extra_meet:
        meet = _meet_point(f, A, B)
        if meet is None:
            return None
        rows[-1] = meet
        tags[-1] = "AB"
    order = list(range(len(rows)))
    rng.shuffle(order)
    rows = [rows[t] for t in order]
    tags = [tags[t] for t in order]
    cfg = _try_config(f, n, rows)
    if cfg is None:
        return None
    # generic points of A never span less than their count allows
    if fraction_free_rank(f, [list(P.coords) for P, t in zip(cfg.points, tags) if "A" in t]) != min(k + 1, tags.count("A") + tags.count("AB")):
        return None
    truth = {"family": "union", "k": k, "r": r,
             "subspaceA": [[f.fmt(x) for x in v] for v in A],
             "subspaceB": [[f.fmt(x) for x in v] for v in B],
             "assignment": tags}
    return cfg, truth


def _meet_point(f, A, B):
    """A point of span(A) cap span(B) (nonempty when dims add up to >= n)."""
    from .field import Matrix, nullspace
    cols = [list(v) for v in A] + [[f.neg(x) for x in v] for v in B]
    ker = nullspace(Matrix(f, [list(r) for r in zip(*cols)]))
    if not ker:
        return None
    c = ker[0]
    pt = [f.zero] * len(A[0])
    for coef, v in zip(c[:len(A)], A):
        pt = [f.add(x, f.mul(coef, f(y))) for x, y in zip(pt, v)]
    return pt if any(x != 0 for x in pt) else None


def _gen_general(rng, spec):
    f, n = spec.field, spec.n
    rows = [[_rand_scalar(rng, f) for _ in range(n + 1)] for _ in range(spec.s)]
    cfg = _try_config(f, n, rows)
    if cfg is None or not is_general_position(cfg):
        return None
    return cfg, {"family": "general"}


def _gen_special(rng, spec):
    n, i = spec.n, spec.i
    k, r = n - i - 1, i + 1
    s_a = n - i + 1
    s_b = spec.s - s_a
    if s_b < 1:
        raise ValueError("special family needs s > n-i+1")
    if n >= 2 * i + 3 and s_b >= i + 3:
        # i+3 points of the P^{i+1} side plus n-2i-3 others would sit on a P^{n-i-2}
        raise ValueError(f"special family with i={i} in P^{n} allows at most {i + 2} extra points")
    out = _gen_union(rng, spec, k, r, s_a, s_b, extra_meet=rng.random() < 0.3)
    if out is None:
        return None
    cfg, truth = out
    sp = special_position_index(cfg)
    if sp is None or sp.i != i:
        return None
    truth = dict(truth, family="special", i=i)
    return cfg, truth


# -- oracles ---------------------------------------------------------------------

def bipartition_oracle(cfg: PointConfig, max_points: int = 16):
    """Brute-force search for X = X_A u X_B with projective spans of dims k, r, k + r <= n.

    Returns ``(k, r, part_a, part_b)`` for the first bipartition in enumeration
    order (dims enlarged so that k + r = n, k <= r), or None.
    """
    if cfg.s > max_points:
        raise SizeLimit(f"{cfg.s} points exceeds the bipartition cap {max_points}")
    rows = [list(P.coords) for P in cfg.points]
    n, f = cfg.n, cfg.field
    s = cfg.s
    cache: dict[tuple[int, ...], int] = {}

    def span_dim(sub):
        if sub not in cache:
            cache[sub] = fraction_free_rank(f, [rows[t] for t in sub]) - 1
        return cache[sub]

    for size_a in range(1, s):
        for part_a in combinations(range(s), size_a):
            if 0 not in part_a:
                continue  # each unordered bipartition once
            part_b = tuple(t for t in range(s) if t not in part_a)
            da, db = span_dim(part_a), span_dim(part_b)
            if da + db <= n:
                ka, kb = max(da, 1), max(db, 1)
                while ka + kb < n:
                    if ka <= kb:
                        ka += 1
                    else:
                        kb += 1
                if ka + kb > n:
                    continue
                return (min(ka, kb), max(ka, kb), part_a, part_b) if ka <= kb else \
                    (kb, ka, part_b, part_a)
    return None


def _koszul_signed_faces(subset):
    for l, v in enumerate(subset):
        yield (-1) ** l, v, subset[:l] + subset[l + 1:]


def strand_oracle(cfg: PointConfig) -> tuple[int, ...]:
    """a_1..a_n via Koszul homology with the I_2 quotient taken explicitly.

    Independent of :func:`linstrand.koszul.strand_betti`: colex wedge bases,
    reverse monomial order, the quotient A_2 = R_2/I_2 realised by appending an
    I_2 basis (found by brute elimination here) to the target, and
    fraction-free ranks throughout.
    """
    f, n = cfg.field, cfg.n
    var = list(range(n, -1, -1))
    quad = [(a, b) for a in var for b in var if a >= b]
    qidx = {m: t for t, m in enumerate(quad)}
    pts = [list(P.coords) for P in cfg.points]
    evals = [[f.mul(P[a], P[b]) for (a, b) in quad] for P in pts]
    i2 = _kernel_basis(f, evals, len(quad))

    def wedge(k):
        return sorted(combinations(range(n + 1), k), key=lambda S: tuple(reversed(S)))

    out = []
    for i in range(1, n + 1):
        src, dst = wedge(i), wedge(i - 1)
        d_idx = {S: t for t, S in enumerate(dst)}
        # out-map to wedge^{i-1} (x) R_2, then quotient by wedge^{i-1} (x) I_2
        cols = []
        for S in src:
            for v in var:
                col = [0] * (len(dst) * len(quad))
                for sg, w, face in _koszul_signed_faces(S):
                    m = (max(v, w), min(v, w))
                    col[d_idx[face] * len(quad) + qidx[m]] += sg
                cols.append([f(x) for x in col])
        rel = []
        for t in range(len(dst)):
            for q in i2:
                col = [f.zero] * (len(dst) * len(quad))
                col[t * len(quad):(t + 1) * len(quad)] = q
                rel.append(col)
        r_rel = fraction_free_rank(f, rel) if rel else 0
        r_all = fraction_free_rank(f, rel + cols) if rel or cols else 0
        ker = len(cols) - (r_all - r_rel)
        # in-map from wedge^{i+1} (x) R_0
        up = wedge(i + 1)
        s_idx = {S: t for t, S in enumerate(src)}
        vidx = {v: t for t, v in enumerate(var)}
        incols = []
        for S in up:
            col = [0] * (len(src) * len(var))
            for sg, w, face in _koszul_signed_faces(S):
                col[s_idx[face] * len(var) + vidx[w]] += sg
            incols.append([f(x) for x in col])
        r_in = fraction_free_rank(f, incols) if incols else 0
        out.append(ker - r_in)
    return tuple(out)


def _kernel_basis(f: Field, rows: list[list], ncols: int) -> list[list]:
    """Kernel of ``rows`` by plain Gauss-Jordan on Python scalars (oracle use only)."""
    m = [list(r) for r in rows]
    piv_cols = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = f.inv(m[r][c])
        m[r] = [f.mul(x, inv) for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                fac = m[i][c]
                m[i] = [f.sub(x, f.mul(fac, y)) for x, y in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
    basis = []
    for fc in (c for c in range(ncols) if c not in piv_cols):
        v = [f.zero] * ncols
        v[fc] = f.one
        for i, pc in enumerate(piv_cols):
            v[pc] = f.neg(m[i][fc])
        basis.append(v)
    return basis
