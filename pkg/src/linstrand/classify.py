"""Classification of point sets with a_{n-1} != 0, with verified witnesses.

Pipeline: strand -> position type -> either a rational normal curve through the
points (general position) or an explicit union of two linear subspaces
``P^k u P^r`` with ``k + r = n`` built from split special quadrics.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations
from typing import Any, Sequence

from .errors import (ContradictionReached, NoCertificate, NotDivisible, NotInIdeal,
                     NotOnRnc, PropagationStalled, SingularFrame)
from .field import Field, Matrix, nullspace_array, rank_array, solve
from .harness import bipartition_oracle, fraction_free_rank
from .ideal import Form
from .koszul import (KoszulElement, LinearStrand, a_top_via_intersection, check_syzygy_relation,
                     strand_betti)
from .projective import (DEFAULT_SUBSET_CAP, FrameMap, PointConfig, canonical, frame_transform,
                         special_position_index)
from .split import SplitInput, derive_certificate

log = logging.getLogger(__name__)

TAGS = ("NoLinearStrand", "OnRNC", "OnUnion", "UnsplitOverBaseField")
GENERAL = "GeneralPosition"


# -- witness types ---------------------------------------------------------------

@dataclass(frozen=True)
class WSpace:
    j: int
    forms: dict = dc_field(hash=False)    # (a, b) -> L^j_ab
    dim: int = 0


@dataclass(frozen=True)
class RncWitness:
    """Points are (1/(t-b_0) : ... : 1/(t-b_n)) in the coordinates ``frame``."""

    field: Field
    b: tuple
    params: tuple            # per point: a scalar, or "inf" for the unit point
    frame: Matrix

    def to_json(self) -> dict:
        f = self.field
        return {"type": "rnc", "b": [f.fmt(x) for x in self.b],
                "params": [p if p == "inf" else f.fmt(p) for p in self.params],
                "frame": [[f.fmt(x) for x in row] for row in self.frame.tolist()]}

    @classmethod
    def from_json(cls, field: Field, data: dict) -> RncWitness:
        return cls(field, tuple(field.parse(x) for x in data["b"]),
                   tuple(p if p == "inf" else field.parse(p) for p in data["params"]),
                   Matrix(field, [[field.parse(x) for x in row] for row in data["frame"]]))


@dataclass(frozen=True)
class UnionWitness:
    field: Field
    subspaceA: tuple[Form, ...]
    subspaceB: tuple[Form, ...]
    k: int
    r: int
    assignment: tuple[str, ...]

    def to_json(self) -> dict:
        return {"type": "union", "k": self.k, "r": self.r,
                "subspaceA": [q.to_json() for q in self.subspaceA],
                "subspaceB": [q.to_json() for q in self.subspaceB],
                "assignment": list(self.assignment)}

    @classmethod
    def from_json(cls, field: Field, n: int, data: dict) -> UnionWitness:
        return cls(field, tuple(Form.from_json(field, n, 1, c) for c in data["subspaceA"]),
                   tuple(Form.from_json(field, n, 1, c) for c in data["subspaceB"]),
                   int(data["k"]), int(data["r"]), tuple(data["assignment"]))


@dataclass(frozen=True)
class Verdict:
    tag: str
    strand: LinearStrand
    position: Any                     # GENERAL or the index i
    witness: Any = None
    provenance: tuple[str, ...] = ()
    assertions_checked: int = 0
    diagnostic: str | None = None

    @property
    def used_fallback(self) -> bool:
        return any("fallback" in p for p in self.provenance)

    def to_json(self) -> dict:
        out = {"tag": self.tag, "strand": list(self.strand.a),
               "position": self.position if self.position == GENERAL else int(self.position),
               "witness": None if self.witness is None else self.witness.to_json(),
               "provenance": list(self.provenance),
               "assertions_checked": self.assertions_checked}
        if self.diagnostic:
            out["diagnostic"] = self.diagnostic
        return out

    @classmethod
    def from_json(cls, field: Field, n: int, data: dict) -> Verdict:
        if data["tag"] not in TAGS:
            raise ValueError(f"unknown verdict tag {data['tag']!r}")
        w = data.get("witness")
        if w is not None:
            w = RncWitness.from_json(field, w) if w.get("type") == "rnc" else UnionWitness.from_json(field, n, w)
        pos = data["position"]
        return cls(data["tag"], LinearStrand(tuple(int(x) for x in data["strand"])),
                   pos if pos == GENERAL else int(pos), w, tuple(data.get("provenance", ())),
                   int(data.get("assertions_checked", 0)), data.get("diagnostic"))


class _Ctx:
    """Counts the intermediate claims checked on the points."""

    def __init__(self, cfg: PointConfig):
        self.cfg = cfg
        self.count = 0
        self.prov: list[str] = []

    def check(self, cond: bool, msg: str, exc=NotInIdeal):
        self.count += 1
        if not cond:
            raise exc(msg)

    def products_vanish(self, P: Sequence[Form], Q: Sequence[Form]) -> bool:
        self.count += 1
        return all(all(p(X) == 0 for p in P) or all(q(X) == 0 for q in Q)
                   for X in self.cfg.points)


# -- normalization -----------------------------------------------------------------

def normalize_special(cfg: PointConfig, i: int, witness: Sequence[int] | None = None):
    """Coordinates with e_0..e_n in X, the special P^{n-i-1} = {x_{n-i} = .. = x_n = 0}.

    Returns ``(frame_map, cfg', q_index)`` where ``q_index`` is the position of
    the extra point Q of that subspace.
    """
    n, f = cfg.n, cfg.field
    if witness is None:
        sp = special_position_index(cfg)
        if sp is None:
            raise SingularFrame("configuration is in general position")
        i, witness = sp.i, sp.witness
    witness = list(witness)
    if len(witness) != n - i + 1:
        raise SingularFrame("witness must have n-i+1 points")
    a = cfg.coord_array()
    frame = witness[: n - i]
    if rank_array(f, a[frame]) != n - i:
        raise SingularFrame("witness points do not span a P^{n-i-1}")
    for t in range(cfg.s):
        if len(frame) == n + 1:
            break
        if t in witness:
            continue
        if rank_array(f, a[frame + [t]]) == len(frame) + 1:
            frame.append(t)
    fm, c2 = frame_transform(cfg, frame)
    q_idx = witness[-1]
    Q = c2.points[q_idx].coords
    if any(Q[l] != 0 for l in range(n - i, n + 1)) or any(Q[l] == 0 for l in range(n - i)):
        raise ContradictionReached(f"extra point {c2.points[q_idx].to_json()} is not of the form (q,0)")
    return fm, c2, q_idx


def build_Wj(cfg: PointConfig, i: int, ke: KoszulElement) -> list[WSpace]:
    n, f = cfg.n, cfg.field
    out = []
    for j in range(n - i, n + 1):
        forms = {}
        for a, b in combinations(range(n - i), 2):
            lam = ke.coeffs(a, b, j)[0]
            q = ke.F(a, b, j).divide_by_var(j)
            if lam != 0 or q is None:
                raise NotDivisible(f"F_{(a, b, j)} is not a multiple of x_{j}")
            forms[(a, b)] = q
        rows = [list(q.coeffs) for q in forms.values()]
        dim = rank_array(f, f.array(rows)) if rows else 0
        out.append(WSpace(j, forms, dim))
    return out


# -- step 1: all W_j vanish ----------------------------------------------------------

def _xs(cfg: PointConfig, vs: Sequence[int]) -> list[Form]:
    return [Form.var(cfg.field, cfg.n, v) for v in vs]


def step1(cfg: PointConfig, i: int, ke: KoszulElement, ctx: _Ctx | None = None,
          allow_fallback: bool = True):
    """Return ``(P, Q)`` with (P)(Q) in I when every W_j is zero."""
    ctx = ctx or _Ctx(cfg)
    n = cfg.n
    if i == 0:
        raise ContradictionReached("all W_j vanish with i = 0 forces alpha = 0")
    small = list(range(n - i))
    P = {}
    for b, c in combinations(range(n - i, n + 1), 2):
        q = ke.F(0, b, c).divide_by_var(0)
        ctx.check(q is not None, f"F_(0,{b},{c}) is not a multiple of x_0", NotDivisible)
        for a in small:
            sign = 1 if a % 2 == 0 else -1
            ctx.check((ke.F(a, b, c) - (Form.var(cfg.field, n, a) * q).scale(sign)).is_zero(),
                      f"F_({a},{b},{c}) differs from x_{a} P_{b}{c}", ContradictionReached)
        P[(b, c)] = q
    forms = [q for q in P.values() if not q.is_zero()]
    if not forms:
        raise ContradictionReached("all P_bc vanish, forcing alpha = 0")
    xs = _xs(cfg, small)
    ctx.check(ctx.products_vanish(xs, forms), "(x_0..x_{n-i-1}) W is not in I")
    d = rank_array(cfg.field, cfg.field.array([list(q.coeffs) for q in forms]))
    if d >= i:
        ctx.prov.append("step1-direct")
        return xs, forms
    inp = SplitInput.from_koszul(cfg, ke, n - i - 1, range(n - i, n + 1))
    cert = derive_certificate(inp, allow_fallback=allow_fallback)
    ctx.prov.append(f"step1-split:{cert.provenance}")
    return list(cert.Ls), list(cert.hs) + xs


# -- step 2 ----------------------------------------------------------------------------

def _H(ke: KoszulElement, c: int, u: int, j: int) -> Form | None:
    """H_{cu} with F_{cuj} = x_j H_{cu}, or None when x_j does not divide."""
    return ke.F(c, u, j).divide_by_var(j)


def _harvest(cfg, ke, j, sources, A, ctx):
    """New variables V and their forms H_{cu} (nonzero x_u coefficient), as in the chain."""
    V, H = [], []
    for u in A:
        if u == j:
            continue
        for cands, form in sources:
            if all(form(P) == 0 or P.coords[u] == 0 for P in cfg.points):
                continue
            found = None
            for c in cands:
                if c == u:
                    continue
                h = _H(ke, c, u, j)
                if h is not None and h.coeffs[u] != 0:
                    found = (c, h)
                    break
            if found is None:
                raise PropagationStalled(f"no H_(c,{u}) with nonzero x_{u} coefficient")
            c, h = found
            xj = Form.var(cfg.field, cfg.n, j)
            ctx.check(ctx.products_vanish([xj], [h]), f"x_{j} H_({c},{u}) not in I")
            V.append(u)
            H.append(((c, u), h))
            break
    return V, H


def _bigdim_chain(cfg, ke, i, j, S, sources, A, ctx):
    """Grow (A_l)(S) until it lies in I; S gains the forms H_{V_l} at each step."""
    S = list(S)
    A = list(A)
    for _ in range(i + 2):
        if ctx.products_vanish(_xs(cfg, A), S):
            return _xs(cfg, A), S
        V, H = _harvest(cfg, ke, j, sources, A, ctx)
        if not V:
            raise PropagationStalled("no new variables while (A_l)(H) is not in I")
        S += [h for _, h in H]
        A = [a for a in A if a not in V]
        sources = [(pair, h) for pair, h in H]
    raise PropagationStalled(f"chain did not close within {i + 1} steps")


def _pair_of(W: WSpace, L: Form):
    """Index pair of a generator proportional to L, else the support of L."""
    f = L.field
    for ab, q in W.forms.items():
        if not q.is_zero() and rank_array(f, f.array([list(q.coeffs), list(L.coeffs)])) == 1:
            return ab
    return tuple(v for v, c in enumerate(L.coeffs) if c != 0)


def step2(cfg: PointConfig, i: int, ke: KoszulElement, Wjs: Sequence[WSpace],
          ctx: _Ctx | None = None, allow_fallback: bool = True):
    """Return ``(P, Q)`` with (P)(Q) in I when some W_j is nonzero."""
    ctx = ctx or _Ctx(cfg)
    n = cfg.n
    W = max((w for w in Wjs if w.dim > 0), key=lambda w: (w.dim, w.j))
    j = W.j
    A0 = list(range(n - i, n + 1))
    xj = Form.var(cfg.field, n, j)
    gens = [(ab, q) for ab, q in W.forms.items() if not q.is_zero()]
    ctx.check(ctx.products_vanish([xj], [q for _, q in gens]), f"x_{j} W_{j} is not in I")
    if W.dim >= n - i - 1:
        ctx.prov.append(f"step2-bigdim:j={j}")
        return _bigdim_chain(cfg, ke, i, j, [q for _, q in gens], gens, A0, ctx)
    inp = SplitInput.from_koszul(cfg, ke, j, range(n - i))
    cert = derive_certificate(inp, allow_fallback=allow_fallback)
    ctx.prov.append(f"step2-split:{cert.provenance}:j={j}")
    Ls, hs = list(cert.Ls), list(cert.hs)
    sources = [(_pair_of(W, L), L) for L in Ls]
    # variables contributed by the h's
    contrib = []
    for h in hs:
        v = next(v for v in range(n - i) if h.coeffs[v] != 0 and v not in contrib)
        contrib.append(v)
    A = list(A0)
    Vs: list[int] = []
    for _ in range(i + 2):
        if ctx.products_vanish(_xs(cfg, A) + hs, Ls + _xs(cfg, Vs)):
            return _xs(cfg, A) + hs, Ls + _xs(cfg, Vs)
        V, H = _harvest(cfg, ke, j, sources, A, ctx)
        if not V:
            raise PropagationStalled("no new variables in the propagation")
        A = [a for a in A if a not in V]
        mixed = [(c, u, h) for (c, u), h in H if c < n - i and h.coeffs[c] != 0]
        if mixed:
            # re-enter the big-dimension chain with the enlarged form set
            ctx.prov.append("step2-reenter-bigdim")
            extra = []
            for c, u, h in mixed:
                for v in contrib:
                    hv = _H(ke, v, u, j)
                    if hv is not None:
                        extra.append(((v, u), hv))
            S = Ls + [h for _, h in H] + [h for _, h in extra]
            return _bigdim_chain(cfg, ke, i, j, S, H + extra, A, ctx)
        for (c, u), h in H:
            ctx.check(ctx.products_vanish([xj], _xs(cfg, [u])), f"x_{j} x_{u} is not in I")
        Vs += V
        sources = [((c, u), h) for (c, u), h in H]
    raise PropagationStalled(f"propagation did not close within {i + 1} steps")


# -- witnesses ------------------------------------------------------------------------

def _pull_back(fm: FrameMap, q: Form) -> Form:
    """The form q o g in the original coordinates."""
    g = fm.g
    f = q.field
    coeffs = g.T @ list(q.coeffs)
    return Form(f, q.n, 1, tuple(f(c) for c in coeffs))


def _independent(field: Field, forms: Sequence[Form]) -> list[Form]:
    out: list[Form] = []
    for q in forms:
        if q.is_zero():
            continue
        if rank_array(field, field.array([list(x.coeffs) for x in out + [q]])) > len(out):
            out.append(q)
    return out


def union_from_products(cfg: PointConfig, P: Sequence[Form], Q: Sequence[Form]) -> UnionWitness | None:
    """X in V(P) u V(Q): shrink to codims summing to n, smaller subspace first."""
    f, n = cfg.field, cfg.n
    P, Q = _independent(f, P), _independent(f, Q)
    if len(P) < len(Q):
        P, Q = Q, P
    a = min(len(P), n - 1)
    b = n - a
    if a < 1 or b < 1 or b > len(Q):
        return None
    A, B = tuple(P[:a]), tuple(Q[:b])
    tags = []
    for X in cfg.points:
        inA = all(q(X) == 0 for q in A)
        inB = all(q(X) == 0 for q in B)
        if not (inA or inB):
            return None
        tags.append("AB" if inA and inB else ("A" if inA else "B"))
    return UnionWitness(f, A, B, n - a, n - b, tuple(tags))


def _plain(field: Field, x):
    return Fraction(x) if field.is_rational else int(x) % field.p


def check_union_witness(cfg: PointConfig, w: UnionWitness) -> bool:
    """Independent re-check of the UnionWitness invariants."""
    f, n = cfg.field, cfg.n
    if w.k < 1 or w.r < 1 or w.k + w.r != n or len(w.assignment) != cfg.s:
        return False
    ra = [[_plain(f, c) for c in q.coeffs] for q in w.subspaceA]
    rb = [[_plain(f, c) for c in q.coeffs] for q in w.subspaceB]
    if len(ra) != n - w.k or len(rb) != n - w.r:
        return False
    if fraction_free_rank(f, ra) != len(ra) or fraction_free_rank(f, rb) != len(rb):
        return False

    def zero(row, X):
        s = sum(c * _plain(f, x) for c, x in zip(row, X.coords))
        return (s if f.is_rational else s % f.p) == 0

    for X, tag in zip(cfg.points, w.assignment):
        if tag not in ("A", "B", "AB"):
            return False
        if "A" in tag and not all(zero(r, X) for r in ra):
            return False
        if "B" in tag and not all(zero(r, X) for r in rb):
            return False
    return True


def rnc_witness(cfg: PointConfig) -> RncWitness:
    """The rational normal curve through the points, via the classical frame construction."""
    f, n, s = cfg.field, cfg.n, cfg.s
    frame = list(range(n + 1))
    unit = n + 1 if s > n + 1 else None
    fm, c2 = frame_transform(cfg, frame, unit)
    if s > n + 2:
        q = c2.points[n + 2].coords
        if any(x == 0 for x in q):
            raise NotOnRnc("third extra point lies on a coordinate hyperplane")
    else:
        q = tuple(f(l + 1) for l in range(n + 1))
    b = tuple(f.neg(f.inv(x)) for x in q)
    if len(set(b)) != n + 1:
        raise NotOnRnc("curve constants b_l are not distinct")
    params: list = []
    for idx, P in enumerate(c2.points):
        if idx <= n:
            params.append(b[idx])
        elif idx == n + 1:
            params.append("inf")
        else:
            p = P.coords
            M = Matrix(f, [[p[l], f.neg(f.one)] for l in range(n + 1)])
            sol = solve(M, [f.mul(p[l], b[l]) for l in range(n + 1)])
            if sol is None or sol[0] in b:
                raise NotOnRnc(f"point {cfg.points[idx].to_json()} is not on the curve")
            params.append(f(sol[0]))
    w = RncWitness(f, b, tuple(params), fm.g)
    if not check_rnc_witness(cfg, w):
        raise NotOnRnc("constructed curve fails membership")
    return w


def rnc_point(field: Field, b: Sequence, t) -> tuple:
    n = len(b) - 1
    if t == "inf":
        return canonical(field, [1] * (n + 1))
    if t in b:
        l = list(b).index(t)
        return canonical(field, [1 if k == l else 0 for k in range(n + 1)])
    return canonical(field, [field.inv(field.sub(t, bl)) for bl in b])


def check_rnc_witness(cfg: PointConfig, w: RncWitness) -> bool:
    """Substitute each parameter and compare with the transformed point."""
    f = cfg.field
    if len(set(w.b)) != len(w.b) or len(w.b) != cfg.n + 1 or len(w.params) != cfg.s:
        return False
    g = w.frame
    for P, t in zip(cfg.points, w.params):
        img = canonical(f, g @ list(P.coords))
        if img != rnc_point(f, w.b, t):
            return False
    return True


# -- main entry ------------------------------------------------------------------------

def _oracle_witness(cfg: PointConfig) -> UnionWitness | None:
    found = bipartition_oracle(cfg)
    if found is None:
        return None
    k, r, part_a, part_b = found
    f, n = cfg.field, cfg.n
    a = cfg.coord_array()
    forms = []
    for part, dim in ((part_a, k), (part_b, r)):
        ker = nullspace_array(f, a[list(part)])
        forms.append([Form(f, n, 1, tuple(row)) for row in ker[: n - dim]])
    return union_from_products(cfg, forms[0], forms[1])


def classify(cfg: PointConfig, allow_fallback: bool = True,
             cap: int = DEFAULT_SUBSET_CAP) -> Verdict:
    """Verdict with a verified witness for the configuration."""
    strand = strand_betti(cfg)
    ctx = _Ctx(cfg)
    if strand.a_top == 0:
        return Verdict("NoLinearStrand", strand, _position(cfg, cap), None, (), ctx.count)
    sp = special_position_index(cfg, cap)
    if sp is None:
        try:
            w = rnc_witness(cfg)
        except NotOnRnc as exc:
            return Verdict("UnsplitOverBaseField", strand, GENERAL, None, ("rnc-construction",),
                           ctx.count, f"no rational normal curve over {cfg.field}: {exc}")
        ctx.check(check_rnc_witness(cfg, w), "RNC witness failed re-verification", ContradictionReached)
        return Verdict("OnRNC", strand, GENERAL, w, ("rnc-construction",), ctx.count)
    fm, c2, _ = normalize_special(cfg, sp.i, sp.witness)
    ctx.cfg = c2
    count, kes = a_top_via_intersection(c2)
    ctx.check(count == strand.a_top, "intersection count disagrees with the strand", ContradictionReached)
    failures = []
    for idx, ke in enumerate(kes):
        ctx.check(check_syzygy_relation(ke), "special quadrics violate the cubic relation",
                  ContradictionReached)
        ctx.prov = [f"special:i={sp.i}", f"alpha={idx}"]
        try:
            Wjs = build_Wj(c2, sp.i, ke)
            if all(W.dim == 0 for W in Wjs):
                P, Q = step1(c2, sp.i, ke, ctx, allow_fallback)
            else:
                P, Q = step2(c2, sp.i, ke, Wjs, ctx, allow_fallback)
        except (PropagationStalled, NoCertificate) as exc:
            failures.append(f"alpha={idx}: {exc}")
            log.info("alpha %d did not close: %s", idx, exc)
            continue
        w = union_from_products(cfg, [_pull_back(fm, q) for q in P], [_pull_back(fm, q) for q in Q])
        if w is not None and check_union_witness(cfg, w):
            ctx.count += 1
            return Verdict("OnUnion", strand, sp.i, w, tuple(ctx.prov), ctx.count)
        failures.append(f"alpha={idx}: products do not give a union witness")
    if allow_fallback and cfg.s <= 16:
        w = _oracle_witness(cfg)
        if w is not None and check_union_witness(cfg, w):
            return Verdict("OnUnion", strand, sp.i, w, (f"special:i={sp.i}", "fallback-bipartition"),
                           ctx.count + 1, "; ".join(failures))
    return Verdict("UnsplitOverBaseField", strand, sp.i, None, (f"special:i={sp.i}",), ctx.count,
                   "; ".join(failures) or "no witness")


def _position(cfg: PointConfig, cap: int):
    sp = special_position_index(cfg, cap)
    return GENERAL if sp is None else sp.i
