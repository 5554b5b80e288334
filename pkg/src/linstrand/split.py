"""Product-ideal certificates from quadrics that split off a fixed variable.

Given indices ``i_1 < ... < i_m`` and a pivot ``j`` such that every special
quadric ``F_{efj}`` equals ``x_j L_{ef}``, the span ``V`` of the ``L_{ef}`` has
dimension ``d``.  When ``0 < d < m-1`` there are independent linear forms
``L_1..L_t`` (part of a basis of ``V``) and ``h_1..h_{m-1-t}`` with every
product ``L_a h_b`` vanishing on X.  :func:`derive_certificate` builds such a
pair by following the block / binomial-cluster case analysis, checking each
candidate on the points before returning it.

Inside this module the variables ``x_e`` for ``e`` in ``idxs`` play the role of
``y_1..y_m``; indices are always the actual coordinate indices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (DimOutOfRange, HypothesisError, NoCertificate, NotDivisible,
                     NotInIdeal, PivotInterleaved)
from .field import Field, nullspace_array, rank_array
from .ideal import Form, FormSpace
from .koszul import KoszulElement
from .projective import PointConfig

log = logging.getLogger(__name__)

FALLBACK_BOUND = 100_000
PROVENANCES = ("eqbadblock", "Gak", "BGN", "onlybinomials", "basis+varout", "final",
               "fallback-search")


def _pair(e: int, f: int) -> tuple[int, int]:
    return (e, f) if e < f else (f, e)


def _rank(field: Field, forms: Sequence[Form]) -> int:
    if not forms:
        return 0
    return rank_array(field, field.array([list(q.coeffs) for q in forms]))


def _coef(q: Form, v: int):
    return q.coeffs[v]


@dataclass(frozen=True)
class SplitInput:
    """Splitting data ``F_{efj} = x_j L_{ef}`` over the index set ``idxs``."""

    cfg: PointConfig
    j: int
    idxs: tuple[int, ...]
    L: Mapping[tuple[int, int], Form] = dc_field(hash=False)

    def __post_init__(self):
        n = self.cfg.n
        idxs = tuple(self.idxs)
        if len(idxs) < 3:
            raise HypothesisError("need m >= 3 indices")
        if list(idxs) != sorted(set(idxs)) or not all(0 <= e <= n for e in idxs):
            raise HypothesisError("idxs must be strictly increasing indices in 0..n")
        if not 0 <= self.j <= n or self.j in idxs:
            raise HypothesisError("pivot j must be an index outside idxs")
        L = {}
        for e, f in combinations(idxs, 2):
            q = self.L.get((e, f), self.L.get((f, e)))
            if q is None:
                raise HypothesisError(f"missing L_{(e, f)}")
            if q.degree != 1 or q.n != n or q.field != self.cfg.field:
                raise HypothesisError(f"L_{(e, f)} is not a linear form on P^{n}")
            if any(c != 0 for v, c in enumerate(q.coeffs) if v not in (e, f)):
                raise HypothesisError(f"L_{(e, f)} involves variables other than x_{e}, x_{f}")
            L[(e, f)] = q
        object.__setattr__(self, "idxs", idxs)
        object.__setattr__(self, "L", L)
        xj = Form.var(self.cfg.field, n, self.j)
        for ef, q in L.items():
            if not all(xj(P) == 0 or q(P) == 0 for P in self.cfg.points):
                raise NotInIdeal(f"x_{self.j} * L_{ef} does not vanish on X")

    @classmethod
    def from_koszul(cls, cfg: PointConfig, ke: KoszulElement, j: int,
                    idxs: Sequence[int]) -> SplitInput:
        """Divide each ``F_{efj}`` by ``x_j``; raises NotDivisible if one is not a multiple."""
        L = {}
        for e, f in combinations(sorted(idxs), 2):
            q = ke.F(e, f, j).divide_by_var(j)
            if q is None:
                raise NotDivisible(f"F_{tuple(sorted((e, f, j)))} is not a multiple of x_{j}")
            L[(e, f)] = q
        return cls(cfg, j, tuple(sorted(idxs)), L)

    @property
    def field(self) -> Field:
        return self.cfg.field

    @property
    def n(self) -> int:
        return self.cfg.n

    @property
    def m(self) -> int:
        return len(self.idxs)

    def Lof(self, e: int, f: int) -> Form:
        return self.L[_pair(e, f)]

    def y(self, e: int) -> Form:
        return Form.var(self.field, self.n, e)

    def V(self) -> FormSpace:
        """Canonical basis of the span of the L_{ef}."""
        from .field import row_space_basis
        rows = [list(q.coeffs) for q in self.L.values()]
        basis = row_space_basis(self.field, rows)
        return FormSpace(self.field, self.n, 1,
                         tuple(Form(self.field, self.n, 1, tuple(r)) for r in basis))

    @property
    def d(self) -> int:
        return self.V().dim

    def is_monomial_in(self, e: int, f: int) -> bool:
        """L_{ef} is a nonzero multiple of y_e."""
        q = self.Lof(e, f)
        return _coef(q, e) != 0 and _coef(q, f) == 0

    def connected(self, a: int, c: int) -> bool:
        """y_c is connected to y_a in one step: the y_c coefficient of L_{ac} is nonzero."""
        return _coef(self.Lof(a, c), c) != 0

    def vanishes(self, A: Form, B: Form) -> bool:
        return all(A(P) == 0 or B(P) == 0 for P in self.cfg.points)


def useful_relation(inp: SplitInput, e: int, f: int, g: int) -> Form:
    """F_{efg} from the L's: the cubic relation on {j,e,f,g} divided by x_j."""
    e, f, g = sorted((e, f, g))
    if not all(v in inp.idxs for v in (e, f, g)):
        raise HypothesisError("e, f, g must lie in idxs")
    j = inp.j
    if inp.idxs[0] < j < inp.idxs[-1]:
        raise PivotInterleaved(f"pivot {j} lies inside the index range {inp.idxs}")
    y = inp.y
    sgn = lambda k: 1 if k % 2 == 0 else -1  # noqa: E731
    q = (y(e) * inp.Lof(f, g)).scale(sgn(e + j)) \
        + (y(f) * inp.Lof(e, g)).scale(sgn(f + j - 1)) \
        + (y(g) * inp.Lof(e, f)).scale(sgn(g + j))
    if not all(q(P) == 0 for P in inp.cfg.points):
        raise NotInIdeal(f"F_{(e, f, g)} built from the L's does not vanish on X")
    return q


def key_lemma_propagate(inp: SplitInput, e: int, f: int, T: Form, u: int, v: int) -> bool:
    """If y_e T is in I then so is y_f T (for T in y_u, y_v under the monomial hypotheses).

    The hypotheses are checked on the data first (HypothesisError otherwise).
    Returns False only if the conclusion fails, which means the input is corrupt.
    """
    if T.is_zero():
        return True
    if len({e, f, u, v}) != 4 or not all(w in inp.idxs for w in (e, f, u, v)):
        raise HypothesisError("need four distinct indices of idxs")
    if not inp.connected(e, f):
        raise HypothesisError(f"coefficient of y_{f} in L_{(e, f)} is zero")
    if any(c != 0 for w, c in enumerate(T.coeffs) if w not in (u, v)):
        raise HypothesisError("T must be a form in y_u, y_v")
    if not (_coef(inp.Lof(e, u), u) == 0 and _coef(inp.Lof(e, v), v) == 0):
        raise HypothesisError("L_eu and L_ev must be monomials in y_e")
    if not inp.vanishes(inp.y(e), T):
        raise HypothesisError("y_e T is not in I")
    bad = next((P for P in inp.cfg.points if inp.y(f)(P) != 0 and T(P) != 0), None)
    if bad is not None:
        log.warning("key lemma conclusion fails at %s", bad.to_json())
        return False
    return True


# -- blocks and clusters --------------------------------------------------------

@dataclass(frozen=True)
class Block:
    generator: int
    starter: tuple[int, int]
    members: tuple[int, ...]      # B_q (after removing earlier blocks)
    full: tuple[int, ...]         # B^{ab}
    bad: bool = False             # y_b in B^{ab} and no re-choice possible


@dataclass
class BlockState:
    m: int
    d: int
    blocks: tuple[Block, ...]
    binomials: tuple[tuple[int, int], ...]
    D0: tuple[tuple[int, int], ...]
    clusters: tuple[tuple[tuple[int, int], ...], ...]   # D_1..D_p
    VL: tuple[int, ...]
    VN: tuple[int, ...]
    trace: dict = dc_field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.blocks)

    def block_vars(self) -> set[int]:
        return {w for B in self.blocks for w in B.members}

    def cluster_vars(self, D: Iterable[tuple[int, int]]) -> set[int]:
        return {w for ef in D for w in ef}

    def cluster_of(self, v: int) -> int | None:
        """0 for D_0, r >= 1 for D_r, None when v is not in V_L."""
        if v in self.cluster_vars(self.D0):
            return 0
        for r, D in enumerate(self.clusters, 1):
            if v in self.cluster_vars(D):
                return r
        return None

    def cluster(self, r: int):
        return self.D0 if r == 0 else self.clusters[r - 1]


def _closure(inp: SplitInput, start: int) -> list[int]:
    seen, frontier = [start], [start]
    while frontier:
        nxt = []
        for a in frontier:
            for c in inp.idxs:
                if c != a and c not in seen and inp.connected(a, c):
                    seen.append(c)
                    nxt.append(c)
        frontier = nxt
    return sorted(seen)


def build_blocks(inp: SplitInput) -> BlockState:
    """Maximal monomial blocks, a completing set of binomials and their clusters."""
    d, m = inp.d, inp.m
    if d == 0 or d >= m - 1:
        raise DimOutOfRange(f"need 0 < dim V < m-1, got dim V = {d}, m = {m}")
    starters = [(a, b) for a in inp.idxs for b in inp.idxs if a != b and inp.is_monomial_in(a, b)]
    closures = {a: _closure(inp, a) for a, _ in starters}
    blocks: list[Block] = []
    covered: set[int] = set()
    for a, b in starters:
        if a in covered:
            continue
        full = closures[a]
        # maximality: take the largest starter block containing y_a
        for a2, _ in starters:
            if a in closures[a2] and len(closures[a2]) > len(full):
                full = closures[a2]
        gens = [(x, y) for x, y in starters if x in full]
        good = [(x, y) for x, y in gens if y not in full]
        starter, bad = (good[0], False) if good else (gens[0], True)
        members = tuple(w for w in full if w not in covered)
        if not members:
            continue
        blocks.append(Block(starter[0], starter, members, tuple(full), bad))
        covered.update(full)
    # complete the block monomials to a basis of V with binomials from the L's
    f = inp.field
    basis = [inp.y(w) for B in blocks for w in B.members]
    cur = _rank(f, basis)
    binomials = []
    for ef in combinations(inp.idxs, 2):
        if cur >= d:
            break
        q = inp.L[ef]
        if _coef(q, ef[0]) == 0 or _coef(q, ef[1]) == 0:
            continue
        r = _rank(f, basis + [q])
        if r > cur:
            basis.append(q)
            binomials.append(ef)
            cur = r
    VL = sorted({w for ef in binomials for w in ef})
    used = {w for q in inp.L.values() for w in inp.idxs if _coef(q, w) != 0}
    VN = [w for w in inp.idxs if w not in used]
    D0, clusters = _binomial_clusters(binomials)
    st = BlockState(m, d, tuple(blocks), tuple(binomials), D0, clusters, tuple(VL), tuple(VN))
    st.trace["basis_rank"] = cur
    return st


def _binomial_clusters(binomials):
    """Connected components of the binomials; size-defect-one ones become D_1..D_p."""
    remaining = list(binomials)
    D0, Ds = [], []
    while remaining:
        comp = [remaining.pop(0)]
        vs = set(comp[0])
        grew = True
        while grew:
            grew = False
            for ef in list(remaining):
                if vs & set(ef):
                    comp.append(ef)
                    vs |= set(ef)
                    remaining.remove(ef)
                    grew = True
        if len(vs) == len(comp) + 1:
            Ds.append(tuple(comp))
        else:
            D0.extend(comp)
    Ds.sort(key=lambda D: min(w for ef in D for w in ef))
    return tuple(D0), tuple(Ds)


def check_block_state(inp: SplitInput, st: BlockState) -> bool:
    """Structural invariants of a BlockState, recomputed from scratch."""
    f = inp.field
    seen: set[int] = set()
    for B in st.blocks:
        if seen & set(B.members):
            return False
        seen |= set(B.members)
    forms = [inp.y(w) for w in seen] + [inp.L[ef] for ef in st.binomials]
    if len(forms) != st.d or _rank(f, forms) != st.d:
        return False
    if _rank(f, forms + list(inp.V().basis)) != st.d:
        return False
    if any(not B.bad and B.starter[1] in seen for B in st.blocks):
        return False
    for D in st.clusters:
        if len(st.cluster_vars(D)) != len(D) + 1:
            return False
    if st.D0 and len(st.cluster_vars(st.D0)) != len(st.D0):
        return False
    # L_ef = 0 across clusters
    VL = set(st.VL)
    for D in st.clusters:
        inside = st.cluster_vars(D)
        for e in inside:
            for g in VL - inside:
                if not inp.Lof(e, g).is_zero():
                    return False
    return True


# -- certificates ------------------------------------------------------------------

@dataclass(frozen=True)
class SplitCertificate:
    Ls: tuple[Form, ...]
    hs: tuple[Form, ...]
    m: int
    provenance: str
    transcript: tuple[tuple[int, int, bool], ...] = ()

    @property
    def t(self) -> int:
        return len(self.Ls)

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "m": self.m,
            "t": self.t,
            "Ls": [q.to_json() for q in self.Ls],
            "hs": [q.to_json() for q in self.hs],
            "transcript": [{"L": a, "h": b, "vanishes": ok} for a, b, ok in self.transcript],
        }

    @classmethod
    def from_json(cls, field: Field, n: int, data: dict) -> SplitCertificate:
        Ls = tuple(Form.from_json(field, n, 1, c) for c in data["Ls"])
        hs = tuple(Form.from_json(field, n, 1, c) for c in data["hs"])
        tr = tuple((int(x["L"]), int(x["h"]), bool(x["vanishes"])) for x in data.get("transcript", []))
        return cls(Ls, hs, int(data["m"]), data["provenance"], tr)


def _independent(field: Field, forms: Iterable[Form]) -> list[Form]:
    out: list[Form] = []
    for q in forms:
        if q.is_zero():
            continue
        if _rank(field, out + [q]) > len(out):
            out.append(q)
    return out


def _finish(inp: SplitInput, Ls, hs, provenance: str) -> SplitCertificate | None:
    """Trim a candidate to the certificate shape and verify it on the points."""
    f = inp.field
    V = list(inp.V().basis)
    d = len(V)
    Ls = [q for q in _independent(f, Ls) if _rank(f, V + [q]) == d]
    hs = _independent(f, hs)
    t = len(Ls)
    if t == 0 or t > d or t + len(hs) < inp.m - 1:
        return None
    hs = hs[: inp.m - 1 - t]
    transcript = []
    for a, L in enumerate(Ls):
        for b, h in enumerate(hs):
            if not inp.vanishes(L, h):
                return None
            transcript.append((a, b, True))
    return SplitCertificate(tuple(Ls), tuple(hs), inp.m, provenance, tuple(transcript))


def _G(inp: SplitInput, a: int, u: int, v: int) -> Form | None:
    """F_{auv} / y_a (up to sign) when that quadric is a multiple of y_a."""
    return useful_relation(inp, a, u, v).divide_by_var(a)


def _monomial_lemma(inp: SplitInput, st: BlockState, a: int, b: int, B: Sequence[int]):
    """Candidates from the iteration M_1, M_2, ... started at L_ab = lambda y_a."""
    ys = [inp.y(w) for w in B]
    C = [w for w in inp.idxs if w != b and w not in B]
    G: dict[int, tuple[tuple[int, int], Form]] = {}
    for w in C:
        g = _G(inp, a, b, w)
        if g is None:
            return
        G[w] = ((b, w), g)
    M = [w for w in C if _coef(G[w][1], w) == 0]
    if not M:
        yield "BGN", ys, [g for _, g in G.values()]
        return
    Nall = {w: G[w] for w in C if w not in M}
    trace = st.trace.setdefault("M", [])
    trace.append(list(M))
    for _ in range(inp.m + 1):
        Ck = [w for w in Nall if any(w in _closure(inp, z) for z in M)]
        Ak = [w for w in Nall if w not in Ck]
        if not Ak:
            return
        labels = [Nall[w][0] for w in Ak]
        Mnext, Nnew = [], {}
        for w in M:
            hit = None
            for u, v in labels:
                for x in (u, v):
                    if x == w:
                        continue
                    g = _G(inp, a, x, w)
                    if g is None:
                        return
                    if _coef(g, w) != 0:
                        hit = ((x, w), g)
                        break
                if hit:
                    break
            if hit is None:
                Mnext.append(w)
            else:
                Nnew[w] = hit
        if not Nnew:
            yield "Gak", ys + [inp.y(w) for w in M + Ck], [Nall[w][1] for w in Ak]
            return
        Nall.update(Nnew)
        if not Mnext:
            yield "BGN", ys, [g for _, g in Nall.values()]
            return
        if Mnext == M:
            st.trace["stalled"] = True
            log.info("monomial iteration stalled at M = %s", M)
            return
        M = Mnext
        trace.append(list(M))


def _candidates(inp: SplitInput, st: BlockState) -> Iterator[tuple[str, list, list]]:
    y = inp.y
    allv = list(inp.idxs)
    VN, VL = list(st.VN), list(st.VL)
    Lforms = [inp.L[ef] for ef in st.binomials]
    # a block whose partner variable it swallowed
    for B in st.blocks:
        if B.bad:
            a, b = B.starter
            YC = [w for w in allv if w not in B.full]
            if all(_coef(inp.Lof(a, s), a) == 0 and _coef(inp.Lof(b, s), b) == 0 for s in YC):
                yield "eqbadblock", [y(w) for w in B.full], [y(w) for w in YC]
    # a block whose partner does not appear in V
    for B in st.blocks:
        a, b = B.starter
        if b in VN or not st.binomials:
            yield from _monomial_lemma(inp, st, a, b, B.full)
    blocks_forms = [y(w) for B in st.blocks for w in B.members]
    l, s = len(st.binomials), len(VL)
    if l >= s - 1:
        yield "basis+varout", blocks_forms + Lforms, [y(w) for w in VN]
    if not st.blocks and st.clusters:
        D1 = st.clusters[0]
        V1 = st.cluster_vars(D1)
        yield "onlybinomials", [inp.L[ef] for ef in D1], \
            [y(w) for w in VL if w not in V1] + [y(w) for w in VN]
    if not st.blocks:
        return
    # blocks and binomials together
    for B in st.blocks:
        a, b = B.starter
        jq = st.cluster_of(b)
        if jq is None:
            continue
        inside = st.cluster_vars(st.cluster(jq))
        Z = [c for c in VL if c not in inside]
        if any(_coef(inp.Lof(a, c), a) != 0 for c in Z):
            yield from _mon_and_bin(inp, st, B, inside, Z)
    B1 = st.blocks[0]
    j1 = st.cluster_of(B1.starter[1])
    if j1 is None:
        return
    D = st.cluster(j1)
    VD = st.cluster_vars(D)
    group1, group2 = [B1], []
    for B in st.blocks[1:]:
        aq = B.generator
        if any(inp.is_monomial_in(aq, t) for t in VD):
            group1.append(B)
        else:
            group2.append(B)
    Ls = [y(w) for B in group1 for w in B.members] + [inp.L[ef] for ef in D]
    hs = [y(w) for w in VN] + [y(w) for w in VL if w not in VD] + \
        [y(w) for B in group2 for w in B.members]
    yield "final", Ls, hs


def _mon_and_bin(inp: SplitInput, st: BlockState, B: Block, VU: set, VZ: list):
    a, b = B.starter
    t = next(c for c in VZ if _coef(inp.Lof(a, c), a) != 0)
    hs = []
    others = [w for B2 in st.blocks if B2 is not B for w in B2.members]
    for s in others + list(st.VN) + list(VZ):
        if s in (a, b) or s in B.full:
            continue
        g = _G(inp, a, b, s)
        if g is None:
            return
        hs.append(g)
    for s in sorted(VU):
        if s == b or s == t:
            continue
        g = _G(inp, a, s, t)
        if g is None:
            return
        hs.append(g)
    yield "BGN", [inp.y(w) for w in B.full], hs
    yield from _monomial_lemma(inp, st, a, b, B.full)


def fallback_search(inp: SplitInput, bound: int = FALLBACK_BOUND) -> SplitCertificate:
    """Bounded search: subsets of the canonical basis of V against kernels of point evaluations."""
    f, n = inp.field, inp.n
    V = list(inp.V().basis)
    pts = [P.coords for P in inp.cfg.points]
    tried = 0
    for size in range(1, len(V) + 1):
        for sub in combinations(range(len(V)), size):
            tried += 1
            if tried > bound:
                raise NoCertificate(f"fallback search exhausted its bound of {bound}")
            Ls = [V[k] for k in sub]
            live = [P for P in pts if any(L(P) != 0 for L in Ls)]
            need = inp.m - 1 - size
            if need < 1:
                continue
            rows = [[P[e] for e in inp.idxs] for P in live]
            ker = nullspace_array(f, f.array(rows)) if rows else f.identity(inp.m)
            if ker.shape[0] < need:
                continue
            hs = []
            for row in ker[:need]:
                c = [f.zero] * (n + 1)
                for e, v in zip(inp.idxs, row):
                    c[e] = v
                hs.append(Form(f, n, 1, tuple(c)))
            cert = _finish(inp, Ls, hs, "fallback-search")
            if cert is not None:
                return cert
    raise NoCertificate("fallback search found no certificate")


def derive_certificate(inp: SplitInput, allow_fallback: bool = True) -> SplitCertificate:
    """A verified certificate (L_1..L_t)(h_1..h_{m-1-t}) in I for 0 < dim V < m-1."""
    st = build_blocks(inp)
    tried = []
    for prov, Ls, hs in _candidates(inp, st):
        tried.append(prov)
        cert = _finish(inp, Ls, hs, prov)
        if cert is not None:
            return cert
    log.warning("no constructive branch closed (tried %s); falling back", tried)
    if not allow_fallback:
        raise NoCertificate(f"no constructive branch closed (tried {tried})")
    cert = fallback_search(inp)
    log.warning("fallback-search certificate for j=%s idxs=%s", inp.j, inp.idxs)
    return cert


# -- independent checker ----------------------------------------------------------

def _plain(field: Field, x):
    return Fraction(x) if field.is_rational else int(x) % field.p


def check_certificate(cfg: PointConfig, cert: SplitCertificate, V) -> bool:
    """Re-verify a certificate with separate elimination and plain evaluation.

    ``V`` is a FormSpace or a sequence of linear forms spanning V.
    """
    from .harness import fraction_free_rank
    f = cfg.field
    Vforms = list(V.basis) if isinstance(V, FormSpace) else list(V)
    vrows = [[_plain(f, c) for c in q.coeffs] for q in Vforms]
    d = fraction_free_rank(f, vrows) if vrows else 0
    t = len(cert.Ls)
    if t == 0 or t > d or t + len(cert.hs) != cert.m - 1:
        return False
    lrows = [[_plain(f, c) for c in q.coeffs] for q in cert.Ls]
    hrows = [[_plain(f, c) for c in q.coeffs] for q in cert.hs]
    if fraction_free_rank(f, lrows) != t:
        return False
    if hrows and fraction_free_rank(f, hrows) != len(hrows):
        return False
    if fraction_free_rank(f, vrows + lrows) != d:
        return False

    def ev(row, P):
        tot = sum(_plain(f, c) * _plain(f, x) for c, x in zip(row, P.coords))
        return tot if f.is_rational else tot % f.p

    for P in cfg.points:
        if any(ev(lr, P) != 0 for lr in lrows) and any(ev(hr, P) != 0 for hr in hrows):
            log.info("certificate product fails at %s", P.to_json())
            return False
    return True
