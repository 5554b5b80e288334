import itertools
import json

import pytest

from linstrand.classify import normalize_special
from linstrand.errors import (DimOutOfRange, HypothesisError, NoCertificate, NotDivisible, NotInIdeal,
                              PivotInterleaved)
from linstrand.field import Field, nullspace_array
from linstrand.ideal import Form
from linstrand.koszul import a_top_via_intersection
from linstrand.projective import PointConfig, special_position_index
from linstrand.selftest import harvest_split_inputs, special_configs
from linstrand.split import (SplitCertificate, SplitInput, build_blocks, check_block_state,
                             check_certificate, derive_certificate, fallback_search,
                             key_lemma_propagate, useful_relation)

from conftest import coordinate_rows

FP = Field.fp()


def make_input(n, j, idxs, Ls, extra_rows):
    """SplitInput on coordinate points plus ``extra_rows``; Ls maps (e, f) -> {var: coeff}."""
    cfg = PointConfig.from_coords(FP, coordinate_rows(n) + extra_rows)
    L = {}
    for e, f in itertools.combinations(idxs, 2):
        L[(e, f)] = Form.linear(FP, [Ls.get((e, f), {}).get(v, 0) for v in range(n + 1)])
    return SplitInput(cfg, j, tuple(idxs), L)


@pytest.fixture(scope="module")
def harvested():
    return harvest_split_inputs(30, 3)


# -- input validation ---------------------------------------------------------------

def test_input_validation():
    with pytest.raises(HypothesisError):
        make_input(3, 0, (1, 2), {}, [])
    with pytest.raises(HypothesisError):
        make_input(3, 1, (1, 2, 3), {}, [])
    with pytest.raises(HypothesisError):
        make_input(3, 0, (1, 2, 3), {(1, 2): {3: 1}}, [])
    # x_0 L_12 fails at a point with x_0 != 0 and L_12 != 0
    with pytest.raises(NotInIdeal):
        make_input(3, 0, (1, 2, 3), {(1, 2): {1: 1}}, [[1, 1, 1, 1]])


def test_from_koszul_requires_divisibility(harvested):
    inp = harvested[0]
    ke = a_top_via_intersection(inp.cfg)[1]
    with pytest.raises(NotDivisible):
        for k in ke:
            for j in range(inp.n + 1):
                others = [v for v in range(inp.n + 1) if v != j]
                SplitInput.from_koszul(inp.cfg, k, j, others)


# -- useful relation and key lemma ------------------------------------------------------

def test_useful_relation_matches_extraction(harvested):
    checked = 0
    for inp in harvested[:10]:
        for ke in a_top_via_intersection(inp.cfg)[1]:
            if not all(ke.F(e, f, inp.j).divide_by_var(inp.j) == q for (e, f), q in inp.L.items()):
                continue
            for e, f, g in itertools.combinations(inp.idxs, 3):
                assert useful_relation(inp, e, f, g) == ke.F(e, f, g)
                checked += 1
    assert checked > 0


def test_useful_relation_zero_and_interleaved():
    inp = make_input(4, 0, (1, 2, 3), {}, [])
    assert useful_relation(inp, 1, 2, 3).is_zero()
    inner = make_input(4, 2, (1, 3, 4), {}, [])
    with pytest.raises(PivotInterleaved):
        useful_relation(inner, 1, 3, 4)


def _key_lemma_instances(limit):
    found = []
    for _, cfg in special_configs(6, 1):
        sp = special_position_index(cfg)
        c2 = normalize_special(cfg, sp.i, sp.witness)[1]
        n = c2.n
        for ke in a_top_via_intersection(c2)[1]:
            for j in range(n + 1):
                others = [v for v in range(n + 1) if v != j]
                for idxs in itertools.combinations(others, 4):
                    if idxs[0] < j < idxs[-1]:
                        continue
                    try:
                        inp = SplitInput.from_koszul(c2, ke, j, idxs)
                    except NotDivisible:
                        continue
                    for e, f, u, v in itertools.permutations(idxs, 4):
                        if u > v or not inp.connected(e, f):
                            continue
                        if inp.Lof(e, u).coeffs[u] != 0 or inp.Lof(e, v).coeffs[v] != 0:
                            continue
                        live = [P for P in c2.points if P.coords[e] != 0]
                        for row in nullspace_array(FP, FP.array([[P.coords[u], P.coords[v]] for P in live])):
                            c = [0] * (n + 1)
                            c[u], c[v] = row
                            found.append((inp, e, f, Form.linear(FP, c), u, v))
                            if len(found) >= limit:
                                return found
    return found


def test_key_lemma_on_generated_instances():
    inst = _key_lemma_instances(40)
    assert inst
    for inp, e, f, T, u, v in inst:
        assert key_lemma_propagate(inp, e, f, T, u, v)


def test_key_lemma_trivial_and_bad_hypotheses():
    inp = make_input(4, 0, (1, 2, 3, 4), {(1, 2): {1: 1, 2: 1}}, [])
    assert key_lemma_propagate(inp, 1, 2, Form.zero(FP, 4, 1), 3, 4)
    with pytest.raises(HypothesisError):
        key_lemma_propagate(inp, 1, 3, Form.var(FP, 4, 4), 2, 4)  # y_3 not connected to y_1
    with pytest.raises(HypothesisError):
        key_lemma_propagate(inp, 1, 2, Form.var(FP, 4, 0), 3, 4)  # T outside y_3, y_4


# -- blocks ---------------------------------------------------------------------------------

def test_single_block():
    inp = make_input(5, 0, (1, 2, 3, 4, 5), {(1, 2): {1: 2}, (1, 3): {1: 3}, (1, 4): {1: 1}}, [])
    st = build_blocks(inp)
    assert st.k == 1
    assert st.blocks[0].members == (1,) and st.blocks[0].starter == (1, 2)
    assert not st.binomials
    assert check_block_state(inp, st)


def test_only_binomials_has_no_blocks():
    inp = make_input(4, 0, (1, 2, 3, 4), {(1, 2): {1: 1, 2: -1}, (3, 4): {3: 1, 4: -1}}, [])
    st = build_blocks(inp)
    assert st.k == 0
    assert [tuple(D) for D in st.clusters] == [((1, 2),), ((3, 4),)]
    assert check_block_state(inp, st)


def _components(edges):
    """Independent connectivity oracle: depth-first search over the edge list."""
    adj = {}
    for e, f in edges:
        adj.setdefault(e, set()).add(f)
        adj.setdefault(f, set()).add(e)
    seen, comps = set(), []
    for v in adj:
        if v in seen:
            continue
        stack, comp = [v], set()
        while stack:
            w = stack.pop()
            if w in comp:
                continue
            comp.add(w)
            stack.extend(adj[w] - comp)
        seen |= comp
        comps.append(comp)
    return comps


def test_block_state_invariants_on_generated_inputs(harvested):
    for inp in harvested:
        st = build_blocks(inp)
        assert check_block_state(inp, st)
        comps = _components(st.binomials)
        for D in st.clusters:
            vs = st.cluster_vars(D)
            assert vs in comps
            assert len(vs) == len(D) + 1


def test_dim_out_of_range():
    zero = make_input(3, 0, (1, 2, 3), {}, [])
    with pytest.raises(DimOutOfRange):
        build_blocks(zero)
    full = make_input(3, 0, (1, 2, 3), {(1, 2): {1: 1}, (1, 3): {3: 1}}, [])
    assert full.d == 2
    with pytest.raises(DimOutOfRange):
        derive_certificate(full)


# -- certificates -------------------------------------------------------------------------------

def _example_m3():
    # L_12 = L_13 = y_1, L_23 = 0 on five points of P^3
    return make_input(3, 0, (1, 2, 3), {(1, 2): {1: 1}, (1, 3): {1: 1}}, [[1, 0, 1, 1]])


def test_m3_example_constructive_and_fallback_agree():
    inp = _example_m3()
    assert (inp.m, inp.d) == (3, 1)
    cert = derive_certificate(inp, allow_fallback=False)
    assert cert.t == 1 and len(cert.hs) == 1
    assert cert.Ls[0].support() == [1]
    assert cert.hs[0].support() == [2, 3]
    assert check_certificate(inp.cfg, cert, inp.V())
    fb = fallback_search(inp)
    assert fb.provenance == "fallback-search"
    assert check_certificate(inp.cfg, fb, inp.V())


def test_eqbadblock_branch():
    Ls = {(1, 2): {1: 1}, (1, 3): {1: 1, 3: 1}, (2, 3): {2: 1, 3: 1}}
    inp = make_input(5, 0, (1, 2, 3, 4, 5), Ls, [[1, 0, 0, 0, 1, 1], [0, 1, 1, 1, 0, 1]])
    st = build_blocks(inp)
    assert st.blocks[0].bad
    cert = derive_certificate(inp, allow_fallback=False)
    assert cert.provenance == "eqbadblock"
    assert check_certificate(inp.cfg, cert, inp.V())


def test_onlybinomials_branch():
    Ls = {(1, 2): {1: 1, 2: -1}, (3, 4): {3: 1, 4: -1}}
    inp = make_input(4, 0, (1, 2, 3, 4), Ls, [[1, 1, 1, 1, 1], [1, 2, 2, 3, 3], [0, 1, 1, 1, 2]])
    cert = derive_certificate(inp, allow_fallback=False)
    assert cert.provenance == "onlybinomials"
    assert check_certificate(inp.cfg, cert, inp.V())


def test_final_branch():
    Ls = {(1, 2): {1: 1}, (2, 3): {2: 1, 3: -1}, (4, 5): {4: 1, 5: -1}}
    inp = make_input(5, 0, (1, 2, 3, 4, 5), Ls, [[1, 0, 1, 1, 2, 2], [1, 0, 2, 2, 1, 1]])
    cert = derive_certificate(inp, allow_fallback=False)
    assert cert.provenance == "final"
    assert (cert.t, len(cert.hs)) == (2, 2)
    assert check_certificate(inp.cfg, cert, inp.V())


def test_no_certificate_without_fallback():
    # inconsistent data (the relations do not hold) gives no certificate at all
    Ls = {(1, 2): {1: 1}, (1, 3): {1: 1}}
    inp = make_input(3, 0, (1, 2, 3), Ls, [[0, 1, 1, 0], [0, 1, 0, 1]])
    with pytest.raises((NoCertificate, NotInIdeal)):
        derive_certificate(inp, allow_fallback=False)


def test_generated_inputs_close_constructively(harvested):
    for inp in harvested:
        cert = derive_certificate(inp, allow_fallback=False)
        assert cert.provenance != "fallback-search"
        assert check_certificate(inp.cfg, cert, inp.V())
        assert cert.t + len(cert.hs) == inp.m - 1


def test_certificate_checker_rejects_corruption(harvested):
    inp = harvested[0]
    cert = derive_certificate(inp)
    assert check_certificate(inp.cfg, cert, inp.V())
    dropped = SplitCertificate(cert.Ls, cert.hs[:-1], cert.m, cert.provenance)
    assert not check_certificate(inp.cfg, dropped, inp.V())
    rejected = 0
    for a, L in enumerate(cert.Ls):
        for v in range(inp.n + 1):
            c = list(L.coeffs)
            c[v] = FP.add(c[v], 1)
            bad = SplitCertificate(cert.Ls[:a] + (Form(FP, inp.n, 1, tuple(c)),) + cert.Ls[a + 1:],
                                   cert.hs, cert.m, cert.provenance)
            rejected += not check_certificate(inp.cfg, bad, inp.V())
    assert rejected > 0


def test_certificate_json_roundtrip(harvested):
    inp = harvested[1]
    cert = derive_certificate(inp)
    doc = json.loads(json.dumps(cert.to_json()))
    assert SplitCertificate.from_json(FP, inp.n, doc) == cert


def test_certificates_cover_the_union():
    # every point of a generated union configuration lies on V(Ls) or V(hs)
    for inp in harvest_split_inputs(20, 5):
        cert = derive_certificate(inp)
        for P in inp.cfg.points:
            assert all(L(P) == 0 for L in cert.Ls) or all(h(P) == 0 for h in cert.hs)
