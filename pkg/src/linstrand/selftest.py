"""The acceptance suite as reusable, scalable checks.

Each ``criterion_*`` function generates its own configurations from a seed,
runs the pipeline, re-verifies every witness independently and returns an
:class:`Outcome`.  ``scale`` shrinks the trial counts (the CLI selftest uses a
small scale, the test suite uses 1.0); time limits are only enforced at full
scale.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterator

from .classify import check_rnc_witness, check_union_witness, classify
from .errors import LinstrandError, NotDivisible, RejectionOverflow
from .field import Field, Matrix, rank_array
from .harness import FAMILIES, GenSpec, bipartition_oracle, generate, random_frame
from .ideal import Form, ideal_degree_part
from .koszul import (KoszulElement, a_top_via_intersection, check_syzygy_relation,
                     coefficient_identities, strand_betti)
from .projective import FrameMap, PointConfig, frame_transform
from .split import SplitInput, check_certificate, derive_certificate

TIME_LIMIT = 60.0


@dataclass(frozen=True)
class Outcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _count(full: int, scale: float) -> int:
    return max(1, round(full * scale))


def _timed(number: int, name: str, scale: float, limit: float | None, body: Callable[[], tuple[bool, str]]) -> Outcome:
    t0 = time.perf_counter()
    try:
        ok, detail = body()
    except (LinstrandError, AssertionError, ValueError) as exc:
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if limit is not None and scale >= 1.0 and dt >= limit:
        ok, detail = False, f"{detail}; took {dt:.1f}s >= {limit:.0f}s"
    return Outcome(number, name, ok, detail, dt)


# -- configuration streams -------------------------------------------------------------

def _try(spec: GenSpec) -> PointConfig | None:
    try:
        return generate(spec)[0]
    except (ValueError, RejectionOverflow):
        return None


def mixed_configs(count: int, seed: int, ns=(2, 3, 4, 5), field: Field | None = None) -> list[PointConfig]:
    """Configurations cycling through dimensions and all four families."""
    field = field or Field.fp()
    rng = random.Random(f"mixed:{seed}")
    out: list[PointConfig] = []
    t = 0
    while len(out) < count:
        n = ns[t % len(ns)]
        fam = FAMILIES[(t // len(ns)) % len(FAMILIES)]
        sd = seed * 100_000 + t
        t += 1
        if fam == "rnc":
            spec = GenSpec("rnc", n, rng.randint(n + 1, 2 * n + 3), field, sd)
        elif fam == "general":
            spec = GenSpec("general", n, rng.randint(n + 1, n + 5), field, sd)
        elif fam == "union":
            k = rng.randint(1, n - 1)
            r = n - k
            s_a, s_b = rng.randint(k + 1, k + 3), rng.randint(r + 1, r + 3)
            spec = GenSpec("union", n, s_a + s_b, field, sd, k=k, r=r, s_a=s_a, s_b=s_b)
        else:
            spec = GenSpec("special", n, rng.randint(n + 2, n + 5), field, sd, i=rng.randint(0, n - 2))
        cfg = _try(spec)
        if cfg is not None:
            out.append(cfg)
    return out


def special_configs(count: int, seed: int, ns=(3, 4, 5)) -> Iterator[tuple[GenSpec, PointConfig]]:
    rng = random.Random(f"special:{seed}")
    t = 0
    made = 0
    while made < count:
        n = ns[t % len(ns)]
        spec = GenSpec("special", n, rng.randint(n + 2, n + 5), Field.fp(), seed * 100_000 + t,
                       i=rng.randint(0, n - 2))
        t += 1
        cfg = _try(spec)
        if cfg is not None:
            made += 1
            yield spec, cfg


def union_configs(k: int, r: int, count: int, seed: int) -> list[PointConfig]:
    out = []
    t = 0
    while len(out) < count:
        s_a, s_b = k + 2 + t % 2, r + 2 + (t // 2) % 2
        cfg = _try(GenSpec("union", k + r, s_a + s_b, Field.fp(), seed * 100_000 + t,
                           k=k, r=r, s_a=s_a, s_b=s_b))
        t += 1
        if cfg is not None:
            out.append(cfg)
    return out


def independent_points(cfg: PointConfig) -> list[int]:
    """Indices of the first n+1 linearly independent points."""
    f, a = cfg.field, cfg.coord_array()
    idx: list[int] = []
    for t in range(cfg.s):
        if rank_array(f, a[idx + [t]]) == len(idx) + 1:
            idx.append(t)
        if len(idx) == cfg.n + 1:
            break
    return idx


def normalized(cfg: PointConfig) -> PointConfig:
    return frame_transform(cfg, independent_points(cfg))[1]


# -- criteria ------------------------------------------------------------------------------

def criterion_formula(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        cfgs = mixed_configs(_count(200, scale), seed)
        bad = [c.s for c in cfgs if strand_betti(c).a_top != a_top_via_intersection(c, extract=False)[0]]
        return not bad, f"{len(cfgs) - len(bad)}/{len(cfgs)} agree"
    return _timed(1, "strand a_(n-1) equals the intersection dimension", scale, TIME_LIMIT, body)


def criterion_rnc(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        per_n = _count(50, scale)
        good = total = 0
        problems = []
        for n in (3, 4, 5):
            sizes = list(range(n + 3, 2 * n + 3))
            for t in range(per_n):
                cfg = generate(GenSpec("rnc", n, sizes[t % len(sizes)], Field.fp(), seed * 100_000 + t))[0]
                v = classify(cfg)
                total += 1
                ok = (v.strand.a_top >= 1 and v.tag == "OnRNC" and not v.used_fallback
                      and check_rnc_witness(cfg, v.witness))
                good += ok
                if not ok:
                    problems.append(f"n={n} s={cfg.s}: {v.tag}")
        return good == total, f"{good}/{total} OnRNC with verified witness" + (f"; {problems[:3]}" if problems else "")
    return _timed(2, "RNC configs classify OnRNC", scale, TIME_LIMIT, body)


def criterion_union(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        per = _count(50, scale)
        good = total = fallbacks = 0
        problems = []
        for k, r in ((1, 2), (1, 3), (2, 2), (2, 3)):
            for cfg in union_configs(k, r, per, seed):
                v = classify(cfg)
                total += 1
                fallbacks += v.used_fallback
                ok = v.strand.a_top >= 1 and v.tag == "OnUnion" and check_union_witness(cfg, v.witness)
                good += ok
                if not ok:
                    problems.append(f"(k,r)=({k},{r}) s={cfg.s}: {v.tag}")
        detail = f"{good}/{total} OnUnion with valid witness, {fallbacks} via fallback"
        return good == total, detail + (f"; {problems[:3]}" if problems else "")
    return _timed(3, "union configs classify OnUnion", scale, TIME_LIMIT, body)


def criterion_special(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        want = _count(100, scale)
        good = total = oracle_checked = 0
        problems = []
        stream = special_configs(10 * want, seed)
        for spec, cfg in stream:
            if total == want:
                break
            v = classify(cfg)
            if v.strand.a_top == 0:
                continue
            total += 1
            ok = v.tag == "OnUnion" and not v.used_fallback and check_union_witness(cfg, v.witness)
            if cfg.s <= 12:
                oracle_checked += 1
                ok = ok and bipartition_oracle(cfg) is not None
            good += ok
            if not ok:
                problems.append(f"n={spec.n} i={spec.i} s={spec.s} seed={spec.seed}: {v.tag} {v.provenance}")
        detail = f"{good}/{total} constructive OnUnion, oracle agreement on {oracle_checked}"
        return good == total == want, detail + (f"; {problems[:3]}" if problems else "")
    return _timed(4, "special-position configs classify OnUnion constructively", scale, None, body)


def twisted_cubic(field: Field | None = None) -> PointConfig:
    field = field or Field.rational()
    return PointConfig.from_coords(field, [[1, t, t * t, t ** 3] for t in range(8)])


def criterion_twisted_cubic(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        cfg = twisted_cubic()
        f = cfg.field
        dim_i2 = ideal_degree_part(cfg, 2).dim
        v = classify(cfg)
        fm, c2 = frame_transform(cfg, list(range(4)), 4)
        q = c2.points[5].coords
        b_expected = tuple(f.neg(f.inv(x)) for x in q)
        w = v.witness
        ok = (dim_i2 == 3 and v.strand.a == (3, 2, 0) and v.tag == "OnRNC"
              and tuple(w.b) == b_expected and len(w.params) == 8 and check_rnc_witness(cfg, w))
        return ok, f"dim I_2={dim_i2}, a={v.strand.a}, {v.tag}, b={[f.fmt(x) for x in w.b] if w else None}"
    return _timed(5, "twisted cubic golden values over Q", scale, None, body)


def _mutate(ke: KoszulElement, rng: random.Random) -> KoszulElement:
    f, n = ke.field, ke.n
    j = rng.choice(sorted(ke.components))
    C = [v for v in range(n + 1) if v not in j]
    a, b = rng.sample(C, 2)
    q = ke.components[j]
    bump = Form.from_terms(f, n, 2, {(a, b): 1})
    return ke.replace(j, q + bump)


def koszul_elements(count: int, seed: int) -> list[KoszulElement]:
    out: list[KoszulElement] = []
    for cfg in mixed_configs(4 * count, seed, ns=(3, 4, 5)):
        c2 = normalized(cfg)
        out.extend(a_top_via_intersection(c2)[1])
        if len(out) >= count:
            break
    return out[:count]


def criterion_syzygy(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        rng = random.Random(f"mutate:{seed}")
        kes = koszul_elements(_count(100, scale), seed)
        holds = sum(check_syzygy_relation(ke) and coefficient_identities(ke) for ke in kes)
        caught = 0
        for ke in kes:
            bad = _mutate(ke, rng)
            caught += not check_syzygy_relation(bad) and not coefficient_identities(bad)
        ok = bool(kes) and holds == caught == len(kes)
        return ok, f"{holds}/{len(kes)} satisfy both checks, {caught}/{len(kes)} mutations rejected by both"
    return _timed(6, "special quadrics satisfy the syzygy identities", scale, None, body)


def harvest_split_inputs(count: int, seed: int, per_config: int = 4) -> list[SplitInput]:
    """Split inputs with 0 < d < m-1 from normalized union configurations."""
    rng = random.Random(f"harvest:{seed}")
    out: list[SplitInput] = []
    t = 0
    pairs = ((1, 2), (1, 3), (2, 2), (2, 3))
    while len(out) < count and t < 400:
        k, r = pairs[t % len(pairs)]
        cfg = union_configs(k, r, 1, seed * 1000 + t)[0]
        t += 1
        n = cfg.n
        c2 = normalized(cfg)
        found = []
        for ke in a_top_via_intersection(c2)[1]:
            for j in range(n + 1):
                others = [v for v in range(n + 1) if v != j]
                for m in range(3, len(others) + 1):
                    for idxs in combinations(others, m):
                        if idxs[0] < j < idxs[-1]:
                            continue
                        try:
                            inp = SplitInput.from_koszul(c2, ke, j, idxs)
                        except NotDivisible:
                            continue
                        if 0 < inp.d < m - 1:
                            found.append(inp)
        rng.shuffle(found)
        out.extend(found[:per_config])
    return out[:count]


def criterion_split(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        want = _count(100, scale)
        inputs = harvest_split_inputs(want, seed)
        good = 0
        problems = []
        for inp in inputs:
            try:
                cert = derive_certificate(inp, allow_fallback=False)
            except LinstrandError as exc:
                problems.append(f"j={inp.j} idxs={inp.idxs}: {exc}")
                continue
            ok = check_certificate(inp.cfg, cert, inp.V()) and len(cert.Ls) + len(cert.hs) == inp.m - 1
            good += ok
        detail = f"{good}/{len(inputs)} constructive certificates verified"
        return good == len(inputs) == want, detail + (f"; {problems[:3]}" if problems else "")
    return _timed(7, "split certificates derived constructively", scale, None, body)


def criterion_general(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        total = _count(50, scale)
        zero = 0
        bad = []
        for t in range(total):
            n = 3 + t % 3
            s = n + 4 + (t // 3) % 3
            cfg = generate(GenSpec("general", n, s, Field.fp(), seed * 100_000 + t))[0]
            a_top = strand_betti(cfg).a_top
            if a_top == 0:
                zero += 1
                continue
            v = classify(cfg)
            if not (v.tag == "OnRNC" and check_rnc_witness(cfg, v.witness)):
                bad.append(f"n={n} s={s}: a_top={a_top} {v.tag}")
        need = total - total // 25
        return zero >= need and not bad, f"a_(n-1)=0 in {zero}/{total} (need {need})" + (f"; {bad[:3]}" if bad else "")
    return _timed(8, "generic configs have no linear strand", scale, None, body)


def _random_transform(cfg: PointConfig, seed: int) -> PointConfig:
    g = FrameMap(Matrix(cfg.field, random_frame(cfg.field, cfg.n, seed)))
    moved = g.apply(cfg)
    order = list(range(cfg.s))
    random.Random(seed).shuffle(order)
    return moved.reordered(order)


def criterion_invariance(scale: float = 1.0, seed: int = 0) -> Outcome:
    def body():
        cfgs = mixed_configs(_count(20, scale), seed + 7)
        frames = 10 if scale >= 1.0 else 3
        good = total = 0
        for c, cfg in enumerate(cfgs):
            ref = classify(cfg)
            for t in range(frames):
                v = classify(_random_transform(cfg, seed * 10_000 + 100 * c + t))
                total += 1
                good += v.strand.a == ref.strand.a and v.tag == ref.tag
        return good == total, f"{good}/{total} transformed copies agree on strand and tag"
    return _timed(9, "strand and verdict invariant under frame changes", scale, None, body)


CRITERIA = (criterion_formula, criterion_rnc, criterion_union, criterion_special,
            criterion_twisted_cubic, criterion_syzygy, criterion_split, criterion_general,
            criterion_invariance)


def run_all(scale: float = 1.0, seed: int = 0, report: Callable[[str], None] | None = None) -> list[Outcome]:
    out = []
    for crit in CRITERIA:
        o = crit(scale, seed)
        if report:
            report(o.line())
        out.append(o)
    return out
