"""Command-line front end.

Exit codes:
  0   success
  2   decompose: dim V outside 0 < d < m-1
  3   classify: UnsplitOverBaseField
  4   a result relied on fallback search (or, with --no-fallback, would have)
  64  malformed input; a diagnostic naming the line or field goes to stderr
  70  internal assertion failed
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Any, Sequence

from .classify import GENERAL, classify
from .errors import (ConfigError, DimOutOfRange, HypothesisError, LinstrandError, NoCertificate,
                     NotDivisible, NotInIdeal, PivotInterleaved, RejectionOverflow, SizeLimit, TheoremViolation)
from .field import Field
from .harness import FAMILIES, GenSpec, bipartition_oracle, generate, strand_oracle
from .ideal import hilbert_function, ideal_degree_part, MAX_DEGREE
from .koszul import a_top_via_intersection, has_coordinate_points, strand_betti
from .projective import DEFAULT_SUBSET_CAP, PointConfig, frame_transform

EXIT_OK, EXIT_DIM, EXIT_UNSPLIT, EXIT_FALLBACK, EXIT_USAGE, EXIT_INTERNAL = 0, 2, 3, 4, 64, 70


class InputError(Exception):
    """Malformed input; the message names the offending line or field."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None
    field: Field | None
    seed: int
    fallback: bool
    json: bool
    cap: int

    def __post_init__(self):
        if self.cap < 1:
            raise InputError("--cap-subsets: must be positive")


# -- input ------------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 ({exc.reason})") from exc


def parse_config(text: str, field_override: Field | None = None) -> PointConfig:
    """Validate a PointConfig document field by field."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError("top level: expected an object with n, field, points")
    for key in ("n", "points"):
        if key not in data:
            raise InputError(f"{key}: missing")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"n: expected a positive integer, got {n!r}")
    if field_override is not None:
        field = field_override
    else:
        if "field" not in data:
            raise InputError("field: missing (or pass --field)")
        try:
            field = Field.from_json(data["field"])
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise InputError(f"field: {exc}") from exc
    pts = data["points"]
    if not isinstance(pts, list) or not pts:
        raise InputError("points: expected a nonempty array")
    rows = []
    for a, P in enumerate(pts):
        if not isinstance(P, list) or len(P) != n + 1:
            raise InputError(f"points[{a}]: expected an array of {n + 1} scalars")
        row = []
        for b, x in enumerate(P):
            if isinstance(x, bool) or not isinstance(x, (str, int)):
                raise InputError(f"points[{a}][{b}]: scalars are strings 'a' or 'a/b', got {x!r}")
            try:
                row.append(field.parse(str(x)))
            except (ValueError, ZeroDivisionError) as exc:
                raise InputError(f"points[{a}][{b}]: cannot read {x!r} over {field}") from exc
        rows.append(row)
    try:
        return PointConfig.from_coords(field, rows, n)
    except ConfigError as exc:
        raise InputError(f"points: {exc}") from exc


def _load(rc: RunConfig) -> PointConfig:
    return parse_config(_read(rc.input), rc.field)


# -- output -------------------------------------------------------------------------------

def _emit(rc: RunConfig, payload: Any, text: str) -> None:
    if rc.json:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


# -- commands ----------------------------------------------------------------------------

def cmd_strand(rc: RunConfig, args) -> int:
    cfg = _load(rc)
    strand = strand_betti(cfg)
    hf = [hilbert_function(cfg, d) for d in range(1, MAX_DEGREE + 1)]
    dim_i2 = ideal_degree_part(cfg, 2).dim
    payload = {"n": cfg.n, "s": cfg.s, "field": cfg.field.to_json(), "strand": list(strand.a),
               "dim_I2": dim_i2, "hilbert": hf}
    text = (f"points: {cfg.s} in P^{cfg.n} over {cfg.field}\n"
            f"linear strand a_1..a_{cfg.n}: {' '.join(map(str, strand.a))}\n"
            f"dim I_2: {dim_i2}\n"
            f"Hilbert function H(1..{MAX_DEGREE}): {' '.join(map(str, hf))}")
    _emit(rc, payload, text)
    return EXIT_OK


def cmd_classify(rc: RunConfig, args) -> int:
    cfg = _load(rc)
    v = classify(cfg, allow_fallback=rc.fallback, cap=rc.cap)
    pos = "general position" if v.position == GENERAL else f"special position i={v.position}"
    text = [f"verdict: {v.tag}", f"strand: {' '.join(map(str, v.strand.a))}", f"position: {pos}",
            f"provenance: {', '.join(v.provenance) or '-'}", f"assertions checked: {v.assertions_checked}"]
    if v.witness is not None:
        text.append("witness: " + json.dumps(v.witness.to_json(), sort_keys=True))
    if v.diagnostic:
        text.append(f"diagnostic: {v.diagnostic}")
    _emit(rc, v.to_json(), "\n".join(text))
    if v.tag == "UnsplitOverBaseField":
        return EXIT_UNSPLIT
    return EXIT_FALLBACK if v.used_fallback else EXIT_OK


def _parse_idxs(s: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in s.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise InputError(f"--idxs: expected comma-separated integers, got {s!r}") from exc


def cmd_decompose(rc: RunConfig, args) -> int:
    from .split import SplitInput, check_certificate, derive_certificate
    cfg = _load(rc)
    frame = None
    if not has_coordinate_points(cfg):
        if not args.normalize:
            raise InputError("points: decompose needs e_0..e_n among the points (or pass --normalize)")
        from .selftest import independent_points
        fm, cfg = frame_transform(cfg, independent_points(cfg))
        frame = [[cfg.field.fmt(x) for x in row] for row in fm.g.tolist()]
    count, kes = a_top_via_intersection(cfg)
    if not 0 <= args.alpha < count:
        raise InputError(f"--alpha: index {args.alpha} out of range (a_(n-1) = {count})")
    idxs = _parse_idxs(args.idxs)
    if idxs and idxs[0] < args.j < idxs[-1]:
        raise InputError(f"--j: pivot {args.j} must not lie strictly inside --idxs {list(idxs)}")
    try:
        inp = SplitInput.from_koszul(cfg, kes[args.alpha], args.j, idxs)
    except (NotDivisible, HypothesisError, NotInIdeal) as exc:
        raise InputError(f"--j/--idxs: {exc}") from exc
    try:
        cert = derive_certificate(inp, allow_fallback=rc.fallback)
    except PivotInterleaved as exc:
        raise InputError(f"--j/--idxs: {exc}") from exc
    except DimOutOfRange as exc:
        _emit(rc, {"error": "DimOutOfRange", "message": str(exc), "d": inp.d, "m": inp.m},
              f"DimOutOfRange: {exc}")
        return EXIT_DIM
    except NoCertificate as exc:
        if rc.fallback:
            raise TheoremViolation(f"no certificate even with fallback: {exc}") from exc
        _emit(rc, {"error": "NoCertificate", "message": str(exc)}, f"NoCertificate: {exc}")
        return EXIT_FALLBACK
    if not check_certificate(cfg, cert, inp.V()):
        raise TheoremViolation("certificate failed independent re-verification")
    payload = dict(cert.to_json(), j=inp.j, idxs=list(inp.idxs), d=inp.d)
    if frame is not None:
        payload["frame"] = frame
    text = [f"certificate ({cert.provenance}): t={cert.t}, m={cert.m}, d={inp.d}"]
    text += [f"  L_{a + 1} = {q}" for a, q in enumerate(cert.Ls)]
    text += [f"  h_{b + 1} = {q}" for b, q in enumerate(cert.hs)]
    _emit(rc, payload, "\n".join(text))
    return EXIT_FALLBACK if cert.provenance == "fallback-search" else EXIT_OK


def cmd_gen(rc: RunConfig, args) -> int:
    field = rc.field or Field.fp()
    try:
        spec = GenSpec(args.family, args.n, args.s, field, rc.seed, k=args.k, r=args.r,
                       s_a=args.s_a, s_b=args.s_b, i=args.i)
        cfg, truth = generate(spec)
    except ValueError as exc:
        raise InputError(f"gen: {exc}") from exc
    sidecar = {"spec": spec.to_json(), "truth": truth}
    if args.out:
        paths = {"config": f"{args.out}.json", "truth": f"{args.out}.truth.json"}
        for key, doc in (("config", cfg.to_json()), ("truth", sidecar)):
            with open(paths[key], "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
        _emit(rc, paths, f"wrote {paths['config']} and {paths['truth']}")
    else:
        doc = {"config": cfg.to_json(), **sidecar}
        _emit(rc, doc, json.dumps(doc, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_oracle(rc: RunConfig, args) -> int:
    cfg = _load(rc)
    strand = list(strand_oracle(cfg))
    try:
        found = bipartition_oracle(cfg)
        bip = None if found is None else {"k": found[0], "r": found[1],
                                          "part_a": list(found[2]), "part_b": list(found[3])}
    except SizeLimit as exc:
        bip = {"skipped": str(exc)}
    payload = {"strand": strand, "bipartition": bip}
    _emit(rc, payload, f"strand (oracle): {' '.join(map(str, strand))}\nbipartition: {json.dumps(bip)}")
    return EXIT_OK


def cmd_selftest(rc: RunConfig, args) -> int:
    from .selftest import run_all
    scale = args.trials / 100
    outcomes = run_all(scale, rc.seed, None if rc.json else print)
    if rc.json:
        _emit(rc, [{"criterion": o.number, "name": o.name, "passed": o.passed, "detail": o.detail,
                    "seconds": round(o.seconds, 3)} for o in outcomes], "")
    return EXIT_OK if all(o.passed for o in outcomes) else 1


COMMANDS = {"strand": cmd_strand, "classify": cmd_classify, "decompose": cmd_decompose,
            "gen": cmd_gen, "oracle": cmd_oracle, "selftest": cmd_selftest}


# -- argument parsing ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _field_flag(s: str) -> Field:
    try:
        return Field.from_flag(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--field", type=_field_flag, default=None,
                        help="fp:P or rational; overrides the field in the input")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--no-fallback", action="store_true", help="disable fallback searches")
    common.add_argument("--cap-subsets", type=int, default=DEFAULT_SUBSET_CAP,
                        help="cap on subsets enumerated by position tests")
    common.add_argument("--json", action="store_true", help="JSON-only stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = _Parser(prog="linstrand", description="Linear strands and special quadrics of point sets.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("strand", "linear strand, dim I_2, Hilbert function"),
                        ("classify", "verdict with verified witness"),
                        ("oracle", "brute-force strand and bipartition oracles")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("input", help="PointConfig JSON file, or - for stdin")
    sp = sub.add_parser("decompose", parents=[common], help="split certificate for pivot j and idxs")
    sp.add_argument("input")
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--idxs", required=True, help="comma-separated indices, e.g. 0,1,2")
    sp.add_argument("--alpha", type=int, default=0, help="which basis element of the intersection")
    sp.add_argument("--normalize", action="store_true",
                    help="move the first n+1 independent points to e_0..e_n first")
    sp = sub.add_parser("gen", parents=[common], help="generate a configuration with ground truth")
    sp.add_argument("--family", choices=FAMILIES, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--s", type=int, required=True)
    for flag in ("--k", "--r", "--s-a", "--s-b", "--i"):
        sp.add_argument(flag, type=int, default=None)
    sp.add_argument("--out", help="write PREFIX.json and PREFIX.truth.json instead of stdout")
    sp = sub.add_parser("selftest", parents=[common], help="reduced acceptance suite")
    sp.add_argument("--trials", type=int, default=10, help="percent of the full trial counts")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = RunConfig(args.command, getattr(args, "input", None), args.field, args.seed,
                       not args.no_fallback, args.json, args.cap_subsets)
        return COMMANDS[args.command](rc, args)
    except InputError as exc:
        print(f"linstrand: malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TheoremViolation, AssertionError) as exc:
        print(f"linstrand: internal assertion failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except RejectionOverflow as exc:
        print(f"linstrand: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LinstrandError as exc:
        print(f"linstrand: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
