"""castlekit command line.

    castlekit sft info golden.sft --periods 3
    castlekit castle kr golden.sft --set "[0]@0" --json kr.json --dot kr.dot
    castlekit castle dungeon golden.sft --N 3 --depth 2 --json d.json
    castlekit cocycle perturb golden.sft id.cocycle --M 10 --eps 0.2 --out g.json
    castlekit cocycle trace golden.sft g.json --point periodic:01 --range -60..60
    castlekit cocycle verify golden.sft g.json --castle castle.json --M 10 --eps 0.2

Exit status: 0 pass, 2 certificate or verification failure, 3 construction
error, 4 parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import Counter

from . import castles as ck
from . import formats as fm
from .cocycle import (TOL, kappa_trace, remove_qc, required_N, sup_norm_C0,
                      verify_qc_certificate)
from .errors import CastleKitError, ParseError
from .shiftspace import ClopenSet, point_through, periodic_orbits

EXIT_OK, EXIT_FAIL, EXIT_CONSTRUCTION, EXIT_PARSE = 0, 2, 3, 4


def _range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _emit_json(path, obj):
    if path:
        fm.write_json(path, obj)


def _emit_text(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# sft


def cmd_sft_info(args) -> int:
    space = fm.load_sft(args.file)
    census = Counter(o.period for o in periodic_orbits(space, args.periods + 1)) if args.periods else {}
    report = {
        "alphabet": list(space.alphabet),
        "edges": len(space.edges()),
        "removed": list(space.removed),
        "empty": space.is_empty,
        "census": {str(k): v for k, v in sorted(census.items())},
    }
    if space.block > 1:
        report["block_length"] = space.block
    print(f"alphabet: {' '.join(space.alphabet) or '(none)'}")
    print(f"edges: {report['edges']}")
    if space.removed:
        print(f"removed by essentialization: {' '.join(space.removed)}")
    if space.is_empty:
        print("empty: the shift has no points")
    if args.periods:
        print(f"periodic orbits up to period {args.periods}: "
              + ", ".join(f"{k}:{v}" for k, v in sorted(census.items())))
    _emit_json(args.json, report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# castle


def _appendix(castle, path, n, depth, capture_only=False):
    """Serialize, parse back, and re-run every exact check on the copy."""
    obj = fm.castle_to_json(castle)
    copy = fm.castle_from_json(json.loads(fm.dumps(obj)), castle.space)
    if capture_only:
        checks = {}
        for i, t in enumerate(copy.towers):
            checks[f"tower {i}"] = {
                "is_tower": t.is_tower(),
                "capturing": bool(ck.is_capturing(t.as_set(), n)),
                "complement_capturing": bool(ck.is_capturing(~t.as_set(), n)),
                "reentry": t.reenters_at_base(),
            }
        ok = all(all(v.values()) for v in checks.values())
    else:
        checks = ck.verify_castle(copy, N=n, depth=depth)
        ok = all(checks.values())
    obj["verification"] = checks
    _emit_json(path, obj)
    return checks, ok


def _print_castle(castle):
    hs = castle.heights
    print(f"{len(hs)} towers, heights {min(hs)}..{max(hs)}")
    for i, t in enumerate(castle.towers[:20]):
        tag = f" orbit {t.orbit}" if t.orbit else ""
        print(f"  tower {i}: height {t.height} [{t.role}{tag}] base {t.base}")
    if len(hs) > 20:
        print(f"  ... {len(hs) - 20} more")


def cmd_castle(args) -> int:
    space = fm.load_sft(args.file)
    deadline = ck.make_deadline(args.time_limit)
    capture_only = False
    depth = None
    n = args.N
    if args.kind == "kr":
        if not args.set:
            raise ParseError("castle kr needs --set EXPR")
        e = fm.parse_clopen(space, args.set)
        castle = ck.kakutani_rokhlin(e, max_height=args.max_height, deadline=deadline)
    elif args.kind == "high":
        castle = ck.high_castle(space, _need(n, "high"), max_depth=args.max_depth,
                                deadline=deadline)
    elif args.kind == "capture":
        n = _need(n, "capture")
        u = fm.parse_clopen(space, args.set) if args.set else ClopenSet.full(space)
        orbits = periodic_orbits(space, n)
        if args.orbit:
            wanted = set(args.orbit)
            orbits = [o for o in orbits if o.label in wanted]
            missing = wanted - {o.label for o in orbits}
            if missing:
                raise ParseError(f"no orbit of period < N with least word {sorted(missing)[0]!r}")
        towers = [ck.capturing_tower_periodic(space, o, n, u, max_depth=args.max_depth)
                  for o in orbits]
        if not towers:
            print(f"no periodic orbits of period < {n}")
            return EXIT_OK
        castle = ck.Castle(space, towers, N=n)
        capture_only = True
    else:
        n = _need(n, "dungeon")
        depth = args.depth
        castle = ck.dungeon_castle(space, n, depth, max_depth=args.max_depth, deadline=deadline)
    _print_castle(castle)
    checks, ok = _appendix(castle, args.json, n, depth, capture_only)
    print("verification (re-run on the serialized castle):")
    for k, v in checks.items():
        print(f"  {k}: {v}")
    _emit_text(args.dot, fm.castle_to_dot(castle))
    return EXIT_OK if ok else EXIT_FAIL


def _need(n, what):
    if n is None:
        raise ParseError(f"castle {what} needs --N")
    return n


# ---------------------------------------------------------------------------
# cocycle


def _point(space, text, seed):
    if text.startswith("random:"):
        length = int(text.split(":", 1)[1])
        rng = random.Random(seed)
        words = list(space.words(length))
        if not words:
            raise ParseError(f"no admissible words of length {length}")
        return point_through(space, rng.choice(words), -(length // 2))
    return fm.parse_point(space, text)


def _print_trace(tr, M):
    print(f"kappa trace on [{tr.times[0]}, {tr.times[-1]}]: running max {tr.running_max:.6g}")
    if M is not None:
        hit = tr.first_exceeding(M)
        print(f"  first |n| with kappa > {M}: {hit}")
    return tr.first_exceeding(M) is not None if M is not None else True


def _check_params(M, eps):
    if M is None or eps is None:
        raise ParseError("--M and --eps are required")
    if not M > 1:
        raise ParseError("M must exceed 1")
    if not eps > 0:
        raise ParseError("eps must be positive")


def cmd_perturb(args) -> int:
    space = fm.load_sft(args.file)
    f = fm.load_cocycle(space, args.cocycle)
    _check_params(args.M, args.eps)
    print(f"N = {required_N(args.M, args.eps)}, C0 = {sup_norm_C0(f):.6g}")
    res = remove_qc(f, args.M, args.eps, deadline=ck.make_deadline(args.time_limit), tol=args.tol)
    cert = res.certificate
    print(cert.summary())
    _emit_json(args.out, fm.cocycle_to_json(res.G))
    _emit_json(args.castle, fm.castle_to_json(res.castle))
    _emit_json(args.json, cert.to_dict())
    ok = cert.passed
    if args.trace:
        lo, hi = args.range
        tr = kappa_trace(res.G, _point(space, args.trace, args.seed), lo, hi)
        ok = _print_trace(tr, args.M) and ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_trace(args) -> int:
    space = fm.load_sft(args.file)
    f = fm.load_cocycle(space, args.cocycle)
    lo, hi = args.range
    tr = kappa_trace(f, _point(space, args.point, args.seed), lo, hi)
    ok = _print_trace(tr, args.M)
    _emit_json(args.json, {"times": tr.times, "kappa": tr.values, "running_max": tr.running_max})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    space = fm.load_sft(args.file)
    g = fm.load_cocycle(space, args.cocycle)
    _check_params(args.M, args.eps)
    if not args.castle:
        raise ParseError("cocycle verify needs --castle FILE")
    with open(args.castle) as fh:
        castle = fm.castle_from_json(json.load(fh), space)
    f = fm.load_cocycle(space, args.original) if args.original else None
    cert = verify_qc_certificate(g, castle, args.M, args.eps, f=f, tol=args.tol)
    print(cert.summary())
    _emit_json(args.json, cert.to_dict())
    return EXIT_OK if cert.passed else EXIT_FAIL


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _glue_ranges(argv):
    """Let ``--range -60..60`` through; argparse would read it as an option."""
    out = []
    it = iter(argv)
    for a in it:
        if a == "--range":
            out.append("--range=" + next(it, ""))
        else:
            out.append(a)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="castlekit", description=__doc__.split("\n\n")[0])
    top = p.add_subparsers(dest="group", required=True)

    sft = top.add_parser("sft", help="inspect a shift of finite type")
    sft_sub = sft.add_subparsers(dest="action", required=True)
    info = sft_sub.add_parser("info", help="alphabet, edges, periodic-orbit census")
    info.add_argument("file")
    info.add_argument("--periods", type=int, default=0, help="census up to this period")
    info.add_argument("--json")
    info.set_defaults(run=cmd_sft_info)

    castle = top.add_parser("castle", help="build and verify a castle")
    castle.add_argument("kind", choices=["kr", "high", "capture", "dungeon"])
    castle.add_argument("file", help="SFT file")
    castle.add_argument("--set", help="clopen expression (kr: the base; capture: neighborhood)")
    castle.add_argument("--N", type=_positive_int)
    castle.add_argument("--depth", type=int, default=0, help="floor resolution r (dungeon)")
    castle.add_argument("--orbit", action="append", help="restrict capture to this orbit word")
    castle.add_argument("--max-depth", type=_positive_int, default=48)
    castle.add_argument("--max-height", type=_positive_int, help="kr: fail beyond this return time")
    castle.add_argument("--time-limit", type=float, help="seconds before giving up")
    castle.add_argument("--json")
    castle.add_argument("--dot")
    castle.set_defaults(run=cmd_castle)

    coc = top.add_parser("cocycle", help="perturb, trace, or verify a cocycle")
    coc_sub = coc.add_subparsers(dest="action", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="SFT file")
    common.add_argument("cocycle", help="cocycle table or JSON file")
    common.add_argument("--M", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--tol", type=float, default=TOL)
    common.add_argument("--seed", type=int, default=0, help="for random:LEN points")
    common.add_argument("--range", type=_range, default=(-60, 60))
    common.add_argument("--json")

    pert = coc_sub.add_parser("perturb", parents=[common], help="remove quasiconformal orbits")
    pert.add_argument("--out", help="write the perturbed cocycle here")
    pert.add_argument("--castle", help="write the castle used here")
    pert.add_argument("--trace", help="point to trace after perturbing, e.g. periodic:01")
    pert.add_argument("--time-limit", type=float)
    pert.set_defaults(run=cmd_perturb)

    tr = coc_sub.add_parser("trace", parents=[common], help="condition numbers along an orbit")
    tr.add_argument("--point", required=True, help="periodic:W, through:W@P, or random:LEN")
    tr.set_defaults(run=cmd_trace)

    ver = coc_sub.add_parser("verify", parents=[common], help="re-check a certificate")
    ver.add_argument("--castle", help="castle JSON the cocycle was built on")
    ver.add_argument("--original", help="unperturbed cocycle, for the distance bound")
    ver.set_defaults(run=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_ranges(argv))
    try:
        return args.run(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CastleKitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


if __name__ == "__main__":
    sys.exit(main())
