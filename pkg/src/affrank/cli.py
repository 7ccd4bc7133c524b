"""Command-line front end: construct, analyze, classify, shuffle and verify, with JSON I/O.

Exit codes: 0 ok, 1 usage, 2 precondition failed, 3 inconclusive (budget),
4 theorem falsified.  Errors are reported as one JSON object on stderr.

Randomised choices use numpy's PCG64 generator seeded with ``--seed``
(a 64-bit integer), so identical invocations print identical bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
from math import comb

import numpy as np

from .classify import classify_subspace, core_space, kw_dims, rough_reduce
from .errors import (AffrankError, BudgetExceededError, InconclusiveError, InvalidSpecError, NotExtremalError,
                     ShapeMismatchError, TheoremFalsifiedError)
from .field import GF
from .matla import Matrix, batch_rank
from .oracle import DEFAULT_CENSUS_BUDGET, verify_bound, verify_classification, verify_facts, verify_maximality
from .spaces import (DEFAULT_LRK_BUDGET, AffineSubspace, CanonicalFamilySpec, alternate_space, construct_canonical,
                     construct_intro_example, embed_inp, lrk, rank_histogram, transform, vee)

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_INCONCLUSIVE, EXIT_FALSIFIED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message)
        sys.exit(EXIT_USAGE)


def _emit_error(kind: str, message: str, **extra):
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def _dump(obj, args) -> str:
    if getattr(args, "table", False):
        return _table(obj) + "\n"
    return json.dumps(obj, sort_keys=True) + "\n"


def _table(obj, prefix="") -> str:
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(_table(v, f"{prefix}{k}."))
            else:
                lines.append(f"{prefix}{k}: {json.dumps(v)}")
    else:
        lines.append(f"{prefix.rstrip('.')}: {json.dumps(obj)}")
    return "\n".join(lines)


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, dict) for x in v)


def _read_json(args):
    src = args.input
    text = sys.stdin.read() if src in (None, "-") else open(src).read()
    if not text.strip():
        raise UsageError("expected JSON input")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON input: {exc}") from exc


def _read_space(args) -> AffineSubspace:
    data = _read_json(args)
    try:
        return AffineSubspace.from_json(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"not an affine subspace encoding: {exc}") from exc


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


def random_invertible(rng: np.random.Generator, f, n: int) -> Matrix:
    while True:
        M = rng.integers(0, f.p, size=(n, n))
        if batch_rank(M[None], f.p)[0] == n:
            return Matrix.from_array(f, M)


def _parts(text: str) -> list[int]:
    try:
        parts = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--parts must be comma-separated integers, got {text!r}") from exc
    if not parts or any(k < 1 for k in parts):
        raise UsageError("--parts needs positive sizes")
    return parts


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required here")


# commands ---------------------------------------------------------------

def cmd_construct(args) -> dict:
    f = GF(args.field)
    kind = args.kind
    if kind == "canonical":
        _need(args, "parts")
        S = construct_canonical(CanonicalFamilySpec.from_parts(_parts(args.parts), f))
    elif kind == "intro":
        _need(args, "n", "p", "r")
        S = construct_intro_example(args.n, args.p, args.r, f)
    elif kind == "alternate":
        _need(args, "n")
        S = alternate_space(args.n, f)
    elif kind == "vee":
        data = _read_json(args)
        if not isinstance(data, dict) or "A" not in data or "B" not in data:
            raise UsageError('vee expects {"A": subspace, "B": subspace} on input')
        S = vee(AffineSubspace.from_json(data["A"]), AffineSubspace.from_json(data["B"]))
    elif kind == "embed":
        _need(args, "n", "p")
        S = embed_inp(_read_space(args), args.n, args.p)
    else:
        raise UsageError(f"unknown construction {kind!r}")
    return S.to_json()


def cmd_analyze(args) -> tuple[dict, int]:
    S = _read_space(args)
    rep = {"field": S.p, "rows": S.rows, "cols": S.cols, "dim": S.dim, "codim": S.codim}
    kc, kr = kw_dims(S.translation())
    rep["kw_dims"] = {"columns": kc, "rows": kr}
    try:
        low = lrk(S, args.budget)
        rep["lrk"] = low
        rep["translation_rank_multiset"] = {str(k): v for k, v in
                                            sorted(rank_histogram(S.translation(), args.budget).items())}
    except BudgetExceededError as exc:
        rep["inconclusive"] = True
        rep["lrk_upper_bound"] = exc.upper_bound
        return rep, EXIT_INCONCLUSIVE
    if low >= 1:
        red = rough_reduce(S, low, args.budget)
        core = core_space(red.reduced, low)
        rep["core"] = {"r": low, "dim_core": core.dim_core, "dim_H": core.dim_H}
    rep["extremal"] = low >= 1 and S.codim == comb(low + 1, 2)
    return rep, EXIT_OK


def cmd_classify(args) -> dict:
    S = _read_space(args)
    r = args.r
    if r is None:
        r = lrk(S, args.budget)
    res = classify_subspace(S, r, args.budget)
    return res.to_json()


def cmd_shuffle(args) -> dict:
    S = _read_space(args)
    rng = _rng(args.seed)
    P = random_invertible(rng, S.field, S.rows)
    Q = random_invertible(rng, S.field, S.cols)
    return transform(S, P, Q).to_json()


def cmd_verify(args) -> dict:
    f = GF(args.field)
    budget = args.budget if args.budget is not None else DEFAULT_CENSUS_BUDGET
    t = args.target
    if t == "bound":
        _need(args, "n", "p", "r")
        return verify_bound(args.n, args.p, args.r, f, jobs=args.jobs, budget=budget).to_json()
    if t == "classification":
        _need(args, "n", "p", "r")
        return verify_classification(args.n, args.p, args.r, f, jobs=args.jobs, budget=budget).to_json()
    if t == "maximality":
        _need(args, "r")
        return verify_maximality(args.r, f, jobs=args.jobs, budget=budget).to_json()
    if t == "facts":
        _need(args, "n")
        return verify_facts(args.n, f, samples=args.samples, seed=args.seed)
    raise UsageError(f"unknown verification target {t!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", type=int, default=3, help="odd prime modulus, 3..31")
    common.add_argument("--budget", type=int, default=None, help="work cap for exhaustive steps")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for census scans")
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for every random choice")
    out = common.add_mutually_exclusive_group()
    out.add_argument("--json", dest="table", action="store_false", help="JSON output (default)")
    out.add_argument("--table", dest="table", action="store_true", help="human-readable output")
    common.set_defaults(table=False)
    common.add_argument("--input", "-i", default=None, help="JSON input file (default stdin)")
    common.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--n", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--r", type=int)
    common.add_argument("--parts")

    parser = _Parser(prog="affrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    c = sub.add_parser("construct", parents=[common], help="build a subspace")
    c.add_argument("kind", choices=["canonical", "intro", "alternate", "vee", "embed"])
    sub.add_parser("analyze", parents=[common], help="invariants of a subspace read as JSON")
    sub.add_parser("classify", parents=[common], help="normal-form witness for an extremal subspace")
    sub.add_parser("shuffle", parents=[common], help="apply a seeded random equivalence")
    v = sub.add_parser("verify", parents=[common], help="exhaustive checks at small size")
    v.add_argument("target", choices=["bound", "classification", "maximality", "facts"])
    v.add_argument("--samples", type=int, default=100)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "verify" and args.budget is None:
        args.budget = DEFAULT_LRK_BUDGET
    code = EXIT_OK
    try:
        if args.command == "construct":
            result = cmd_construct(args)
        elif args.command == "analyze":
            result, code = cmd_analyze(args)
        elif args.command == "classify":
            result = cmd_classify(args)
        elif args.command == "shuffle":
            result = cmd_shuffle(args)
        else:
            result = cmd_verify(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except TheoremFalsifiedError as exc:
        _emit_error("theorem-falsified", str(exc), dump=exc.dump)
        return EXIT_FALSIFIED
    except (InconclusiveError, BudgetExceededError) as exc:
        _emit_error("inconclusive", str(exc))
        return EXIT_INCONCLUSIVE
    except (NotExtremalError, InvalidSpecError, ShapeMismatchError) as exc:
        _emit_error("precondition", str(exc))
        return EXIT_PRECONDITION
    except AffrankError as exc:
        _emit_error("precondition", str(exc))
        return EXIT_PRECONDITION
    text = _dump(result, args)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
