"""Command line front end: ``quiverdm {validate|apply|verify|gen}``.

Exit codes: 0 success, 1 semantic failure (validation, category mismatch,
failed verification), 2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import sys

from . import fileformat
from .functors import functor_G, functor_Q
from .kernels import ConvergenceError, SingularMatrixError
from .quiver import SPECTRA, Category, CategoryError, dualize, generate, max_deviation, validate
from .report import ValidationReport
from .solutions import verify_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

FUNCTORS = {
    "Q": (Category.SIGMA1, functor_Q),
    "G": (Category.C, functor_G),
    "D": (Category.QUI, dualize),
}
INVERSE = {"Q": "G", "G": "Q", "D": "D"}


def _print_report(report: ValidationReport, out=None) -> None:
    out = out or sys.stdout
    print(report.to_text(), file=out)
    print("--- report ---", file=out)
    print(report.to_json(), file=out)


def _parse_dims(text: str):
    """'2' -> 2; '1,2' -> [1, 2]; '1x2,2x1' -> [(1, 2), (2, 1)]."""
    items = []
    for part in text.split(","):
        if "x" in part:
            a, b = part.split("x")
            items.append((int(a), int(b)))
        else:
            items.append(int(part))
    return items[0] if len(items) == 1 and isinstance(items[0], int) else items


def cmd_validate(args) -> int:
    rep, _ = fileformat.read(args.path)
    report = validate(rep, args.category, args.tol)
    _print_report(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_apply(args) -> int:
    rep, meta = fileformat.read(args.path)
    source, functor = FUNCTORS[args.functor]
    pre = validate(rep, source)
    if not pre.passed:
        print(f"input is not an object of {source.value}; functor {args.functor} does not apply", file=sys.stderr)
        _print_report(pre, sys.stderr)
        return EXIT_FAIL
    image = functor(rep)
    if args.check_roundtrip:
        back = FUNCTORS[INVERSE[args.functor]][1](image)
        dev = max_deviation(rep, back)
        print(f"roundtrip deviation: {dev:.3e}", file=sys.stderr)
        if not dev <= args.tol:
            return EXIT_FAIL
    meta = dict(meta)
    meta["history"] = list(meta.get("history", [])) + [args.functor]
    text = fileformat.dumps(image, meta)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    rep, _ = fileformat.read(args.path)
    pre = validate(rep, Category.SIGMA1)
    if not pre.passed:
        print("verification suites need a sigma1 representation", file=sys.stderr)
        pre.info.update({"suite": args.suite, "seed": args.seed})
        _print_report(pre)
        return EXIT_FAIL
    report = verify_suite(rep, args.suite, args.samples, args.seed, args.tol)
    _print_report(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_gen(args) -> int:
    try:
        dims = _parse_dims(args.dim)
        if args.summands < 1:
            raise ValueError("--summands must be at least 1")
        rep = generate(args.n, dims, args.category, args.seed, summands=args.summands,
                       conjugated=args.conjugate, spectrum=args.spectrum)
    except ValueError as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INPUT
    meta = {"generator": {
        "n": args.n, "dim": args.dim, "category": args.category, "seed": args.seed,
        "summands": args.summands, "conjugate": args.conjugate, "spectrum": args.spectrum,
    }}
    text = fileformat.dumps(rep, meta)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quiverdm", description="Hypercube quiver representations and their functors.")
    sub = parser.add_subparsers(dest="command", required=True)
    categories = [c.value for c in Category]

    p = sub.add_parser("validate", help="check membership in a category")
    p.add_argument("path")
    p.add_argument("--category", choices=categories, default="qui")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("apply", help="apply the functor Q, G or D")
    p.add_argument("path")
    p.add_argument("--functor", choices=sorted(FUNCTORS), required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--check-roundtrip", action="store_true", help="also apply the inverse functor and report the deviation")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("verify", help="run a verification suite on a sigma1 representation")
    p.add_argument("path")
    p.add_argument("--suite", choices=["pde", "canvar", "main"], required=True)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a random representation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", default="1", help="factor dimension: 2, or per factor 1,2, or 1x2,2x1")
    p.add_argument("--category", choices=categories, default="sigma1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--summands", type=int, default=1)
    p.add_argument("--conjugate", action="store_true")
    p.add_argument("--spectrum", choices=SPECTRA, default="generic")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fileformat.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CategoryError, SingularMatrixError, ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
