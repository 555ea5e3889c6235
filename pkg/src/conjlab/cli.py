"""Command-line entry point: ``conjlab verify|phi|map|sweep``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .conjugacy import G, H
from .errors import CertificateRejected, ConjlabError, ParseError
from .linear_flow import transition
from .scenario import load_file
from .suites import DEFAULT_SEED, QUANTITIES, SUITES, emit_plotdata, run_suite

EXIT_FAIL = 1
EXIT_USAGE = 2


def _vector(text: str, dim: int) -> np.ndarray:
    cleaned = text.replace("[", " ").replace("]", " ").replace(",", " ").split()
    try:
        v = np.array([float(x) for x in cleaned])
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse vector {text!r}") from None
    if v.size == 1 and dim > 1:
        v = np.full(dim, v[0])
    if v.size != dim:
        raise argparse.ArgumentTypeError(f"expected {dim} components, got {v.size}")
    return v


def _print_array(a: np.ndarray) -> None:
    a = np.atleast_1d(a)
    if a.ndim == 1:
        print(" ".join(repr(float(x)) for x in a))
    else:
        for row in a:
            print(" ".join(repr(float(x)) for x in row))


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_verify(args) -> int:
    sc = load_file(args.scenario)
    report = run_suite(sc, args.suite, args.seed)
    if not args.quiet:
        print(report.table())
    if args.json:
        _write(args.json, report.to_json() + "\n")
    if args.csv:
        _write(args.csv, report.to_csv())
    return report.exit_code


def cmd_phi(args) -> int:
    sc = load_file(args.scenario)
    if args.t < args.s:
        print("note: t < s, returning the inverse transition", file=sys.stderr)
    _print_array(transition(sc.linear, args.t, args.s, sc.cfg))
    return 0


def cmd_map(args) -> int:
    sc = load_file(args.scenario)
    x = _vector(args.x, sc.dim)
    fn = H if args.which == "H" else G
    _print_array(fn(sc.problem, args.t, x))
    return 0


def cmd_sweep(args) -> int:
    sc = load_file(args.scenario)
    text = emit_plotdata(sc, args.quantity, args.t0, args.t1, args.n)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("times must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conjlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a check suite and print the certificate report")
    v.add_argument("scenario", help="path to a .scn file or the name of a shipped scenario")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    v.add_argument("--csv", metavar="PATH", help="write the CSV report ('-' for stdout)")
    v.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    v.add_argument("-q", "--quiet", action="store_true", help="suppress the human-readable table")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("phi", help="print the transition matrix of the linear part")
    p.add_argument("scenario")
    p.add_argument("--t", type=_nonneg, required=True)
    p.add_argument("--s", type=_nonneg, required=True)
    p.set_defaults(func=cmd_phi)

    m = sub.add_parser("map", help="evaluate H(t, x) or G(t, x)")
    m.add_argument("which", choices=("H", "G"))
    m.add_argument("scenario")
    m.add_argument("--t", type=_nonneg, required=True)
    m.add_argument("--x", required=True, help='state, e.g. "0.5" or "[0.1, -0.2]"')
    m.set_defaults(func=cmd_map)

    s = sub.add_parser("sweep", help="emit long-format CSV for plotting")
    s.add_argument("scenario")
    s.add_argument("--quantity", choices=QUANTITIES, required=True)
    s.add_argument("--t0", type=_nonneg, default=0.0)
    s.add_argument("--t1", type=_nonneg, default=5.0)
    s.add_argument("--n", type=int, default=101)
    s.add_argument("--out", metavar="PATH")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        ap.error(str(exc))
    except ParseError as exc:
        print(f"{args.scenario}: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateRejected as exc:
        print(f"{args.scenario}: certificate rejected ({exc.inequality}): {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConjlabError, OSError, ValueError) as exc:
        print(f"conjlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
