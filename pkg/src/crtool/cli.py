"""Command-line front end.

Commands emit JSON to stdout, or to ``--out`` when given.  The default seed
comes from ``CRTOOL_SEED`` (0 if unset).  Exit status: 0 on success, 1 when a
verification check fails, 2 on usage errors and invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .classify import classify
from .crframe import levi_report
from .domains import KINDS, DomainModel, sample_boundary_point
from .jsonio import dumps, point_from_json, point_to_json
from .nu import NuConfig, nu_estimate
from .suite import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CRTOOL_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CRTOOL_SEED must be an integer, got {raw!r}") from None


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=None, help="second dimension (kind I only)")


def _model(args) -> DomainModel:
    n = args.n if args.kind == "I" else None
    if args.kind != "I" and args.n is not None:
        raise UsageError("--n is only meaningful for kind I")
    return DomainModel(args.kind, args.m, n)


def _point(args, model: DomainModel):
    if getattr(args, "point", None):
        with open(args.point, encoding="utf-8") as fh:
            pt = point_from_json(json.load(fh))
        if pt.model != model:
            raise UsageError(f"point file holds a {pt.model.label} point, not {model.label}")
        return pt
    return sample_boundary_point(model, args.seed, args.radius)


def _emit(doc, out: str | None) -> None:
    text = dumps(doc) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_levi(args) -> int:
    model = _model(args)
    pt = _point(args, model)
    rep = levi_report(pt)
    doc = {"model": model.to_json(), "expected": [model.expected_positive, model.leaf_dim, 0], **rep.to_json()}
    _emit(doc, args.out)
    return EXIT_OK


def cmd_nu(args) -> int:
    model = _model(args)
    pt = _point(args, model)
    cfg = NuConfig(samples=args.samples, seed=args.seed)
    rep = nu_estimate(pt, cfg, method=args.method)
    _emit({"model": model.to_json(), **rep.to_json()}, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    v = classify(args.kind, args.m, args.n if args.kind == "I" else None, args.nplus, args.transversal, args.minimal)
    _emit({"kind": args.kind, "m": args.m, "n": args.n, "n_plus": args.nplus, **v.to_json()}, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    pt = sample_boundary_point(_model(args), args.seed, args.radius)
    _emit(point_to_json(pt), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = run_suite(args.suite, args.seed, args.out)
    if not args.out:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for check in doc["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['id']:2d} {check['name']}", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def build_parser(seed: int) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crtool", description="Levi forms, foliations and nu on classical domain boundaries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("levi", help="Levi signature at a boundary point")
    _add_model_args(p)
    p.add_argument("--point", help="JSON point file (as written by `sample`)")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--radius", type=float, default=0.0, help="leaf offset norm for sampled points")
    p.add_argument("--out")
    p.set_defaults(func=cmd_levi)

    p = sub.add_parser("nu", help="the invariant nu at a boundary point")
    _add_model_args(p)
    p.add_argument("--point")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--method", choices=("auto", "search", "closed_form"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_nu)

    p = sub.add_parser("classify", help="regularity verdict for a target and n_plus")
    _add_model_args(p)
    p.add_argument("--nplus", type=int, required=True)
    p.add_argument("--transversal", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--minimal", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--suite", choices=SUITES, default="quick")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="seeded boundary point as JSON")
    _add_model_args(p)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        print(f"crtool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, KeyError) as exc:
        print(f"crtool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        # unstable ranks and failed numerical checks
        print(f"crtool: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
