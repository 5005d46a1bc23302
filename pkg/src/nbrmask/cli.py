"""Command-line pipeline: mask, assess-utility, assess-risk, converge, serve.

Every command with --seed is bit-reproducible (see the masker's RNG
contract).  Validation failures exit 1 with a single-line diagnostic on
stderr; nothing is written outside the declared output paths.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import convergence as conv
from .dataset import (Dataset, ParseError, SchemaError, load_csv,
                      schema_from_json, schema_to_json, to_csv_text, write_csv)
from .masker import (MaskedDataset, MaskingParams, ParamError, load_audit,
                     mask, params_from_json)
from .metric import WeightError, WeightSpec
from .neighbors import EpsBall, Knn
from .risk import PredicateError, RecordPredicate, presence_check, track
from .utility import ModelError, RegressionSpec, compare_pca, compare_regression


class CliError(Exception):
    """Expected failure; printed as a one-line diagnostic, exit 1."""


def _load_dataset(path: str, schema_path: str | None) -> Dataset:
    schema = None
    if schema_path:
        with open(schema_path, "r", encoding="utf-8") as fh:
            schema = schema_from_json(fh.read())
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return load_csv(fh, schema)


def _params_from_args(args: argparse.Namespace) -> MaskingParams:
    if args.params:
        with open(args.params, "r", encoding="utf-8") as fh:
            return params_from_json(fh.read())
    if (args.eps is None) == (args.knn is None):
        raise CliError("give exactly one of --eps or --knn (or --params FILE)")
    weights = WeightSpec()
    if args.weights:
        with open(args.weights, "r", encoding="utf-8") as fh:
            weights = WeightSpec(json.loads(fh.read()))
    mode = EpsBall(args.eps) if args.eps is not None else Knn(args.knn)
    return MaskingParams(mode=mode, q=args.q, weights=weights, seed=args.seed,
                         block_sampling=not args.per_dummy)


def cmd_mask(args: argparse.Namespace) -> int:
    if args.out == args.input:
        raise CliError("--out must differ from --input")
    d = _load_dataset(args.input, args.schema)
    params = _params_from_args(args)
    masked = mask(d, params, workers=args.workers)
    write_csv(masked.released, args.out)
    if args.audit:
        masked.write_audit(args.audit)
    s = masked.summary()
    print(f"released {s.total} records -> {args.out}")
    print(f"  resampled:              {s.resampled}")
    print(f"  suppressed:             {s.suppressed}")
    print(f"  passthrough (1-q skip): {s.passthrough_random}")
    print(f"  passthrough (missing):  {s.passthrough_incomplete}")
    if s.median_donor_count is not None:
        print(f"  median donor-set size:  {s.median_donor_count:g}")
    return 0


def cmd_assess_utility(args: argparse.Namespace) -> int:
    original = _load_dataset(args.original, args.schema)
    # the release must be read under the original's schema: suppression can
    # hide categories and flip inferred column types
    released = _reload_with_schema(args.released, original)
    if args.model:
        spec = RegressionSpec.from_formula(args.model)
        report = compare_regression(original, released, spec)
        print(report.to_json() if args.format == "json" else report.to_text())
    if args.pca:
        comparison = compare_pca(original, released, args.pca)
        print(comparison.to_json() if args.format == "json" else comparison.to_text())
    if not args.model and not args.pca:
        raise CliError("nothing to assess: give --model and/or --pca")
    return 0


def _reload_with_schema(path: str, original: Dataset) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return load_csv(fh, original.schema)


def cmd_assess_risk(args: argparse.Namespace) -> int:
    original = _load_dataset(args.original, args.schema)
    released = _reload_with_schema(args.released, original)
    if args.where:
        if not args.audit:
            raise CliError("--where needs --audit (fates come from masker provenance)")
        provenance = load_audit(args.audit)
        masked = MaskedDataset(released, provenance)
        pred = RecordPredicate.parse(args.where)
        report = track(original, masked, pred)
        print(report.to_json() if args.format == "json" else report.to_text())
    if args.presence:
        if "=" not in args.presence:
            raise CliError("--presence expects column=label")
        column, value = args.presence.split("=", 1)
        masked = MaskedDataset(released, [])
        report = presence_check(original, masked, column.strip(), value.strip(),
                                rarity_threshold=args.rarity_threshold)
        print(report.to_json() if args.format == "json" else report.to_text())
    if not args.where and not args.presence:
        raise CliError("nothing to assess: give --where and/or --presence")
    return 0


def _parse_generator(text: str) -> conv.Generator:
    kind, _, arg = text.partition(":")
    if kind == "bvn":
        return conv.BivariateNormal(float(arg) if arg else 0.0)
    if kind == "mixed":
        return conv.MixedNormalBinary(float(arg) if arg else 0.0)
    if kind == "discrete":
        if not arg:
            # default: strongly dependent 3x3 table
            table = ((0.25, 0.04, 0.01), (0.04, 0.25, 0.04), (0.01, 0.04, 0.32))
        else:
            table = tuple(tuple(float(v) for v in row.split(","))
                          for row in arg.split(";"))
        return conv.DiscretePair(table)
    raise CliError(f"unknown generator {text!r} (use bvn:RHO, mixed:RHO, "
                   f"or discrete[:p11,p12;p21,p22])")


def cmd_converge(args: argparse.Namespace) -> int:
    if not args.gen:
        raise CliError("--gen is required (e.g. --gen bvn:0.5)")
    spec = conv.SyntheticSpec(_parse_generator(args.gen), n=args.n, seed=args.seed)
    if (args.eps_quantiles is None) == (args.eps_list is None):
        raise CliError("give exactly one of --eps-quantiles or --eps-list")
    kwargs = {}
    if args.eps_quantiles:
        kwargs["eps_quantiles"] = [float(v) for v in args.eps_quantiles.split(",")]
    else:
        kwargs["eps_list"] = [float(v) for v in args.eps_list.split(",")]
    if args.weights:
        with open(args.weights, "r", encoding="utf-8") as fh:
            kwargs["weights"] = WeightSpec(json.loads(fh.read()))
    rows = conv.run_convergence(spec, **kwargs)
    text = conv.rows_to_json(rows) if args.format == "json" else conv.rows_to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows -> {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(data_dir=args.data, readonly=args.readonly,
                     row_cap=args.row_cap, audit_enabled=args.enable_audit)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn turns startup failures into SystemExit
        if exc.code:
            print(f"error: server failed to start on {args.host}:{args.port}",
                  file=sys.stderr)
            return 1
    except OSError as exc:
        raise CliError(f"cannot bind {args.host}:{args.port}: {exc}") from None
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbrmask",
        description="neighborhood-resampling disclosure limitation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="mask a CSV and write the released version")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", help="schema JSON file (inferred when omitted)")
    p.add_argument("--params", help="MaskingParams JSON file (overrides flags)")
    p.add_argument("--eps", type=float, help="neighborhood radius")
    p.add_argument("--knn", type=int, help="k-nearest-neighbor mode")
    p.add_argument("--q", "--modprop", dest="q", type=float, default=1.0,
                   help="modification proportion in (0,1]")
    p.add_argument("--weights", help="weight JSON file {column: factor}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-dummy", action="store_true",
                   help="resample each dummy column independently "
                        "(literal mode; may release invalid category mixes)")
    p.add_argument("--audit", help="write JSON-lines provenance here (DSO-only)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("assess-utility", help="compare analyses on original vs released")
    p.add_argument("--original", required=True)
    p.add_argument("--released", required=True)
    p.add_argument("--schema")
    p.add_argument("--model", help="regression formula, e.g. wage~age+sex+wkswrkd")
    p.add_argument("--pca", type=int, help="compare this many principal components")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_assess_utility)

    p = sub.add_parser("assess-risk", help="track rare records / presence disclosure")
    p.add_argument("--original", required=True)
    p.add_argument("--released", required=True)
    p.add_argument("--schema")
    p.add_argument("--audit", help="audit file written by mask --audit")
    p.add_argument("--where", help='rare-record predicate, e.g. "sex=2,phd=1,age<31"')
    p.add_argument("--presence", help="presence-disclosure check, column=label")
    p.add_argument("--rarity-threshold", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_assess_risk)

    p = sub.add_parser("converge", help="shrinking-neighborhood Monte Carlo table")
    p.add_argument("--gen", help="bvn:RHO | mixed:RHO | discrete[:TABLE]")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-quantiles", help="comma-separated pairwise-distance quantiles")
    p.add_argument("--eps-list", help="comma-separated absolute radii")
    p.add_argument("--weights")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("serve", help="HTTP API for the tuning-explorer UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data", help="directory for session snapshots (optional)")
    p.add_argument("--readonly", action="store_true",
                   help="reject mutating requests (405)")
    p.add_argument("--row-cap", type=int, default=100_000,
                   help="refuse synchronous runs beyond this row count")
    p.add_argument("--enable-audit", action="store_true",
                   help="expose per-run provenance over HTTP (off by default)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ParamError, ParseError, SchemaError, WeightError,
            ModelError, PredicateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
