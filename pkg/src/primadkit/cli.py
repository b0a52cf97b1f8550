"""Command line interface: annotate | validate | diff | scan | evaluate.

Exit codes: 0 success, 1 validation problems, 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from .annotator import annotate_run
from .errors import PrimadError
from .evaluation import check_measure
from .experiment import ExperimentSpec, run_experiment
from .measures import MeasureConfig
from .metadata import read_metadata, validate
from .primad import analyze_directory, diff

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2


def _err(msg: str) -> None:
    print(f"primadkit: {msg}", file=sys.stderr)


def _measure(value: str) -> str:
    try:
        return check_measure(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _persistence(value: str) -> float:
    p = float(value)
    if not 0 < p < 1:
        raise argparse.ArgumentTypeError("--rbo-p must lie strictly between 0 and 1")
    return p


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def cmd_annotate(args) -> int:
    report = annotate_run(args.run, args.template, args.output, force=args.force, repo_path=args.repo)
    print(report.format(), file=sys.stderr)
    return EXIT_OK if report.is_valid else EXIT_INVALID


def cmd_validate(args) -> int:
    record = read_metadata(args.path)
    if record is None:
        _err(f"{args.path}: no metadata header or sidecar file found")
        return EXIT_ERROR
    report = validate(record)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.format())
    return EXIT_OK if report.is_valid else EXIT_INVALID


def _load_required(path):
    record = read_metadata(path)
    if record is None:
        raise PrimadError(f"{path}: no metadata header or sidecar file found")
    return record


def cmd_diff(args) -> int:
    d = diff(_load_required(args.a), _load_required(args.b))
    if args.json:
        print(json.dumps(d.to_dict(), indent=2))
    else:
        print(d.signature)
        for c in d.changed_components():
            for path in d.detail[c]:
                print(f"  {c} {path}")
    return EXIT_OK


def cmd_scan(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        groups = analyze_directory(args.reference, args.dir, recursive=args.recursive)
    for w in caught:
        _err(f"warning: {w.message}")
    if args.json:
        print(json.dumps({sig: [str(p) for p in paths] for sig, paths in groups.items()}, indent=2))
    else:
        for sig, paths in groups.items():
            print(sig)
            for p in paths:
                print(f"  {p}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = MeasureConfig(
        rbo_p=args.rbo_p,
        ktu_depth=args.ktu_depth or args.depth,
        ttest_two_sided=not args.one_sided,
        measure=args.measure,
        depth=args.depth,
    )
    spec = ExperimentSpec(
        qrels_orig=args.qrels,
        qrels_rep=args.qrels_rep,
        orig_baseline=args.orig_base,
        orig_advanced=args.orig_adv,
        rep_baseline=args.rep_base,
        rep_advanced=args.rep_adv,
        signature=args.signature,
        config=config,
    )
    report = run_experiment(spec)
    if args.json == "-":
        sys.stdout.write(report.to_json())
        return EXIT_OK
    sys.stdout.write(report.format_table())
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primadkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log probe and merge details")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="write a metadata header into a run file")
    p.add_argument("run")
    p.add_argument("--template", help="hand-written metadata YAML")
    p.add_argument("--output", required=True, help="annotated run destination")
    p.add_argument("--force", action="store_true", help="allow --output to be the input run")
    p.add_argument("--repo", help="directory whose git checkout describes the implementation")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("validate", help="check metadata completeness")
    p.add_argument("path", help="annotated run, run with sidecar, or YAML file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("diff", help="PRIMAD signature between two annotated runs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("scan", help="group a directory of runs by signature against a reference")
    p.add_argument("reference")
    p.add_argument("dir")
    p.add_argument("--recursive", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("evaluate", help="reproducibility measures for original vs reproduced runs")
    p.add_argument("--orig-base", help="original baseline run")
    p.add_argument("--orig-adv", help="original advanced run")
    p.add_argument("--rep-base", help="reproduced baseline run")
    p.add_argument("--rep-adv", help="reproduced advanced run")
    p.add_argument("--qrels", required=True, help="qrels of the original experiment")
    p.add_argument("--qrels-rep", help="qrels of the reproduction when the Data changed")
    p.add_argument("--signature", help="expected PRIMAD signature (metadata takes precedence)")
    p.add_argument("--measure", type=_measure, default="map", help="map, P_<k>, ndcg or ndcg_cut_<k>")
    p.add_argument("--rbo-p", type=_persistence, default=0.8)
    p.add_argument("--depth", type=_positive, default=1000)
    p.add_argument("--ktu-depth", type=_positive, default=None, help="defaults to --depth")
    p.add_argument("--one-sided", action="store_true", help="one-sided paired t-test")
    p.add_argument("--json", nargs="?", const="-", metavar="PATH", help="write JSON (stdout without PATH)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (PrimadError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
