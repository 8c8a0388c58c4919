"""Command line front end.

JSON results go to stdout, progress logging to stderr. Exit codes for
detect and verify-bug: 0 means clean/effective, 1 means buggy or
ineffective, 2 means the command itself failed.

Set SPRITECHECK_EMBEDDER to an external command (PNG on stdin, vector
on stdout) to swap the embedding model behind the ESIM metric.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bugs import get_bug, list_bugs, make_hook, verify_visibility
from .bundle import load_bundle, save_bundle
from .detector import calibrate as calibrate_thresholds
from .detector import (Threshold, baseline_compare, judge_pair, judge_run,
                       judge_snapshot)
from .errors import IneffectiveBugError, SpriteCheckError
from .metrics import (DEFAULT_PROVIDER, MetricKind, MetricScore,
                      make_subprocess_provider)
from .simulator import GameConfig, make_asset_pack, run_test_case
from .stats import (BASELINE_METRICS, EvaluationTable, ExperimentConfig,
                    emit_report, evaluate_experiment, score_run)

log = logging.getLogger("spritecheck")

ALL_METRICS = ("PCT", "MSE", "SSIM", "ESIM")


def _provider():
    cmd = os.environ.get("SPRITECHECK_EMBEDDER")
    if cmd:
        log.info("using external embedder: %s", cmd)
        return make_subprocess_provider(cmd)
    return DEFAULT_PROVIDER


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_run(path: str):
    """A run is either one bundle directory or a directory of them."""
    p = Path(path)
    if (p / "manifest.json").exists():
        return [load_bundle(p)]
    subs = sorted(d for d in p.iterdir() if d.is_dir() and (d / "manifest.json").exists())
    if not subs:
        raise SpriteCheckError(f"no snapshot bundles under {path}")
    return [load_bundle(d) for d in subs]


def _baseline_scores(oracle_run, test_run, metric_names) -> list[MetricScore]:
    shots = [b.screenshot for b in test_run]
    oracle_shots = [b.screenshot for b in oracle_run]
    out: list[MetricScore] = []
    for name in metric_names:
        kind = MetricKind.from_name(name)
        out.extend(baseline_compare(oracle_shots, shots, kind))
    return out


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    hook = make_hook(get_bug(args.bug)) if args.bug else None
    cfg = GameConfig(canvas_w=args.width, canvas_h=args.height, seed=args.seed,
                     snapshot_count=args.snapshots, asset_pack=make_asset_pack())
    bundles = run_test_case(cfg, hook=hook)
    out = Path(args.out)
    dirs = []
    for bundle in bundles:
        d = out / f"snap-{bundle.snapshot_index:03d}"
        save_bundle(bundle, d)
        dirs.append(str(d))
    _emit({
        "run_id": bundles[0].run_id,
        "snapshots": len(bundles),
        "ticks": [b.snapshot_tick for b in bundles],
        "bug": args.bug,
        "out": dirs,
    })
    return 0


def _metric_names(args, baseline: bool) -> tuple[str, ...]:
    names = tuple(args.metrics) if args.metrics else ALL_METRICS
    if baseline:
        dropped = [n for n in names if n not in BASELINE_METRICS]
        if dropped and args.metrics:
            raise SpriteCheckError(
                f"baseline mode supports {', '.join(BASELINE_METRICS)} only")
        names = tuple(n for n in names if n in BASELINE_METRICS)
    return names


def _cmd_calibrate(args) -> int:
    if args.baseline and not args.oracle_run:
        raise SpriteCheckError("--baseline requires --oracle-run")
    names = _metric_names(args, args.baseline)
    provider = _provider()
    oracle_run = _load_run(args.oracle_run) if args.baseline else None

    clean_runs = []
    for i, run_dir in enumerate(args.runs):
        log.info("scoring clean run %d/%d: %s", i + 1, len(args.runs), run_dir)
        run = _load_run(run_dir)
        if args.baseline:
            clean_runs.append(_baseline_scores(oracle_run, run, names))
        else:
            clean_runs.append(score_run(run, names, provider))

    thresholds = {}
    for name in names:
        thr = calibrate_thresholds(clean_runs, MetricKind.from_name(name))
        thresholds[name] = {"value": thr.value, "runs": thr.runs, "pairs": thr.pairs}
    doc = {
        "approach": "baseline" if args.baseline else "object",
        "thresholds": thresholds,
        "runs": list(args.runs),
        "embedder": os.environ.get("SPRITECHECK_EMBEDDER") or DEFAULT_PROVIDER.name,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        log.info("wrote %s", args.out)
    _emit(doc)
    return 0


def _cmd_detect(args) -> int:
    if args.baseline and not args.oracle_run:
        raise SpriteCheckError("--baseline requires --oracle-run")
    thresholds_doc = json.loads(Path(args.thresholds).read_text())
    if thresholds_doc.get("approach", "object") != ("baseline" if args.baseline else "object"):
        raise SpriteCheckError("thresholds file was calibrated for the other approach")
    bundles = _load_run(args.bundle)
    names = args.metrics or tuple(thresholds_doc["thresholds"])

    if args.baseline:
        scores = _baseline_scores(_load_run(args.oracle_run), bundles, names)
    else:
        scores = score_run(bundles, names, _provider())

    result = {"bundle": args.bundle, "snapshots": len(bundles),
              "approach": "baseline" if args.baseline else "object", "metrics": {}}
    buggy = False
    for name in names:
        if name not in thresholds_doc["thresholds"]:
            raise SpriteCheckError(f"thresholds file has no entry for {name}")
        kind = MetricKind.from_name(name)
        thr = Threshold(kind=kind,
                        value=float(thresholds_doc["thresholds"][name]["value"]))
        per_snapshot: dict[int | None, list] = {}
        for s in scores:
            if s.kind is kind:
                per_snapshot.setdefault(s.snapshot_index, []).append(judge_pair(s, thr))
        if not per_snapshot:
            continue
        verdict = judge_run([judge_snapshot(v)
                             for _, v in sorted(per_snapshot.items())])
        buggy = buggy or verdict.buggy
        result["metrics"][name] = {
            "threshold": thr.value,
            "worst_score": verdict.worst_score,
            "buggy": verdict.buggy,
            "offending_nodes": verdict.offending,
        }
    result["buggy"] = buggy
    _emit(result)
    return 1 if buggy else 0


def _cmd_evaluate(args) -> int:
    cfg = ExperimentConfig(
        canvas_w=args.width, canvas_h=args.height, base_seed=args.seed,
        reps=args.reps, clean_runs=args.clean_runs,
        snapshot_count=args.snapshots, metrics=tuple(args.metrics),
        bug_keys=tuple(args.bugs) if args.bugs else None, jobs=args.jobs)
    provider = None
    if os.environ.get("SPRITECHECK_EMBEDDER"):
        provider = _provider()
    table = evaluate_experiment(cfg, provider=provider)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.json").write_text(table.to_json())
        for fmt in ("json", "csv", "html"):
            (out / f"report.{fmt}").write_text(emit_report(table, fmt))
        log.info("wrote table and reports under %s", out)
    _emit(json.loads(emit_report(table, "json")))
    return 0


def _cmd_report(args) -> int:
    table = EvaluationTable.from_json(Path(args.table).read_text())
    text = emit_report(table, args.format)
    if args.out:
        Path(args.out).write_text(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_list_bugs(_args) -> int:
    _emit([{
        "key": s.key,
        "type": s.bug_type,
        "targets": list(s.targets),
        "mechanism": s.mechanism,
        "description": s.description,
    } for s in list_bugs()])
    return 0


def _cmd_verify_bug(args) -> int:
    specs = list_bugs() if args.bug == "all" else [get_bug(args.bug)]
    cfg = GameConfig(canvas_w=args.width, canvas_h=args.height, seed=args.seed,
                     snapshot_count=args.snapshots, asset_pack=make_asset_pack())
    bundles = run_test_case(cfg)
    report = {}
    failed = False
    for spec in specs:
        try:
            report[spec.key] = verify_visibility(spec, bundles=bundles)
        except IneffectiveBugError as exc:
            report[spec.key] = 0
            failed = True
            log.error("%s", exc)
    _emit({"affected_snapshots": report, "all_effective": not failed})
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# argument wiring

def _add_canvas_args(p, seed=20220531, width=1280, height=720, snapshots=10):
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--width", type=int, default=width)
    p.add_argument("--height", type=int, default=height)
    p.add_argument("--snapshots", type=int, default=snapshots)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spritecheck",
        description="Detect visual bugs in sprite scenes by checking "
                    "screenshots against their scene documents.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="play a scripted episode and save bundles")
    _add_canvas_args(p)
    p.add_argument("--bug", default=None, help="inject a catalogued bug")
    p.add_argument("--out", required=True, help="directory for the bundles")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("calibrate", help="derive pass thresholds from clean runs")
    p.add_argument("--runs", nargs="+", required=True,
                   help="one or more saved clean-run directories")
    p.add_argument("--metrics", nargs="+", default=None)
    p.add_argument("--baseline", action="store_true",
                   help="calibrate whole-screenshot comparison instead")
    p.add_argument("--oracle-run", default=None,
                   help="reference run directory for --baseline")
    p.add_argument("--out", default=None, help="write thresholds JSON here")
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("detect", help="judge one captured run against thresholds")
    p.add_argument("--bundle", required=True,
                   help="bundle directory, or a run directory of snap-*/ bundles")
    p.add_argument("--thresholds", required=True)
    p.add_argument("--metrics", nargs="+", default=None)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--oracle-run", default=None)
    p.set_defaults(fn=_cmd_detect)

    p = sub.add_parser("evaluate", help="full accuracy experiment over the bug catalogue")
    _add_canvas_args(p, width=640, height=360, seed=96217)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--clean-runs", type=int, default=10)
    p.add_argument("--metrics", nargs="+", default=list(ALL_METRICS))
    p.add_argument("--bugs", nargs="+", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None,
                   help="directory for table.json and report.{json,csv,html}")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("report", help="format a saved evaluation table")
    p.add_argument("--table", required=True)
    p.add_argument("--format", choices=("json", "csv", "html"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("list-bugs", help="print the bug catalogue")
    p.set_defaults(fn=_cmd_list_bugs)

    p = sub.add_parser("verify-bug", help="check a bug changes pixels in an episode")
    _add_canvas_args(p, width=640, height=360)
    p.add_argument("--bug", required=True, help="bug key, or 'all'")
    p.set_defaults(fn=_cmd_verify_bug)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (SpriteCheckError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
