"""Experiment driver and the statistics behind the evaluation claims.

Runs seeded game episodes with and without injected bugs, scores every
run with the object-pair approach and with a whole-screenshot baseline,
and summarizes detection accuracy alongside rank statistics
(Mann-Whitney U and Cliff's delta) comparing clean and buggy score
distributions.

A run's score for a metric is its worst pair score anywhere in the run,
matching how the detector escalates: one bad pair makes a bad run.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bugs import BugSpec, get_bug, list_bugs, make_hook
from .compositor import render_scene
from .detector import Threshold, _fails, baseline_compare
from .errors import DetectorError, ImageTooSmallError
from .metrics import (DEFAULT_PROVIDER, EmbeddingProvider, MetricKind,
                      MetricScore, SsimParams, score)
from .oracle import pairs_from_plan, plan_pairs
from .rng import SplitMix64
from .simulator import GameConfig, make_asset_pack, run_test_case

log = logging.getLogger(__name__)

BASELINE_METRICS = ("PCT", "MSE", "SSIM")


# ---------------------------------------------------------------------------
# plain statistics

def accuracy(true_positives: int, false_negatives: int) -> float:
    """Detection accuracy: flagged buggy runs over all buggy runs."""
    total = true_positives + false_negatives
    if total <= 0:
        raise ValueError("accuracy needs at least one buggy run")
    return true_positives / total


def format_percent(fraction: float) -> str:
    """One decimal, halves rounded away from zero: 0.4455 -> '44.6%'."""
    tenths = math.floor(abs(fraction) * 1000.0 + 0.5)
    sign = "-" if fraction < 0 else ""
    return f"{sign}{tenths / 10:.1f}%"


def _midranks(pool: np.ndarray) -> tuple[np.ndarray, float]:
    order = np.argsort(pool, kind="mergesort")
    ranks = np.empty(len(pool), dtype=np.float64)
    vals = pool[order]
    tie_term = 0.0
    i = 0
    while i < len(pool):
        j = i
        while j + 1 < len(pool) and vals[j + 1] == vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    return ranks, tie_term


@dataclass(frozen=True)
class MannWhitneyResult:
    u_x: float
    u_y: float
    z: float
    p_value: float
    n_x: int
    n_y: int


def mann_whitney_u(xs, ys) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U via the normal approximation.

    Midranks for ties, tie-corrected variance, 0.5 continuity
    correction. u_x counts pairs where the first sample wins.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    pool = np.concatenate([x, y])
    ranks, tie_term = _midranks(pool)
    r_x = float(ranks[:x.size].sum())
    u_x = r_x - x.size * (x.size + 1) / 2.0
    u_y = float(x.size) * y.size - u_x
    n = x.size + y.size
    var = x.size * y.size / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return MannWhitneyResult(u_x, u_y, 0.0, 1.0, x.size, y.size)
    diff = u_x - x.size * y.size / 2.0
    z = max(0.0, abs(diff) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return MannWhitneyResult(u_x, u_y, z if diff >= 0 else -z, min(1.0, p),
                             x.size, y.size)


@dataclass(frozen=True)
class EffectSize:
    delta: float
    label: str


def effect_label(delta: float) -> str:
    a = abs(delta)
    if a <= 0.147:
        return "negligible"
    if a <= 0.33:
        return "small"
    if a <= 0.474:
        return "medium"
    return "large"


def cliffs_delta(xs, ys) -> EffectSize:
    """Cliff's delta: P(x > y) - P(x < y) over all cross pairs."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    gt = 0
    lt = 0
    step = max(1, 4_000_000 // max(1, y.size))
    for i in range(0, x.size, step):
        diff = x[i:i + step, None] - y[None, :]
        gt += int((diff > 0).sum())
        lt += int((diff < 0).sum())
    d = (gt - lt) / (x.size * y.size)
    return EffectSize(delta=d, label=effect_label(d))


# ---------------------------------------------------------------------------
# experiment plumbing

@dataclass(frozen=True)
class ExperimentConfig:
    canvas_w: int = 640
    canvas_h: int = 360
    base_seed: int = 96217
    reps: int = 10
    clean_runs: int = 10
    snapshot_count: int = 10
    metrics: tuple[str, ...] = ("PCT", "MSE", "SSIM", "ESIM")
    bug_keys: tuple[str, ...] | None = None  # None means the full catalogue
    jobs: int = 1


@dataclass
class RunScore:
    """Worst-anywhere scores for one episode, both approaches."""

    seed: int
    bug_key: str | None
    bug_type: str | None
    object_scores: dict[str, float] = field(default_factory=dict)
    baseline_scores: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class StatTest:
    metric: str
    approach: str
    u_statistic: float
    p_value: float
    delta: float
    label: str
    n_clean: int
    n_buggy: int


def _worse(kind: MetricKind, current: float | None, value: float) -> float:
    if current is None:
        return value
    if kind.higher_is_similar:
        return min(current, value)
    return max(current, value)


def _score_pairs(pairs, kinds, ssim_params, provider) -> dict[str, float]:
    worst: dict[str, float] = {}
    for pair in pairs:
        if pair.skipped:
            continue
        for kind in kinds:
            try:
                s = score(pair, kind, ssim_params=ssim_params, provider=provider)
            except ImageTooSmallError:
                continue  # crop thinner than the SSIM window: pair has no SSIM
            worst[kind.value] = _worse(kind, worst.get(kind.value), s.value)
    return worst


def score_run(bundles, metric_names=("PCT", "MSE", "SSIM", "ESIM"),
              provider: EmbeddingProvider | None = None,
              ssim_params: SsimParams = SsimParams()) -> list[MetricScore]:
    """Every pair score in a run, tagged with its snapshot index.

    Skipped pairs contribute nothing; a crop thinner than the SSIM
    window contributes every metric except SSIM.
    """
    from dataclasses import replace as _replace

    from .oracle import build_pairs

    kinds = [MetricKind.from_name(m) for m in metric_names]
    out: list[MetricScore] = []
    for bundle in bundles:
        for pair in build_pairs(bundle):
            if pair.skipped:
                continue
            for kind in kinds:
                try:
                    s = score(pair, kind, ssim_params=ssim_params, provider=provider)
                except ImageTooSmallError:
                    continue
                out.append(_replace(s, snapshot_index=bundle.snapshot_index))
    return out


def _baseline_worst(oracle_shots, test_shots, kinds, ssim_params) -> dict[str, float]:
    out: dict[str, float] = {}
    for kind in kinds:
        if kind.value not in BASELINE_METRICS:
            continue
        scores = baseline_compare(oracle_shots, test_shots, kind, ssim_params)
        agg = None
        for s in scores:
            agg = _worse(kind, agg, s.value)
        if agg is not None:
            out[kind.value] = agg
    return out


def _episode_scores(seed: int, cfg_tuple, metric_names, bug_keys, oracle_shots):
    """Worker: one seeded episode, scored clean and under every bug."""
    w, h, snapshot_count = cfg_tuple
    kinds = [MetricKind.from_name(m) for m in metric_names]
    ssim_params = SsimParams()
    provider = DEFAULT_PROVIDER
    pack = make_asset_pack()
    cfg = GameConfig(canvas_w=w, canvas_h=h, seed=seed,
                     snapshot_count=snapshot_count, asset_pack=pack)
    bundles = run_test_case(cfg)

    specs = [get_bug(k) for k in bug_keys]
    hooks = {s.key: make_hook(s) for s in specs}

    clean_object: dict[str, float] = {}
    bug_object: dict[str, dict[str, float]] = {s.key: {} for s in specs}
    bug_shots_worst: dict[str, dict[str, float]] = {s.key: {} for s in specs}
    clean_shots = [b.screenshot for b in bundles]

    for bundle in bundles:
        plan = plan_pairs(bundle.cor, bundle.assets, bundle.canvas_w, bundle.canvas_h)
        for name, value in _score_pairs(pairs_from_plan(plan, bundle.screenshot),
                                        kinds, ssim_params, provider).items():
            kind = MetricKind.from_name(name)
            clean_object[name] = _worse(kind, clean_object.get(name), value)
        for spec in specs:
            hooked = render_scene(bundle.cor, bundle.assets, bundle.canvas_w,
                                  bundle.canvas_h, hook=hooks[spec.key],
                                  background=bundle.cor.background)
            for name, value in _score_pairs(pairs_from_plan(plan, hooked),
                                            kinds, ssim_params, provider).items():
                kind = MetricKind.from_name(name)
                bug_object[spec.key][name] = _worse(
                    kind, bug_object[spec.key].get(name), value)
            if oracle_shots is not None:
                idx = bundle.snapshot_index
                for name, value in _baseline_worst(
                        [oracle_shots[idx]], [hooked], kinds, ssim_params).items():
                    kind = MetricKind.from_name(name)
                    bug_shots_worst[spec.key][name] = _worse(
                        kind, bug_shots_worst[spec.key].get(name), value)

    clean_baseline: dict[str, float] = {}
    if oracle_shots is not None:
        clean_baseline = _baseline_worst(oracle_shots, clean_shots, kinds, ssim_params)

    return {
        "seed": seed,
        "clean_object": clean_object,
        "clean_baseline": clean_baseline,
        "bug_object": bug_object,
        "bug_baseline": bug_shots_worst,
    }


def _derive_seed(rng: SplitMix64) -> int:
    return rng.next_u64() >> 33


@dataclass
class EvaluationTable:
    """Everything the experiment measured, ready to summarize or persist."""

    config: ExperimentConfig
    thresholds: dict[str, dict[str, float]]  # approach -> metric -> boundary
    runs: list[RunScore]

    def __eq__(self, other):
        if not isinstance(other, EvaluationTable):
            return NotImplemented
        return (self.config == other.config
                and self.thresholds == other.thresholds
                and self.runs == other.runs)

    # -- detection ----------------------------------------------------------

    def _flagged(self, run: RunScore, approach: str, metric: str) -> bool | None:
        scores = run.object_scores if approach == "object" else run.baseline_scores
        if metric not in scores or metric not in self.thresholds.get(approach, {}):
            return None
        thr = Threshold(kind=MetricKind.from_name(metric),
                        value=self.thresholds[approach][metric])
        return _fails(scores[metric], thr)

    def accuracy_table(self, approach: str) -> dict[str, dict[str, float]]:
        """metric -> bug type -> detection accuracy, plus an 'overall' row."""
        metrics = (self.config.metrics if approach == "object"
                   else tuple(m for m in self.config.metrics if m in BASELINE_METRICS))
        out: dict[str, dict[str, float]] = {}
        for metric in metrics:
            per_type: dict[str, list[bool]] = {}
            for run in self.runs:
                if run.bug_key is None:
                    continue
                hit = self._flagged(run, approach, metric)
                if hit is None:
                    continue
                per_type.setdefault(run.bug_type, []).append(hit)
            if not per_type:
                continue
            row = {t: accuracy(sum(v), len(v) - sum(v)) for t, v in sorted(per_type.items())}
            everything = [h for v in per_type.values() for h in v]
            row["overall"] = accuracy(sum(everything), len(everything) - sum(everything))
            out[metric] = row
        return out

    def false_positive_counts(self, approach: str) -> dict[str, int]:
        out: dict[str, int] = {}
        for metric in self.config.metrics:
            hits = [self._flagged(r, approach, metric)
                    for r in self.runs if r.bug_key is None]
            hits = [h for h in hits if h is not None]
            if hits:
                out[metric] = sum(hits)
        return out

    # -- rank statistics ------------------------------------------------------

    def _populations(self, approach: str, metric: str) -> tuple[list[float], list[float]]:
        clean, buggy = [], []
        for run in self.runs:
            scores = run.object_scores if approach == "object" else run.baseline_scores
            if metric not in scores:
                continue
            (clean if run.bug_key is None else buggy).append(scores[metric])
        return clean, buggy

    def stat_tests(self) -> list[StatTest]:
        tests: list[StatTest] = []
        for approach in ("object", "baseline"):
            for metric in self.config.metrics:
                if approach == "baseline" and metric not in BASELINE_METRICS:
                    continue
                clean, buggy = self._populations(approach, metric)
                if not clean or not buggy:
                    continue
                mw = mann_whitney_u(clean, buggy)
                eff = cliffs_delta(clean, buggy)
                tests.append(StatTest(
                    metric=metric, approach=approach, u_statistic=mw.u_x,
                    p_value=mw.p_value, delta=eff.delta, label=eff.label,
                    n_clean=len(clean), n_buggy=len(buggy)))
        return tests

    # -- persistence ----------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.config),
            "thresholds": self.thresholds,
            "runs": [asdict(r) for r in self.runs],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "EvaluationTable":
        doc = json.loads(text)
        raw_cfg = dict(doc["config"])
        raw_cfg["metrics"] = tuple(raw_cfg.get("metrics", ()))
        if raw_cfg.get("bug_keys") is not None:
            raw_cfg["bug_keys"] = tuple(raw_cfg["bug_keys"])
        config = ExperimentConfig(**raw_cfg)
        runs = [RunScore(**r) for r in doc["runs"]]
        return EvaluationTable(config=config, thresholds=doc["thresholds"], runs=runs)


def evaluate_experiment(config: ExperimentConfig,
                        provider: EmbeddingProvider | None = None) -> EvaluationTable:
    """Run the full evaluation: calibrate on clean episodes, then sweep
    every catalogued bug over fresh episodes, scoring both approaches.

    Episode seeds derive from base_seed, so results are reproducible.
    With jobs > 1 episodes are scored in parallel processes; that path
    supports the built-in embedding provider only.
    """
    if provider is not None and config.jobs > 1:
        raise ValueError("custom embedding providers require jobs=1")
    if config.reps < 1 or config.clean_runs < 1:
        raise ValueError("reps and clean_runs must be positive")
    bug_keys = tuple(config.bug_keys) if config.bug_keys is not None \
        else tuple(s.key for s in list_bugs())
    bug_types = {s.key: s.bug_type for s in list_bugs()}
    kinds = [MetricKind.from_name(m) for m in config.metrics]

    rng = SplitMix64(config.base_seed)
    oracle_seed = _derive_seed(rng)
    clean_seeds = [_derive_seed(rng) for _ in range(config.clean_runs)]
    rep_seeds = [_derive_seed(rng) for _ in range(config.reps)]

    pack = make_asset_pack()
    log.info("reference episode (seed %d)", oracle_seed)
    oracle_bundles = run_test_case(GameConfig(
        canvas_w=config.canvas_w, canvas_h=config.canvas_h, seed=oracle_seed,
        snapshot_count=config.snapshot_count, asset_pack=pack))
    oracle_shots = [b.screenshot for b in oracle_bundles]

    cfg_tuple = (config.canvas_w, config.canvas_h, config.snapshot_count)
    jobs = []
    for seed in clean_seeds:
        jobs.append((seed, cfg_tuple, tuple(config.metrics), (), oracle_shots))
    for seed in rep_seeds:
        jobs.append((seed, cfg_tuple, tuple(config.metrics), bug_keys, oracle_shots))

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_episode_scores, *zip(*jobs)))
    else:
        results = []
        for i, args in enumerate(jobs):
            log.info("episode %d/%d (seed %d)", i + 1, len(jobs), args[0])
            res = _episode_scores(*args)
            if provider is not None:
                res = _rescore_esim(args, res, provider, kinds)
            results.append(res)

    calib = results[:len(clean_seeds)]
    clean_score_runs = [
        [MetricScore(node_id="run", kind=MetricKind.from_name(m), value=v)
         for m, v in r["clean_object"].items()]
        for r in calib
    ]
    thresholds: dict[str, dict[str, float]] = {"object": {}, "baseline": {}}
    for kind in kinds:
        values = [s.value for run in clean_score_runs for s in run if s.kind is kind]
        if not values:
            raise DetectorError(f"no clean {kind.value} scores to calibrate on")
        thresholds["object"][kind.value] = \
            max(values) if kind is MetricKind.MSE else min(values)
        base_vals = [r["clean_baseline"].get(kind.value) for r in calib]
        base_vals = [v for v in base_vals if v is not None]
        if base_vals:
            thresholds["baseline"][kind.value] = \
                max(base_vals) if kind is MetricKind.MSE else min(base_vals)

    runs: list[RunScore] = []
    for res in results:
        runs.append(RunScore(seed=res["seed"], bug_key=None, bug_type=None,
                             object_scores=dict(res["clean_object"]),
                             baseline_scores=dict(res["clean_baseline"])))
        for key in sorted(res["bug_object"], key=bug_keys.index):
            runs.append(RunScore(seed=res["seed"], bug_key=key,
                                 bug_type=bug_types[key],
                                 object_scores=dict(res["bug_object"][key]),
                                 baseline_scores=dict(res["bug_baseline"][key])))
    return EvaluationTable(config=config, thresholds=thresholds, runs=runs)


def _rescore_esim(args, res, provider, kinds):
    """Recompute ESIM scores with a custom provider; other metrics are
    provider-independent so the worker results stand."""
    if MetricKind.ESIM not in kinds:
        return res
    seed, cfg_tuple, metric_names, bug_keys, _ = args
    redone = _episode_scores_with_provider(seed, cfg_tuple, ("ESIM",), bug_keys,
                                           provider)
    res = dict(res)
    res["clean_object"] = {**res["clean_object"], **redone["clean_object"]}
    res["bug_object"] = {
        k: {**res["bug_object"][k], **redone["bug_object"].get(k, {})}
        for k in res["bug_object"]
    }
    return res


def _episode_scores_with_provider(seed, cfg_tuple, metric_names, bug_keys, provider):
    w, h, snapshot_count = cfg_tuple
    kinds = [MetricKind.from_name(m) for m in metric_names]
    ssim_params = SsimParams()
    pack = make_asset_pack()
    cfg = GameConfig(canvas_w=w, canvas_h=h, seed=seed,
                     snapshot_count=snapshot_count, asset_pack=pack)
    bundles = run_test_case(cfg)
    specs = [get_bug(k) for k in bug_keys]
    hooks = {s.key: make_hook(s) for s in specs}
    clean_object: dict[str, float] = {}
    bug_object: dict[str, dict[str, float]] = {s.key: {} for s in specs}
    for bundle in bundles:
        plan = plan_pairs(bundle.cor, bundle.assets, bundle.canvas_w, bundle.canvas_h)
        for name, value in _score_pairs(pairs_from_plan(plan, bundle.screenshot),
                                        kinds, ssim_params, provider).items():
            kind = MetricKind.from_name(name)
            clean_object[name] = _worse(kind, clean_object.get(name), value)
        for spec in specs:
            hooked = render_scene(bundle.cor, bundle.assets, bundle.canvas_w,
                                  bundle.canvas_h, hook=hooks[spec.key],
                                  background=bundle.cor.background)
            for name, value in _score_pairs(pairs_from_plan(plan, hooked),
                                            kinds, ssim_params, provider).items():
                kind = MetricKind.from_name(name)
                bug_object[spec.key][name] = _worse(
                    kind, bug_object[spec.key].get(name), value)
    return {"clean_object": clean_object, "bug_object": bug_object}


# ---------------------------------------------------------------------------
# reports

def _five_number(values) -> dict:
    qs = np.percentile(np.asarray(values, dtype=np.float64), [0, 25, 50, 75, 100])
    return {"min": qs[0], "q1": qs[1], "median": qs[2], "q3": qs[3], "max": qs[4]}


def _distributions(table: EvaluationTable) -> dict:
    out: dict[str, dict] = {}
    for approach in ("object", "baseline"):
        per_metric: dict[str, dict] = {}
        for metric in table.config.metrics:
            if approach == "baseline" and metric not in BASELINE_METRICS:
                continue
            clean, buggy = table._populations(approach, metric)
            entry = {}
            if clean:
                entry["clean"] = _five_number(clean)
            if buggy:
                entry["buggy"] = _five_number(buggy)
            if entry:
                per_metric[metric] = entry
        out[approach] = per_metric
    return out


def _report_doc(table: EvaluationTable) -> dict:
    return {
        "schema_version": 1,
        "config": asdict(table.config),
        "thresholds": table.thresholds,
        "accuracy": {a: {m: {t: {"fraction": v, "percent": format_percent(v)}
                             for t, v in row.items()}
                         for m, row in table.accuracy_table(a).items()}
                     for a in ("object", "baseline")},
        "false_positives": {a: table.false_positive_counts(a)
                            for a in ("object", "baseline")},
        "stat_tests": [asdict(t) for t in table.stat_tests()],
        "distributions": _distributions(table),
        "runs": [asdict(r) for r in table.runs],
    }


def emit_report(table: EvaluationTable, fmt: str = "json") -> str:
    """Serialize the evaluation summary as json, csv, or a small html page.

    The csv holds one row per buggy run and approach-metric column; the
    json document embeds enough (config, thresholds, runs) to rebuild
    the table with EvaluationTable.from_json.
    """
    doc = _report_doc(table)
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        lines = ["approach,metric,bug_key,repetition,detected,worst_score,threshold"]
        reps_seen: dict[str, int] = {}
        for run in table.runs:
            if run.bug_key is None:
                continue
            rep = reps_seen.get(run.bug_key, 0)
            reps_seen[run.bug_key] = rep + 1
            for approach in ("object", "baseline"):
                scores = (run.object_scores if approach == "object"
                          else run.baseline_scores)
                for metric in table.config.metrics:
                    detected = table._flagged(run, approach, metric)
                    if detected is None:
                        continue
                    lines.append(
                        f"{approach},{metric},{run.bug_key},{rep},{int(detected)},"
                        f"{scores[metric]:.9g},"
                        f"{table.thresholds[approach][metric]:.9g}")
        return "\n".join(lines) + "\n"
    if fmt == "html":
        return _html_report(doc)
    raise ValueError(f"unknown report format: {fmt}")


def _html_report(doc: dict) -> str:
    def table_rows(metrics: dict) -> str:
        rows = []
        for metric, row in metrics.items():
            for bug_type, cell in row.items():
                rows.append(f"<tr><td>{metric}</td><td>{bug_type}</td>"
                            f"<td>{cell['percent']}</td></tr>")
        return "".join(rows)

    stats_rows = "".join(
        f"<tr><td>{t['approach']}</td><td>{t['metric']}</td>"
        f"<td>{t['p_value']:.3g}</td><td>{t['delta']:.3f}</td>"
        f"<td>{t['label']}</td></tr>"
        for t in doc["stat_tests"])
    dist_rows = []
    for approach, metrics in doc["distributions"].items():
        for metric, entry in metrics.items():
            for population, f in entry.items():
                dist_rows.append(
                    f"<tr><td>{approach}</td><td>{metric}</td><td>{population}</td>"
                    f"<td>{f['min']:.6g}</td><td>{f['q1']:.6g}</td>"
                    f"<td>{f['median']:.6g}</td><td>{f['q3']:.6g}</td>"
                    f"<td>{f['max']:.6g}</td></tr>")
    cfg = json.dumps(doc["config"], sort_keys=True)
    return f"""<!doctype html>
<html><head><meta charset="utf-8"><title>visual bug evaluation</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
table {{ border-collapse: collapse; margin-bottom: 2em; }}
td, th {{ border: 1px solid #999; padding: 4px 10px; }}
</style></head><body>
<h1>Visual bug detection evaluation</h1>
<p><code>{cfg}</code></p>
<h2>Detection accuracy, object pairs</h2>
<table><tr><th>metric</th><th>bug type</th><th>accuracy</th></tr>
{table_rows(doc["accuracy"]["object"])}</table>
<h2>Detection accuracy, whole-screenshot baseline</h2>
<table><tr><th>metric</th><th>bug type</th><th>accuracy</th></tr>
{table_rows(doc["accuracy"]["baseline"])}</table>
<h2>Clean vs buggy score distributions</h2>
<table><tr><th>approach</th><th>metric</th><th>p</th><th>delta</th><th>label</th></tr>
{stats_rows}</table>
<h2>Score distribution summaries</h2>
<table><tr><th>approach</th><th>metric</th><th>population</th>
<th>min</th><th>q1</th><th>median</th><th>q3</th><th>max</th></tr>
{"".join(dist_rows)}</table>
</body></html>
"""
