"""Statistics, the experiment driver, and report emission.

Rank statistics are checked against brute-force pair counting and, for
the p-value, an exhaustive permutation oracle on a fixed 8-vs-8 sample.
"""

import itertools
import json

import numpy as np
import pytest

from spritecheck.metrics import DEFAULT_PROVIDER, MetricKind
from spritecheck.oracle import build_pairs
from spritecheck.stats import (EvaluationTable, ExperimentConfig, RunScore,
                               accuracy, cliffs_delta, effect_label,
                               emit_report, evaluate_experiment,
                               format_percent, mann_whitney_u, score_run)


# ---------------------------------------------------------------------------
# references

def ref_u(xs, ys) -> float:
    wins = sum(1 for x in xs for y in ys if x > y)
    ties = sum(1 for x in xs for y in ys if x == y)
    return wins + 0.5 * ties


def ref_delta(xs, ys) -> float:
    gt = sum(1 for x in xs for y in ys if x > y)
    lt = sum(1 for x in xs for y in ys if x < y)
    return (gt - lt) / (len(xs) * len(ys))


def midranks(pool):
    pool = np.asarray(pool, dtype=np.float64)
    order = np.argsort(pool, kind="mergesort")
    ranks = np.empty(len(pool))
    vals = pool[order]
    i = 0
    while i < len(pool):
        j = i
        while j + 1 < len(pool) and vals[j + 1] == vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def exact_permutation_p(xs, ys) -> float:
    """Two-sided p by enumerating every assignment of the pooled values."""
    n, m = len(xs), len(ys)
    ranks = midranks(list(xs) + list(ys))
    center = n * m / 2.0
    observed = abs(ref_u(xs, ys) - center)
    hits = 0
    total = 0
    for subset in itertools.combinations(range(n + m), n):
        u = ranks[list(subset)].sum() - n * (n + 1) / 2.0
        total += 1
        if abs(u - center) >= observed - 1e-12:
            hits += 1
    return hits / total


def sample_pair(seed, n=12, m=9, span=10):
    rng = np.random.default_rng(seed)
    return (rng.integers(0, span, n).astype(float).tolist(),
            rng.integers(0, span, m).astype(float).tolist())


# ---------------------------------------------------------------------------
# accuracy and percent formatting

def test_accuracy_basics():
    assert accuracy(3, 1) == 0.75
    assert accuracy(240, 0) == 1.0
    assert accuracy(0, 5) == 0.0


def test_accuracy_rejects_empty_population():
    with pytest.raises(ValueError, match="at least one buggy run"):
        accuracy(0, 0)


@pytest.mark.parametrize("tp,fn,rendered", [
    (107, 133, "44.6%"),
    (80, 160, "33.3%"),
    (180, 60, "75.0%"),
    (240, 0, "100.0%"),
])
def test_detection_rates_render_to_one_decimal(tp, fn, rendered):
    assert format_percent(accuracy(tp, fn)) == rendered


def test_format_percent_rounds_halves_away_from_zero():
    assert format_percent(0.0625) == "6.3%"
    assert format_percent(-0.0625) == "-6.3%"
    assert format_percent(0.4455) == "44.6%"
    assert format_percent(0.0) == "0.0%"
    assert format_percent(1.0) == "100.0%"


# ---------------------------------------------------------------------------
# Mann-Whitney U

def test_u_complete_separation():
    res = mann_whitney_u([1.0, 2.0], [3.0, 4.0])
    assert res.u_x == 0.0
    assert res.u_y == 4.0


def test_identical_samples_show_no_evidence():
    vals = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert mann_whitney_u(vals, list(vals)).p_value > 0.9


def test_u_matches_pair_counting():
    for seed in range(8):
        xs, ys = sample_pair(seed)
        res = mann_whitney_u(xs, ys)
        assert res.u_x == ref_u(xs, ys)
        assert res.u_y == len(xs) * len(ys) - res.u_x


def test_u_statistics_sum_to_pair_count():
    for seed in range(20, 25):
        xs, ys = sample_pair(seed, n=7, m=15)
        res = mann_whitney_u(xs, ys)
        assert res.u_x + res.u_y == len(xs) * len(ys)
        assert 0.0 <= res.p_value <= 1.0


def test_p_against_exhaustive_permutations():
    # fixed 8-vs-8 sample with cross-sample ties (9 and 5)
    xs = [12.0, 5.0, 9.0, 14.0, 8.0, 7.0, 11.0, 13.0]
    ys = [6.0, 4.0, 10.0, 3.0, 9.0, 2.0, 5.0, 1.0]
    res = mann_whitney_u(xs, ys)
    assert res.u_x == 55.0
    exact = exact_permutation_p(xs, ys)
    assert exact == pytest.approx(0.01320901320901321, abs=1e-12)
    assert abs(res.p_value - exact) < 0.01


def test_p_against_scipy():
    stats = pytest.importorskip("scipy.stats")
    for seed in range(40, 44):
        xs, ys = sample_pair(seed, n=14, m=11)
        res = mann_whitney_u(xs, ys)
        ref = stats.mannwhitneyu(xs, ys, alternative="two-sided",
                                 use_continuity=True, method="asymptotic")
        assert res.u_x == ref.statistic
        assert res.p_value == pytest.approx(ref.pvalue, abs=1e-9)


def test_u_rejects_empty_samples():
    with pytest.raises(ValueError, match="non-empty"):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError, match="non-empty"):
        mann_whitney_u([1.0], [])


def test_u_handles_zero_variance_pool():
    res = mann_whitney_u([5.0, 5.0], [5.0, 5.0, 5.0])
    assert res.z == 0.0
    assert res.p_value == 1.0
    assert res.u_x == 3.0


# ---------------------------------------------------------------------------
# Cliff's delta

def test_delta_full_separation():
    eff = cliffs_delta([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert eff.delta == -1.0
    assert eff.label == "large"


def test_delta_balanced_and_identical():
    assert cliffs_delta([1.0, 3.0], [2.0]).delta == 0.0
    assert cliffs_delta([1.0, 3.0], [2.0]).label == "negligible"
    same = [4.0, 4.0, 7.0]
    assert cliffs_delta(same, list(same)).delta == 0.0


def test_delta_matches_brute_force():
    for seed in range(60, 66):
        xs, ys = sample_pair(seed, n=13, m=8)
        assert cliffs_delta(xs, ys).delta == ref_delta(xs, ys)


def test_delta_antisymmetry_and_bounds():
    for seed in range(70, 75):
        xs, ys = sample_pair(seed)
        d = cliffs_delta(xs, ys).delta
        assert cliffs_delta(ys, xs).delta == -d
        assert -1.0 <= d <= 1.0
        assert cliffs_delta(xs, ys).label == effect_label(d)


def test_delta_chunked_path_matches_category_counts():
    rng = np.random.default_rng(77)
    xs = rng.integers(0, 3, 30).astype(float)
    ys = rng.integers(0, 3, 200_001).astype(float)
    cx = [int((xs == v).sum()) for v in range(3)]
    cy = [int((ys == v).sum()) for v in range(3)]
    gt = sum(cx[v] * cy[w] for v in range(3) for w in range(3) if v > w)
    lt = sum(cx[v] * cy[w] for v in range(3) for w in range(3) if v < w)
    expected = (gt - lt) / (len(xs) * len(ys))
    assert cliffs_delta(xs, ys).delta == pytest.approx(expected, abs=1e-15)


def test_delta_rejects_empty_samples():
    with pytest.raises(ValueError, match="non-empty"):
        cliffs_delta([], [1.0])


@pytest.mark.parametrize("delta,label", [
    (0.0, "negligible"),
    (0.147, "negligible"),
    (0.1471, "small"),
    (0.33, "small"),
    (0.331, "medium"),
    (0.474, "medium"),
    (0.4741, "large"),
    (1.0, "large"),
    (-0.147, "negligible"),
    (-0.475, "large"),
])
def test_effect_labels_partition_with_exact_boundaries(delta, label):
    assert effect_label(delta) == label


# ---------------------------------------------------------------------------
# evaluation table on hand-built runs

def hand_built_table() -> EvaluationTable:
    config = ExperimentConfig(reps=2, clean_runs=2, metrics=("PCT", "MSE", "ESIM"),
                              bug_keys=("S1", "A2"))
    thresholds = {
        "object": {"PCT": 0.99, "MSE": 10.0, "ESIM": 0.995},
        "baseline": {"PCT": 0.90, "MSE": 50.0},
    }
    runs = [
        RunScore(seed=1, bug_key=None, bug_type=None,
                 object_scores={"PCT": 1.0, "MSE": 0.0, "ESIM": 1.0},
                 baseline_scores={"PCT": 0.95, "MSE": 30.0}),
        RunScore(seed=2, bug_key=None, bug_type=None,
                 object_scores={"PCT": 0.99, "MSE": 10.0, "ESIM": 0.995},
                 baseline_scores={"PCT": 0.85, "MSE": 60.0}),
        RunScore(seed=3, bug_key="S1", bug_type="state",
                 object_scores={"PCT": 0.5, "MSE": 100.0, "ESIM": 0.9},
                 baseline_scores={"PCT": 0.92, "MSE": 40.0}),
        RunScore(seed=4, bug_key="S1", bug_type="state",
                 object_scores={"PCT": 1.0, "MSE": 5.0, "ESIM": 1.0},
                 baseline_scores={"PCT": 0.80, "MSE": 70.0}),
        RunScore(seed=3, bug_key="A2", bug_type="appearance",
                 object_scores={"PCT": 0.98, "MSE": 20.0, "ESIM": 0.99},
                 baseline_scores={"PCT": 0.88, "MSE": 55.0}),
        RunScore(seed=4, bug_key="A2", bug_type="appearance",
                 object_scores={"PCT": 0.99, "MSE": 10.0, "ESIM": 0.995},
                 baseline_scores={"PCT": 0.91, "MSE": 45.0}),
    ]
    return EvaluationTable(config=config, thresholds=thresholds, runs=runs)


def test_accuracy_table_counts_flags_per_type():
    table = hand_built_table()
    for metric in ("PCT", "MSE", "ESIM"):
        row = table.accuracy_table("object")[metric]
        assert row == {"appearance": 0.5, "state": 0.5, "overall": 0.5}


def test_scores_on_the_boundary_are_not_flagged():
    table = hand_built_table()
    # the second A2 run sits exactly on every object threshold
    flags = [table._flagged(r, "object", m)
             for r in table.runs if r.bug_key == "A2"
             for m in ("PCT", "MSE", "ESIM")]
    assert flags == [True, True, True, False, False, False]


def test_baseline_table_covers_shared_metrics_only():
    table = hand_built_table()
    rows = table.accuracy_table("baseline")
    assert sorted(rows) == ["MSE", "PCT"]
    assert rows["PCT"]["overall"] == 0.5


def test_false_positive_counts():
    table = hand_built_table()
    assert table.false_positive_counts("object") == {"PCT": 0, "MSE": 0, "ESIM": 0}
    assert table.false_positive_counts("baseline") == {"PCT": 1, "MSE": 1}


def test_stat_tests_match_direct_computation():
    table = hand_built_table()
    tests = {(t.approach, t.metric): t for t in table.stat_tests()}
    assert sorted(tests) == [("baseline", "MSE"), ("baseline", "PCT"),
                             ("object", "ESIM"), ("object", "MSE"),
                             ("object", "PCT")]
    clean = [1.0, 0.99]
    buggy = [0.5, 1.0, 0.98, 0.99]
    t = tests[("object", "PCT")]
    mw = mann_whitney_u(clean, buggy)
    eff = cliffs_delta(clean, buggy)
    assert t.u_statistic == mw.u_x
    assert t.p_value == mw.p_value
    assert t.delta == eff.delta
    assert t.label == eff.label
    assert (t.n_clean, t.n_buggy) == (2, 4)


def test_table_json_round_trip():
    table = hand_built_table()
    text = table.to_json()
    assert text == table.to_json()
    assert EvaluationTable.from_json(text) == table


def test_report_json_rebuilds_the_table():
    table = hand_built_table()
    report = emit_report(table, "json")
    assert EvaluationTable.from_json(report) == table
    doc = json.loads(report)
    assert doc["schema_version"] == 1
    assert doc["accuracy"]["object"]["PCT"]["overall"]["percent"] == "50.0%"
    f = doc["distributions"]["object"]["PCT"]["clean"]
    assert f["min"] <= f["q1"] <= f["median"] <= f["q3"] <= f["max"]
    assert f["min"] == 0.99 and f["max"] == 1.0


def test_report_csv_rows():
    table = hand_built_table()
    lines = emit_report(table, "csv").splitlines()
    assert lines[0] == "approach,metric,bug_key,repetition,detected,worst_score,threshold"
    # 4 buggy runs x (3 object metrics + 2 baseline metrics)
    assert len(lines) == 1 + 4 * 5
    assert lines[1] == "object,PCT,S1,0,1,0.5,0.99"
    assert lines[2] == "object,MSE,S1,0,1,100,10"
    assert lines[3] == "object,ESIM,S1,0,1,0.9,0.995"
    assert lines[4] == "baseline,PCT,S1,0,0,0.92,0.9"
    assert lines[5] == "baseline,MSE,S1,0,0,40,50"
    reps = [line.split(",")[3] for line in lines[1:] if line.startswith("object,PCT")]
    assert reps == ["0", "1", "0", "1"]


def test_report_html_is_self_contained():
    html = emit_report(hand_built_table(), "html")
    assert html.startswith("<!doctype html>")
    assert "50.0%" in html
    assert "negligible" in html or "small" in html or "medium" in html or "large" in html
    assert "Score distribution summaries" in html
    assert "<th>median</th>" in html
    assert "http://" not in html and "https://" not in html


def test_report_unknown_format():
    with pytest.raises(ValueError, match="unknown report format: yaml"):
        emit_report(hand_built_table(), "yaml")


# ---------------------------------------------------------------------------
# scoring real runs

def test_score_run_on_clean_bundles_yields_identity_scores(clean_bundles):
    bundles = clean_bundles[:2]
    scores = score_run(bundles)
    assert scores
    identity = {MetricKind.PCT: 1.0, MetricKind.MSE: 0.0,
                MetricKind.SSIM: 1.0, MetricKind.ESIM: 1.0}
    node_ids = set(bundles[0].cor.nodes)
    for s in scores:
        assert s.value == identity[s.kind]
        assert s.snapshot_index in {bundles[0].snapshot_index,
                                    bundles[1].snapshot_index}
        assert s.node_id in node_ids


def test_score_run_respects_metric_selection(clean_bundles):
    bundles = clean_bundles[:1]
    scores = score_run(bundles, metric_names=("PCT",))
    assert scores
    assert {s.kind for s in scores} == {MetricKind.PCT}
    live = [p for p in build_pairs(bundles[0]) if not p.skipped]
    assert len(scores) == len(live)


# ---------------------------------------------------------------------------
# the experiment driver

@pytest.fixture(scope="module")
def tiny_config():
    return ExperimentConfig(canvas_w=320, canvas_h=180, base_seed=4242,
                            reps=1, clean_runs=2, snapshot_count=3,
                            bug_keys=("S1", "A2"))


@pytest.fixture(scope="module")
def tiny_table(tiny_config):
    return evaluate_experiment(tiny_config)


def test_experiment_calibrates_identity_thresholds(tiny_table):
    assert tiny_table.thresholds["object"] == {
        "PCT": 1.0, "MSE": 0.0, "SSIM": 1.0, "ESIM": 1.0}
    assert sorted(tiny_table.thresholds["baseline"]) == ["MSE", "PCT", "SSIM"]


def test_experiment_run_layout(tiny_table, tiny_config):
    clean = [r for r in tiny_table.runs if r.bug_key is None]
    buggy = [r for r in tiny_table.runs if r.bug_key is not None]
    assert len(clean) == tiny_config.clean_runs + tiny_config.reps
    assert len(buggy) == tiny_config.reps * 2
    assert {r.bug_key for r in buggy} == {"S1", "A2"}
    assert {r.bug_type for r in buggy} == {"state", "appearance"}


def test_experiment_flags_every_injected_bug(tiny_table):
    acc = tiny_table.accuracy_table("object")
    for metric in ("PCT", "MSE", "SSIM", "ESIM"):
        assert acc[metric]["overall"] == 1.0


def test_experiment_has_no_object_false_positives(tiny_table):
    fps = tiny_table.false_positive_counts("object")
    assert fps == {"PCT": 0, "MSE": 0, "SSIM": 0, "ESIM": 0}


def test_experiment_stat_tests_cover_both_approaches(tiny_table):
    tests = tiny_table.stat_tests()
    assert len(tests) == 4 + 3
    for t in tests:
        assert t.n_clean == 3
        assert t.n_buggy == 2


def test_experiment_is_deterministic(tiny_table, tiny_config):
    again = evaluate_experiment(tiny_config)
    assert again == tiny_table
    assert again.to_json() == tiny_table.to_json()


def test_experiment_rejects_bad_configs():
    with pytest.raises(ValueError, match="reps and clean_runs must be positive"):
        evaluate_experiment(ExperimentConfig(reps=0))
    with pytest.raises(ValueError, match="custom embedding providers"):
        evaluate_experiment(ExperimentConfig(jobs=2), provider=DEFAULT_PROVIDER)
