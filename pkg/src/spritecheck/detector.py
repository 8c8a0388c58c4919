"""Threshold calibration and verdict aggregation.

Thresholds come from clean runs only: the lowest similarity (highest
MSE) ever seen on bug-free data becomes the pass boundary, and the
boundary itself passes. A pair fails only when it scores strictly
worse than everything calibration saw, which makes false positives on
the calibration data impossible by construction. Verdicts bubble up by
OR: any failing pair flags its snapshot, any flagged snapshot flags
the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import SnapshotBundle
from .errors import DetectorError
from .metrics import MetricKind, MetricScore, SsimParams, mse as _mse, pct as _pct, ssim as _ssim


@dataclass(frozen=True)
class Threshold:
    """Pass boundary for one metric, plus calibration provenance."""

    kind: MetricKind
    value: float
    runs: int = 0
    pairs: int = 0


@dataclass
class Verdict:
    """Buggy-or-not at pair, snapshot, or run scope."""

    scope: str
    kind: MetricKind
    buggy: bool
    worst_score: float
    offending: list[str] = field(default_factory=list)


def calibrate(clean_runs: list[list[MetricScore]], kind: MetricKind) -> Threshold:
    """Derive the pass boundary for one metric from clean-run scores."""
    if not clean_runs:
        raise DetectorError("calibrate requires at least one clean run")
    values = [s.value for run in clean_runs for s in run if s.kind is kind]
    if not values:
        raise DetectorError(f"no {kind.value} scores in calibration data")
    value = max(values) if kind is MetricKind.MSE else min(values)
    return Threshold(kind=kind, value=float(value), runs=len(clean_runs), pairs=len(values))


def _fails(value: float, threshold: Threshold) -> bool:
    # the boundary is inclusive: a score equal to the threshold passes
    if threshold.kind.higher_is_similar:
        return value < threshold.value
    return value > threshold.value


def judge_pair(score: MetricScore, threshold: Threshold) -> Verdict:
    if score.kind is not threshold.kind:
        raise DetectorError(
            f"score kind {score.kind.value} does not match threshold {threshold.kind.value}")
    buggy = _fails(score.value, threshold)
    return Verdict(scope="pair", kind=score.kind, buggy=buggy,
                   worst_score=score.value, offending=[score.node_id] if buggy else [])


def _aggregate(verdicts: list[Verdict], scope: str) -> Verdict:
    if not verdicts:
        raise DetectorError(f"cannot aggregate an empty verdict list into a {scope}")
    kinds = {v.kind for v in verdicts}
    if len(kinds) != 1:
        raise DetectorError("cannot aggregate verdicts of mixed metrics")
    kind = verdicts[0].kind
    values = [v.worst_score for v in verdicts]
    worst = min(values) if kind.higher_is_similar else max(values)
    offending: list[str] = []
    for v in verdicts:
        for nid in v.offending:
            if nid not in offending:
                offending.append(nid)
    return Verdict(scope=scope, kind=kind, buggy=any(v.buggy for v in verdicts),
                   worst_score=float(worst), offending=offending)


def judge_snapshot(pair_verdicts: list[Verdict]) -> Verdict:
    """A snapshot is buggy when any of its pairs is."""
    return _aggregate(pair_verdicts, "snapshot")


def judge_run(snapshot_verdicts: list[Verdict]) -> Verdict:
    """A run is buggy when any of its snapshots is."""
    return _aggregate(snapshot_verdicts, "run")


BASELINE_NODE_ID = "screenshot"

_BASELINE_KINDS = (MetricKind.PCT, MetricKind.MSE, MetricKind.SSIM)


def baseline_compare(oracle_shots: list[SnapshotBundle] | list[np.ndarray],
                     test_shots: list[SnapshotBundle] | list[np.ndarray],
                     kind: MetricKind,
                     ssim_params: SsimParams = SsimParams()) -> list[MetricScore]:
    """Whole-screenshot comparison, paired by snapshot index.

    The conventional approach this package is measured against: no scene
    decomposition, one score per screenshot.
    """
    if kind not in _BASELINE_KINDS:
        raise DetectorError("baseline comparison supports PCT, MSE, and SSIM only")
    if len(oracle_shots) != len(test_shots):
        raise DetectorError("baseline comparison requires runs of equal snapshot count")
    if not oracle_shots:
        raise DetectorError("baseline comparison requires at least one snapshot")

    scores: list[MetricScore] = []
    for i, (ref, test) in enumerate(zip(oracle_shots, test_shots)):
        a = ref.screenshot if isinstance(ref, SnapshotBundle) else ref
        b = test.screenshot if isinstance(test, SnapshotBundle) else test
        if kind is MetricKind.PCT:
            value = _pct(a, b)
        elif kind is MetricKind.MSE:
            value = _mse(a, b)
        else:
            value = _ssim(a, b, ssim_params)
        scores.append(MetricScore(node_id=BASELINE_NODE_ID, kind=kind,
                                  value=value, snapshot_index=i))
    return scores
