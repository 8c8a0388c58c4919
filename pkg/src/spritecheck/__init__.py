"""Visual bug detection for sprite-based canvas scenes.

Snapshots of a running scene (scene document + screenshot + assets) are
decomposed into per-object image pairs: what each sprite should look
like versus what the screenshot actually shows. Similarity metrics over
those pairs, gated by thresholds calibrated on known-good runs, flag
snapshots whose pixels disagree with the scene state.
"""

from .bundle import (Asset, AssetStore, SceneGraph, SceneNode, SnapshotBundle,
                     Violation, load_bundle, save_bundle, scene_from_doc,
                     scene_to_doc, validate_cor)
from .bugs import BugSpec, get_bug, list_bugs, make_hook, verify_visibility
from .compositor import (AffineTransform, BugHook, RenderLayer, alpha_composite,
                         draw_order, rasterize_node, render_scene,
                         world_transform)
from .detector import (BASELINE_NODE_ID, Threshold, Verdict, baseline_compare,
                       calibrate, judge_pair, judge_run, judge_snapshot)
from .errors import (BundleError, DetectorError, ImageTooSmallError,
                     IncompleteBundleError, IneffectiveBugError,
                     MalformedCorError, MetricError, PairSkipped,
                     ProviderError, RenderError, SimulationError,
                     SizeMismatchError, SpriteCheckError)
from .metrics import (DEFAULT_PROVIDER, EmbeddingProvider, MetricKind,
                      MetricScore, SsimParams, cosine_similarity,
                      default_embedding, esim, make_subprocess_provider, mse,
                      pct, score, ssim)
from .oracle import (DEFAULT_FILL, KNOWN_FILLS, ImagePair, ObjectMask,
                     PairPlan, build_pairs, compute_masks, extract_object,
                     generate_oracle, pairs_from_plan, plan_pairs)
from .rng import SplitMix64
from .simulator import (GameConfig, GameState, PointerInput, make_asset_pack,
                        new_game, pointer_script, run_test_case, snapshot_ticks,
                        step, take_snapshot)
from .stats import (EffectSize, EvaluationTable, ExperimentConfig,
                    MannWhitneyResult, RunScore, StatTest, accuracy,
                    cliffs_delta, emit_report, evaluate_experiment,
                    format_percent, mann_whitney_u, score_run)

__version__ = "0.1.0"

__all__ = [
    "AffineTransform", "Asset", "AssetStore", "BASELINE_NODE_ID", "BugHook",
    "BugSpec", "BundleError", "DEFAULT_FILL", "DEFAULT_PROVIDER",
    "DetectorError", "EffectSize", "EmbeddingProvider", "EvaluationTable",
    "ExperimentConfig", "GameConfig", "GameState", "ImagePair",
    "ImageTooSmallError", "IncompleteBundleError", "IneffectiveBugError",
    "KNOWN_FILLS", "MalformedCorError", "MannWhitneyResult", "MetricError",
    "MetricKind", "MetricScore", "ObjectMask", "PairPlan", "PairSkipped",
    "PointerInput", "ProviderError", "RenderError", "RenderLayer", "RunScore",
    "SceneGraph", "SceneNode", "SimulationError", "SizeMismatchError",
    "SnapshotBundle", "SplitMix64", "SpriteCheckError", "SsimParams",
    "StatTest", "Threshold", "Verdict", "Violation", "accuracy",
    "alpha_composite", "baseline_compare", "build_pairs", "calibrate",
    "cliffs_delta", "compute_masks", "cosine_similarity", "default_embedding",
    "draw_order", "emit_report", "esim", "evaluate_experiment",
    "extract_object", "format_percent", "generate_oracle", "get_bug",
    "judge_pair", "judge_run", "judge_snapshot", "list_bugs", "load_bundle",
    "make_asset_pack", "make_hook", "make_subprocess_provider",
    "mann_whitney_u", "mse", "new_game", "pairs_from_plan", "pct",
    "plan_pairs", "pointer_script", "rasterize_node", "render_scene",
    "run_test_case", "save_bundle", "scene_from_doc", "scene_to_doc", "score",
    "score_run", "snapshot_ticks", "ssim", "step", "take_snapshot",
    "validate_cor", "verify_visibility", "world_transform",
]
