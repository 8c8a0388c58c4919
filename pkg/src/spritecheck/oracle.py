"""Oracle image generation and object extraction.

For every visible drawable node in a snapshot, two images are produced
and later compared:

- the oracle: the node's asset pushed through its own transform onto a
  fill-coloured canvas, with every overlapping higher-ranked node's mask
  stamped out
- the object: the same crop of the screenshot with the same masks applied

Masks keep only fully opaque pixels (alpha exactly 255 after transform
and node alpha); partially transparent pixels are removed from the
comparison entirely. Both sides of a pair therefore agree everywhere
except where the screenshot genuinely disagrees with the scene document.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import AssetStore, SceneGraph, SceneNode, SnapshotBundle
from .compositor import _render_patch, draw_order
from .errors import PairSkipped, RenderError

DEFAULT_FILL = (0, 0, 0, 255)

# fills studied for the masking step; any opaque colour works because it
# lands identically on both sides of a pair
KNOWN_FILLS = ((0, 0, 0, 255), (255, 255, 255, 255), (255, 0, 0, 255))


@dataclass
class ObjectMask:
    """Fully-opaque footprint of one drawn node, in paint order."""

    node_id: str
    mask: np.ndarray  # canvas-sized bool
    draw_rank: int


@dataclass
class ImagePair:
    """One node's oracle and extracted object, ready for scoring."""

    node_id: str
    oracle: np.ndarray
    object_image: np.ndarray
    crop_box: tuple[int, int, int, int]
    comparable_pixels: int
    skipped: bool = False
    skip_reason: str | None = None


def _check_fill(fill) -> np.ndarray:
    arr = np.asarray(fill, dtype=np.int64)
    if arr.shape != (4,) or arr.min() < 0 or arr.max() > 255:
        raise ValueError("fill must be four channel values in [0, 255]")
    return arr.astype(np.uint8)


def compute_masks(scene: SceneGraph, assets: AssetStore,
                  canvas_w: int, canvas_h: int) -> list[ObjectMask]:
    """One mask per visible drawable node, threshold alpha == 255."""
    masks: list[ObjectMask] = []
    for rank, nid in enumerate(draw_order(scene)):
        node = scene.nodes[nid]
        mask = np.zeros((canvas_h, canvas_w), dtype=bool)
        res = _render_patch(node, scene, assets, canvas_w, canvas_h)
        if res is not None:
            patch, x0, y0 = res
            mask[y0:y0 + patch.shape[0], x0:x0 + patch.shape[1]] = patch[..., 3] == 255
        masks.append(ObjectMask(node_id=nid, mask=mask, draw_rank=rank))
    return masks


def _own_mask(node_id: str, masks: list[ObjectMask]) -> ObjectMask:
    for m in masks:
        if m.node_id == node_id:
            return m
    raise RenderError(f"no mask computed for node {node_id}")


def _crop_of(mask: np.ndarray) -> tuple[int, int, int, int]:
    ys = np.flatnonzero(mask.any(axis=1))
    xs = np.flatnonzero(mask.any(axis=0))
    return (int(xs[0]), int(ys[0]), int(xs[-1] - xs[0] + 1), int(ys[-1] - ys[0] + 1))


def generate_oracle(node: SceneNode, scene: SceneGraph, assets: AssetStore,
                    masks: list[ObjectMask], fill=DEFAULT_FILL,
                    _patch=None):
    """Build the expected image for one node.

    Returns (oracle bitmap, crop_box, comparable_pixels). Raises
    PairSkipped when the node contributes nothing comparable:
    'off-canvas', 'no-opaque-pixels', or 'fully-occluded'.
    """
    fill_px = _check_fill(fill)
    own = _own_mask(node.id, masks)
    canvas_h, canvas_w = own.mask.shape

    res = _patch
    if res is None:
        res = _render_patch(node, scene, assets, canvas_w, canvas_h)
    if res is None:
        raise PairSkipped("off-canvas")
    if not own.mask.any():
        raise PairSkipped("no-opaque-pixels")

    x0, y0, cw, ch = _crop_of(own.mask)
    sl = (slice(y0, y0 + ch), slice(x0, x0 + cw))

    oracle = np.empty((ch, cw, 4), dtype=np.uint8)
    oracle[:] = fill_px

    patch, px0, py0 = res
    # own mask pixels are inside the patch footprint by construction
    ix0, iy0 = max(x0, px0), max(y0, py0)
    ix1 = min(x0 + cw, px0 + patch.shape[1])
    iy1 = min(y0 + ch, py0 + patch.shape[0])
    if ix0 < ix1 and iy0 < iy1:
        sub_own = own.mask[iy0:iy1, ix0:ix1]
        src = patch[iy0 - py0:iy1 - py0, ix0 - px0:ix1 - px0]
        dst = oracle[iy0 - y0:iy1 - y0, ix0 - x0:ix1 - x0]
        dst[sub_own] = src[sub_own]

    covered = np.zeros((ch, cw), dtype=bool)
    for m in masks:
        if m.draw_rank <= own.draw_rank:
            continue
        sub = m.mask[sl]
        if sub.any():
            oracle[sub] = fill_px
            covered |= sub

    comparable = int(np.count_nonzero(own.mask[sl] & ~covered))
    if comparable == 0:
        raise PairSkipped("fully-occluded")
    return oracle, (x0, y0, cw, ch), comparable


def extract_object(screenshot: np.ndarray, node_id: str, masks: list[ObjectMask],
                   crop_box: tuple[int, int, int, int], fill=DEFAULT_FILL) -> np.ndarray:
    """Cut the node's pixels out of the screenshot under the same masks."""
    fill_px = _check_fill(fill)
    own = _own_mask(node_id, masks)
    x0, y0, cw, ch = crop_box
    if x0 < 0 or y0 < 0 or cw <= 0 or ch <= 0 \
            or y0 + ch > screenshot.shape[0] or x0 + cw > screenshot.shape[1]:
        raise RenderError("crop box outside screenshot")
    sl = (slice(y0, y0 + ch), slice(x0, x0 + cw))

    obj = np.empty((ch, cw, 4), dtype=np.uint8)
    obj[:] = fill_px
    sub_own = own.mask[sl]
    obj[sub_own] = screenshot[sl][sub_own]
    for m in masks:
        if m.draw_rank <= own.draw_rank:
            continue
        sub = m.mask[sl]
        if sub.any():
            obj[sub] = fill_px
    return obj


@dataclass
class PairPlan:
    """The oracle side of a snapshot's decomposition, screenshot-independent.

    Built once per COR and reused to extract objects from any screenshot
    rendered against it, which is what makes sweeping many injected bugs
    over the same episode cheap.
    """

    masks: list[ObjectMask]
    oracles: list[ImagePair]  # object_image left empty until applied
    fill: tuple


def plan_pairs(scene: SceneGraph, assets: AssetStore, canvas_w: int, canvas_h: int,
               fill=DEFAULT_FILL) -> PairPlan:
    """Compute masks, oracles, and crop boxes for every drawable node.

    Node failures never abort the plan; they come back as skipped
    entries with the reason recorded.
    """
    patches: dict[str, object] = {}
    masks: list[ObjectMask] = []
    for rank, nid in enumerate(draw_order(scene)):
        node = scene.nodes[nid]
        mask = np.zeros((canvas_h, canvas_w), dtype=bool)
        try:
            res = _render_patch(node, scene, assets, canvas_w, canvas_h)
        except Exception as exc:
            patches[nid] = exc
            masks.append(ObjectMask(node_id=nid, mask=mask, draw_rank=rank))
            continue
        patches[nid] = res
        if res is not None:
            patch, x0, y0 = res
            mask[y0:y0 + patch.shape[0], x0:x0 + patch.shape[1]] = patch[..., 3] == 255
        masks.append(ObjectMask(node_id=nid, mask=mask, draw_rank=rank))

    empty = np.zeros((0, 0, 4), dtype=np.uint8)
    oracles: list[ImagePair] = []
    for m in masks:
        node = scene.nodes[m.node_id]
        cached = patches[m.node_id]
        try:
            if isinstance(cached, Exception):
                raise cached
            oracle, crop_box, comparable = generate_oracle(
                node, scene, assets, masks, fill=fill, _patch=cached)
            oracles.append(ImagePair(
                node_id=m.node_id, oracle=oracle, object_image=empty,
                crop_box=crop_box, comparable_pixels=comparable))
        except PairSkipped as skip:
            oracles.append(ImagePair(
                node_id=m.node_id, oracle=empty, object_image=empty,
                crop_box=(0, 0, 0, 0), comparable_pixels=0,
                skipped=True, skip_reason=skip.reason))
        except Exception as exc:
            oracles.append(ImagePair(
                node_id=m.node_id, oracle=empty, object_image=empty,
                crop_box=(0, 0, 0, 0), comparable_pixels=0,
                skipped=True, skip_reason=f"error: {exc}"))
    return PairPlan(masks=masks, oracles=oracles, fill=tuple(fill))


def pairs_from_plan(plan: PairPlan, screenshot: np.ndarray) -> list[ImagePair]:
    """Extract objects from one screenshot against a prepared plan."""
    pairs: list[ImagePair] = []
    for item in plan.oracles:
        if item.skipped:
            pairs.append(item)
            continue
        try:
            obj = extract_object(screenshot, item.node_id, plan.masks,
                                 item.crop_box, fill=plan.fill)
            pairs.append(ImagePair(
                node_id=item.node_id, oracle=item.oracle, object_image=obj,
                crop_box=item.crop_box, comparable_pixels=item.comparable_pixels))
        except Exception as exc:
            empty = np.zeros((0, 0, 4), dtype=np.uint8)
            pairs.append(ImagePair(
                node_id=item.node_id, oracle=empty, object_image=empty,
                crop_box=(0, 0, 0, 0), comparable_pixels=0,
                skipped=True, skip_reason=f"error: {exc}"))
    return pairs


def build_pairs(bundle: SnapshotBundle, fill=DEFAULT_FILL) -> list[ImagePair]:
    """Decompose one snapshot into per-node image pairs."""
    plan = plan_pairs(bundle.cor, bundle.assets, bundle.canvas_w, bundle.canvas_h,
                      fill=fill)
    return pairs_from_plan(plan, bundle.screenshot)
