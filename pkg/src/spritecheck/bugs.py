"""Catalogue of injectable visual bugs for the test game.

Each bug is a render-time fault wired into the compositor through a
BugHook. The scene state itself is never touched, so the COR stays
truthful and only the screenshot lies. Four families, six bugs each:

- state: things drawn that should not be, or not drawn, or frozen
- appearance: colours wrong while geometry stays put
- layout: geometry wrong while pixels stay faithful
- rendering: corrupted output (shuffled blocks, blur, noise, tearing)

Appearance faults are channel swaps, inversions, and additive tints on
purpose: a pure per-channel scaling can slip past cosine-style
embedding comparisons, and these cannot.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .bundle import SceneNode
from .compositor import BugHook
from .errors import IneffectiveBugError
from .simulator import (BEARD_RECT, SAIL_RECT, GameConfig, make_asset_pack,
                        run_test_case)

BUG_TYPES = ("state", "appearance", "layout", "rendering")


@dataclass
class BugSpec:
    key: str
    bug_type: str
    targets: tuple[str, ...]  # node ids; a trailing * matches a prefix
    mechanism: str
    description: str
    params: dict = field(default_factory=dict)
    seed: int = 0


def _matches(targets: tuple[str, ...], node_id: str) -> bool:
    return any(
        node_id == t or (t.endswith("*") and node_id.startswith(t[:-1]))
        for t in targets
    )


def _node_rng_seed(spec: BugSpec, node_id: str) -> int:
    return (spec.seed ^ zlib.crc32(node_id.encode("utf-8"))) & 0xFFFFFFFF


# ---------------------------------------------------------------------------
# colour maps (integer arithmetic only, applied to straight RGB)

def _map_swap(a: int, b: int):
    def fn(rgb: np.ndarray) -> np.ndarray:
        out = rgb.copy()
        out[..., a] = rgb[..., b]
        out[..., b] = rgb[..., a]
        return out
    return fn


def _map_rotate(rgb: np.ndarray) -> np.ndarray:
    return rgb[..., [1, 2, 0]]


def _map_grayscale(rgb: np.ndarray) -> np.ndarray:
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.repeat(y[..., None], 3, axis=-1)


def _map_invert(rgb: np.ndarray) -> np.ndarray:
    return 255 - rgb


def _map_tint_red(rgb: np.ndarray) -> np.ndarray:
    out = rgb.copy()
    out[..., 0] = np.minimum(255, rgb[..., 0] + 90)
    out[..., 1] = (rgb[..., 1] * 70) // 100
    out[..., 2] = (rgb[..., 2] * 70) // 100
    return out


_COLOUR_MAPS = {
    "swap_rb": _map_swap(0, 2),
    "swap_rg": _map_swap(0, 1),
    "rotate_rgb": _map_rotate,
    "grayscale": _map_grayscale,
    "invert": _map_invert,
    "tint_red": _map_tint_red,
}


def _recolour(frame: np.ndarray, rect, map_name: str) -> np.ndarray:
    out = frame.copy()
    if rect is None:
        region = out
    else:
        x, y, w, h = rect
        region = out[y:y + h, x:x + w]
    visible = region[..., 3] > 0
    rgb = region[..., :3].astype(np.int64)
    mapped = np.clip(_COLOUR_MAPS[map_name](rgb), 0, 255).astype(np.uint8)
    region[..., :3][visible] = mapped[visible]
    return out


# ---------------------------------------------------------------------------
# patch corruptions

def _block_grid(patch: np.ndarray, block: int):
    gh, gw = patch.shape[0] // block, patch.shape[1] // block
    if gh * gw < 2:
        return None
    core = patch[:gh * block, :gw * block]
    cells = core.reshape(gh, block, gw, block, 4).swapaxes(1, 2)
    return cells.reshape(gh * gw, block, block, 4), gh, gw


def _block_shuffle(patch: np.ndarray, block: int, rng: np.random.Generator,
                   swaps: int | None) -> np.ndarray:
    grid = _block_grid(patch, block)
    if grid is None:
        return patch
    cells, gh, gw = grid
    n = gh * gw
    if swaps is None:
        perm = rng.permutation(n)
    else:
        perm = np.arange(n)
        for _ in range(swaps):
            i, j = int(rng.integers(0, n)), int(rng.integers(0, n))
            perm[[i, j]] = perm[[j, i]]
    out = patch.copy()
    shuffled = cells[perm].reshape(gh, gw, block, block, 4).swapaxes(1, 2)
    out[:gh * block, :gw * block] = shuffled.reshape(gh * block, gw * block, 4)
    return out


def _box_blur_rgb(patch: np.ndarray, radius: int) -> np.ndarray:
    # separable box filter with clamped edges; alpha is left alone
    rgb = patch[..., :3].astype(np.float64)
    win = 2 * radius + 1
    for axis in (0, 1):
        n = rgb.shape[axis]
        pad = [(0, 0)] * rgb.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(rgb, pad, mode="edge")
        c = np.cumsum(padded, axis=axis, dtype=np.float64)
        lead = [(0, 0)] * rgb.ndim
        lead[axis] = (1, 0)
        c = np.pad(c, lead)
        hi = c.take(np.arange(win, n + win), axis=axis)
        lo = c.take(np.arange(0, n), axis=axis)
        rgb = (hi - lo) / win
    out = patch.copy()
    out[..., :3] = np.floor(rgb + 0.5).astype(np.uint8)
    return out


def _paint_rects(patch: np.ndarray, rects, colour) -> np.ndarray:
    out = patch.copy()
    h, w = out.shape[:2]
    for fx, fy, fw, fh in rects:
        x0, y0 = (w * fx) // 100, (h * fy) // 100
        x1, y1 = min(w, x0 + (w * fw) // 100), min(h, y0 + (h * fh) // 100)
        out[y0:y1, x0:x1, :3] = colour
        out[y0:y1, x0:x1, 3] = 255
    return out


def _salt_noise(patch: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    out = patch.copy()
    hit = (rng.random(patch.shape[:2]) < fraction) & (patch[..., 3] == 255)
    if not hit.any():
        return out
    out[hit, :3] = rng.integers(0, 256, (int(hit.sum()), 3), dtype=np.int64).astype(np.uint8)
    return out


def _row_tear(patch: np.ndarray, top_frac: int, band_frac: int, dx: int) -> np.ndarray:
    out = patch.copy()
    h = out.shape[0]
    lo = (h * top_frac) // 100
    hi = min(h, lo + max(1, (h * band_frac) // 100))
    out[lo:hi] = np.roll(patch[lo:hi], dx, axis=1)
    return out


# ---------------------------------------------------------------------------
# hook assembly

def make_hook(spec: BugSpec) -> BugHook:
    """Compile a bug description into compositor callbacks."""
    mech = spec.mechanism
    targets = spec.targets

    if mech == "suppress_draw":
        return BugHook(bug_key=spec.key, suppress_ids=frozenset(targets))

    if mech == "force_draw_hidden":
        return BugHook(bug_key=spec.key, force_draw_ids=frozenset(targets))

    if mech == "freeze_animation":
        def freeze(node: SceneNode) -> SceneNode:
            if _matches(targets, node.id) and node.kind == "animated_sprite":
                return replace(node, children=list(node.children),
                               frame_index=spec.params.get("frame", 0))
            return node
        return BugHook(bug_key=spec.key, node_override=freeze)

    if mech == "property_offset":
        dx = spec.params.get("dx", 0.0)
        dy = spec.params.get("dy", 0.0)
        dr = spec.params.get("drotation", 0.0)
        def offset(node: SceneNode) -> SceneNode:
            if _matches(targets, node.id):
                return replace(node, children=list(node.children),
                               x=node.x + dx, y=node.y + dy,
                               rotation=node.rotation + dr)
            return node
        return BugHook(bug_key=spec.key, node_override=offset)

    if mech == "draw_reorder":
        after = spec.params["after"]
        moved = targets[0]
        def reorder(order: list) -> list:
            if moved not in order or after not in order:
                return order
            out = [nid for nid in order if nid != moved]
            out.insert(out.index(after) + 1, moved)
            return out
        return BugHook(bug_key=spec.key, reorder=reorder)

    if mech == "channel_map":
        map_name = spec.params["map"]
        rect = spec.params.get("rect")
        def recolour(node: SceneNode, frame: np.ndarray) -> np.ndarray:
            if _matches(targets, node.id):
                return _recolour(frame, rect, map_name)
            return frame
        return BugHook(bug_key=spec.key, asset_override=recolour)

    if mech in ("block_shuffle", "box_blur", "patch_overlay", "pixel_noise", "row_tear"):
        params = spec.params
        def corrupt(node: SceneNode, patch: np.ndarray, origin) -> np.ndarray:
            if not _matches(targets, node.id):
                return patch
            if mech == "block_shuffle":
                rng = np.random.default_rng(_node_rng_seed(spec, node.id))
                return _block_shuffle(patch, params.get("block", 8), rng,
                                      params.get("swaps"))
            if mech == "box_blur":
                return _box_blur_rgb(patch, params.get("radius", 2))
            if mech == "patch_overlay":
                return _paint_rects(patch, params["rects"], params["colour"])
            if mech == "pixel_noise":
                rng = np.random.default_rng(_node_rng_seed(spec, node.id))
                return _salt_noise(patch, params.get("fraction", 0.02), rng)
            return _row_tear(patch, params.get("top", 30), params.get("band", 30),
                             params.get("dx", 24))
        return BugHook(bug_key=spec.key, post_draw=corrupt)

    raise ValueError(f"unknown bug mechanism: {mech}")


def _catalogue() -> list[BugSpec]:
    quarter = 3.14159265358979 / 8  # pi/8, kept away from exact-path angles
    fifth = 3.14159265358979 / 5
    specs = [
        BugSpec("S1", "state", ("player",), "suppress_draw",
                "player sprite is never drawn"),
        BugSpec("S2", "state", ("hills",), "suppress_draw",
                "hills background layer is never drawn"),
        BugSpec("S3", "state", ("ship",), "suppress_draw",
                "ship decor sprite is never drawn"),
        BugSpec("S4", "state", ("player",), "freeze_animation",
                "player animation stuck on its first frame", {"frame": 0}),
        BugSpec("S5", "state", ("fallen",), "freeze_animation",
                "crash animation stuck on its first frame", {"frame": 0}),
        BugSpec("S6", "state", ("button",), "force_draw_hidden",
                "start button keeps rendering after being hidden"),
        BugSpec("A1", "appearance", ("player",), "channel_map",
                "red and blue swapped inside the beard area",
                {"map": "swap_rb", "rect": BEARD_RECT}),
        BugSpec("A2", "appearance", ("player",), "channel_map",
                "player colour channels rotated", {"map": "rotate_rgb"}),
        BugSpec("A3", "appearance", ("player", "log_*"), "channel_map",
                "player and falling logs drawn in grayscale",
                {"map": "grayscale"}),
        BugSpec("A4", "appearance", ("log_*",), "channel_map",
                "red and green swapped on falling logs", {"map": "swap_rg"}),
        BugSpec("A5", "appearance", ("ship",), "channel_map",
                "ship sail tinted red", {"map": "tint_red", "rect": SAIL_RECT}),
        BugSpec("A6", "appearance", ("bunny",), "channel_map",
                "bunny colours inverted", {"map": "invert"}),
        BugSpec("L1", "layout", ("ship",), "property_offset",
                "ship drawn offset from its true position",
                {"dx": 24.0, "dy": -10.0}),
        BugSpec("L2", "layout", ("player",), "property_offset",
                "player drawn shifted left", {"dx": -18.0}),
        BugSpec("L3", "layout", ("cloud_a",), "property_offset",
                "one cloud drawn displaced", {"dx": 30.0, "dy": 12.0}),
        BugSpec("L4", "layout", ("player",), "property_offset",
                "player drawn slightly rotated", {"drotation": quarter}),
        BugSpec("L5", "layout", ("trees",), "draw_reorder",
                "tree layer drawn above the beach", {"after": "beach"}),
        BugSpec("L6", "layout", ("log_*",), "property_offset",
                "falling logs drawn over-rotated", {"drotation": fifth}),
        BugSpec("R1", "rendering", ("player",), "block_shuffle",
                "player pixels scrambled in 8px blocks", {"block": 8}),
        BugSpec("R2", "rendering", ("ship",), "block_shuffle",
                "a few 8px blocks of the ship swapped",
                {"block": 8, "swaps": 3}),
        BugSpec("R3", "rendering", ("player",), "box_blur",
                "player drawn blurred", {"radius": 2}),
        BugSpec("R4", "rendering", ("trees",), "patch_overlay",
                "rectangles of the tree layer fall back to the sky colour",
                {"rects": ((10, 20, 18, 30), (55, 45, 20, 25), (80, 10, 12, 40)),
                 "colour": (135, 206, 235)}),
        BugSpec("R5", "rendering", ("bushes",), "pixel_noise",
                "random pixel noise across the bush layer",
                {"fraction": 0.02}),
        BugSpec("R6", "rendering", ("beach",), "row_tear",
                "a horizontal band of the beach tears sideways",
                {"top": 30, "band": 30, "dx": 24}),
    ]
    for spec in specs:
        spec.seed = zlib.crc32(spec.key.encode("utf-8")) & 0xFFFFFFFF
    return specs


_CATALOGUE = _catalogue()
_BY_KEY = {s.key: s for s in _CATALOGUE}


def list_bugs() -> list[BugSpec]:
    return list(_CATALOGUE)


def get_bug(key: str) -> BugSpec:
    try:
        return _BY_KEY[key]
    except KeyError:
        raise KeyError(f"unknown bug key: {key}") from None


def verify_visibility(spec: BugSpec, bundles=None, config: GameConfig | None = None) -> int:
    """Prove the bug changes pixels in at least one snapshot of an episode.

    Returns the count of affected snapshots; raises IneffectiveBugError
    when the hooked render is identical everywhere, which would make the
    bug undetectable by construction.
    """
    from .compositor import render_scene

    if bundles is None:
        cfg = config if config is not None else GameConfig(canvas_w=640, canvas_h=360)
        if cfg.asset_pack is None:
            cfg = replace(cfg, asset_pack=make_asset_pack())
        bundles = run_test_case(cfg)
    hook = make_hook(spec)
    affected = 0
    for bundle in bundles:
        hooked = render_scene(bundle.cor, bundle.assets, bundle.canvas_w,
                              bundle.canvas_h, hook=hook,
                              background=bundle.cor.background)
        if not np.array_equal(hooked, bundle.screenshot):
            affected += 1
    if affected == 0:
        raise IneffectiveBugError(f"ineffective bug magnitude: {spec.key}")
    return affected
