"""Deterministic software rasterizer for COR scenes.

Rendering rules are fixed so that a screenshot can be reproduced
bit-for-bit from the scene document and the asset store alone:

- y down, origin top left, rotation in clockwise radians
- painter's algorithm, siblings ordered by (z_index, child order)
- source-over compositing, round to nearest with ties away from zero
- bilinear resampling in premultiplied-alpha space for general
  transforms; transforms that are a signed axis permutation plus an
  integer translation (identity, integer moves, quarter-turn rotations,
  axis flips) take an exact nearest-texel path so pixels copy through
  untouched

The exact path is what makes bug-free simulator runs reproducible down
to the last bit; the bilinear path covers everything else, including
transforms injected by rendering faults.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bundle import Asset, AssetStore, SceneGraph, SceneNode
from .errors import RenderError

_EPS_EXACT = 1e-9
_EPS_DEGENERATE = 1e-12


@dataclass(frozen=True)
class AffineTransform:
    """2D affine map: x' = a*u + c*v + tx, y' = b*u + d*v + ty."""

    a: float
    b: float
    c: float
    d: float
    tx: float
    ty: float

    @staticmethod
    def identity() -> "AffineTransform":
        return AffineTransform(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    def compose(self, o: "AffineTransform") -> "AffineTransform":
        """self after o (o is applied first)."""
        return AffineTransform(
            a=self.a * o.a + self.c * o.b,
            b=self.b * o.a + self.d * o.b,
            c=self.a * o.c + self.c * o.d,
            d=self.b * o.c + self.d * o.d,
            tx=self.a * o.tx + self.c * o.ty + self.tx,
            ty=self.b * o.tx + self.d * o.ty + self.ty,
        )

    def apply(self, u: float, v: float) -> tuple[float, float]:
        return (self.a * u + self.c * v + self.tx, self.b * u + self.d * v + self.ty)

    def determinant(self) -> float:
        return self.a * self.d - self.c * self.b

    def invert(self) -> "AffineTransform":
        det = self.determinant()
        if abs(det) < _EPS_DEGENERATE:
            raise RenderError("degenerate transform")
        ia, ib, ic, id_ = self.d / det, -self.b / det, -self.c / det, self.a / det
        return AffineTransform(
            a=ia, b=ib, c=ic, d=id_,
            tx=-(ia * self.tx + ic * self.ty),
            ty=-(ib * self.tx + id_ * self.ty),
        )


@dataclass
class RenderLayer:
    """One node rasterized onto a canvas-sized RGBA8 image."""

    image: np.ndarray
    node_id: str
    draw_rank: int


@dataclass(frozen=True)
class BugHook:
    """Render-time fault injection seam.

    Hooks only touch what gets drawn; the scene document and the asset
    store are never modified, so snapshots taken with a hook carry a
    clean COR next to a corrupted screenshot.
    """

    bug_key: str | None = None
    suppress_ids: frozenset = frozenset()
    force_draw_ids: frozenset = frozenset()
    node_override: Callable[[SceneNode], SceneNode] | None = None
    asset_override: Callable[[SceneNode, np.ndarray], np.ndarray] | None = None
    post_draw: Callable[[SceneNode, np.ndarray, tuple[int, int]], np.ndarray] | None = None
    reorder: Callable[[list], list] | None = None


def _round_u8(x: np.ndarray) -> np.ndarray:
    # round half away from zero; inputs are nonnegative here
    return np.floor(x + 0.5).astype(np.uint8)


def frame_size(node: SceneNode, assets: AssetStore) -> tuple[int, int]:
    """Size of the node's drawable frame in local units."""
    if node.kind == "container":
        return (0, 0)
    if node.kind == "tiling_sprite":
        if not node.render_size_w or not node.render_size_h:
            raise RenderError(f"tiling sprite {node.id} has no render_size")
        return (int(node.render_size_w), int(node.render_size_h))
    rect = _frame_rect(node, _resolve_asset(node, assets))
    return (rect[2], rect[3])


def _resolve_asset(node: SceneNode, assets: AssetStore) -> Asset:
    if node.asset_id is None or node.asset_id not in assets:
        raise RenderError(f"unresolved asset for node {node.id}")
    return assets[node.asset_id]


def _frame_rect(node: SceneNode, asset: Asset) -> tuple[int, int, int, int]:
    ah, aw = asset.image.shape[:2]
    if node.kind == "animated_sprite":
        count = node.frame_count or 1
        base = node.frame_rect or (0, 0, aw // count, ah)
        index = node.frame_index or 0
        rect = (base[0] + index * base[2], base[1], base[2], base[3])
    else:
        rect = node.frame_rect or (0, 0, aw, ah)
    fx, fy, fw, fh = rect
    if fw <= 0 or fh <= 0 or fx < 0 or fy < 0 or fx + fw > aw or fy + fh > ah:
        raise RenderError(f"frame outside asset bounds for node {node.id}")
    return rect


def world_transform(node: SceneNode, scene: SceneGraph, assets: AssetStore) -> AffineTransform:
    """Compose translate(x, y) * rotate * scale * translate(-anchor) from the root down."""
    if node.id not in scene.nodes:
        raise RenderError(f"node not in tree: {node.id}")
    chain: list[SceneNode] = []
    cur: SceneNode | None = node
    seen = set()
    while cur is not None:
        if cur.id in seen:
            raise RenderError(f"parent cycle at node {cur.id}")
        seen.add(cur.id)
        chain.append(cur)
        if cur.parent_id is None:
            cur = None
        else:
            cur = scene.nodes.get(cur.parent_id)
            if cur is None:
                raise RenderError(f"node not in tree: {chain[-1].id}")
    m = AffineTransform.identity()
    for n in reversed(chain):
        m = m.compose(_local_transform(n, assets))
    return m


def _local_transform(node: SceneNode, assets: AssetStore) -> AffineTransform:
    cos = np.cos(node.rotation)
    sin = np.sin(node.rotation)
    a = cos * node.scale_x
    b = sin * node.scale_x
    c = -sin * node.scale_y
    d = cos * node.scale_y
    if node.kind == "container":
        e = f = 0.0
    else:
        fw, fh = frame_size(node, assets)
        e = -node.anchor_x * fw
        f = -node.anchor_y * fh
    return AffineTransform(a=a, b=b, c=c, d=d, tx=node.x + a * e + c * f, ty=node.y + b * e + d * f)


def draw_order(scene: SceneGraph, force_draw_ids: frozenset = frozenset()) -> list[str]:
    """Drawable node ids in paint order: DFS, siblings by (z_index, child order).

    An invisible node hides its whole subtree. Containers order their
    children but are not themselves emitted.
    """
    out: list[str] = []
    seen: set[str] = set()

    def visit(node_id: str) -> None:
        if node_id in seen or node_id not in scene.nodes:
            return
        seen.add(node_id)
        node = scene.nodes[node_id]
        if not node.visible and node_id not in force_draw_ids:
            return
        if node.kind != "container":
            out.append(node_id)
        kids = [c for c in node.children if c in scene.nodes]
        for child_id in sorted(kids, key=lambda c: scene.nodes[c].z_index):
            visit(child_id)

    visit(scene.root_id)
    return out


def _effective_alpha(node: SceneNode, scene: SceneGraph) -> float:
    """Node alpha multiplied through its container ancestry."""
    alpha = float(node.alpha)
    cur = node
    seen = {node.id}
    while cur.parent_id is not None and cur.parent_id in scene.nodes:
        cur = scene.nodes[cur.parent_id]
        if cur.id in seen:
            break
        seen.add(cur.id)
        alpha *= float(cur.alpha)
    return alpha


def _near_int(x: float) -> int | None:
    r = np.rint(x)
    return int(r) if abs(x - r) < _EPS_EXACT else None


def _signed_permutation(m: AffineTransform):
    """Return (r00, r01, r10, r11, txi, tyi) ints if m is a signed axis
    permutation with integer translation, else None."""
    ints = []
    for v in (m.a, m.c, m.b, m.d):
        i = _near_int(v)
        if i is None or i not in (-1, 0, 1):
            return None
        ints.append(i)
    a, c, b, d = ints
    if not ((abs(a) == 1 and c == 0 and b == 0 and abs(d) == 1)
            or (a == 0 and abs(c) == 1 and abs(b) == 1 and d == 0)):
        return None
    txi = _near_int(m.tx)
    tyi = _near_int(m.ty)
    if txi is None or tyi is None:
        return None
    return (a, c, b, d, txi, tyi)


def _node_frame(node: SceneNode, assets: AssetStore,
                asset_override: Callable | None) -> np.ndarray:
    """The RGBA frame the node draws this tick, color maps applied."""
    asset = _resolve_asset(node, assets)
    if node.kind == "tiling_sprite":
        fx, fy, fw, fh = node.frame_rect or (0, 0, asset.image.shape[1], asset.image.shape[0])
        if fw <= 0 or fh <= 0 or fx + fw > asset.image.shape[1] or fy + fh > asset.image.shape[0]:
            raise RenderError(f"frame outside asset bounds for node {node.id}")
        frame = asset.image[fy:fy + fh, fx:fx + fw]
    else:
        fx, fy, fw, fh = _frame_rect(node, asset)
        frame = asset.image[fy:fy + fh, fx:fx + fw]
    if asset_override is not None:
        frame = asset_override(node, frame.copy())
        if frame.shape != (fh, fw, 4) or frame.dtype != np.uint8:
            raise RenderError(f"asset override changed frame shape for node {node.id}")
    return frame


def _render_patch(node: SceneNode, scene: SceneGraph, assets: AssetStore,
                  canvas_w: int, canvas_h: int,
                  asset_override: Callable | None = None):
    """Rasterize one node; returns (patch RGBA8, x0, y0) or None when the
    node lands entirely off canvas."""
    m = world_transform(node, scene, assets)
    if abs(m.determinant()) < _EPS_DEGENERATE:
        raise RenderError("degenerate transform")
    frame = _node_frame(node, assets, asset_override)
    tiling = node.kind == "tiling_sprite"
    if tiling:
        lw, lh = int(node.render_size_w), int(node.render_size_h)
    else:
        lh, lw = frame.shape[:2]

    corners = [m.apply(u, v) for u, v in ((0, 0), (lw, 0), (0, lh), (lw, lh))]
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    # bilinear sampling can spill up to half a local unit past the quad
    spill = int(np.ceil(0.5 * max(np.hypot(m.a, m.b), np.hypot(m.c, m.d)))) + 1
    x0 = max(int(np.floor(min(xs))) - spill, 0)
    y0 = max(int(np.floor(min(ys))) - spill, 0)
    x1 = min(int(np.ceil(max(xs))) + spill, canvas_w)
    y1 = min(int(np.ceil(max(ys))) + spill, canvas_h)
    if x0 >= x1 or y0 >= y1:
        return None

    eff_alpha = _effective_alpha(node, scene)
    perm = _signed_permutation(m)
    if perm is not None and (not tiling or _tiling_is_integral(node)):
        patch = _gather_exact(node, frame, perm, x0, y0, x1, y1, lw, lh, tiling)
    else:
        patch = _gather_bilinear(node, frame, m, x0, y0, x1, y1, lw, lh, tiling)

    if eff_alpha < 1.0:
        alpha = patch[..., 3].astype(np.float64) * eff_alpha
        patch = patch.copy()
        patch[..., 3] = _round_u8(alpha)
    return patch, x0, y0


def _tiling_is_integral(node: SceneNode) -> bool:
    return (
        _near_int(node.tile_scale_x) == 1
        and _near_int(node.tile_scale_y) == 1
        and _near_int(node.tile_offset_x) is not None
        and _near_int(node.tile_offset_y) is not None
    )


def _gather_exact(node, frame, perm, x0, y0, x1, y1, lw, lh, tiling):
    r00, r01, r10, r11, txi, tyi = perm
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs - txi
    dy = ys - tyi
    # inverse of a signed permutation is its transpose; pixel centers sit
    # at half-integers so the floor reduces to pure integer arithmetic
    u = r00 * dx + r10 * dy + (0 if r00 + r10 > 0 else -1)
    v = r01 * dx + r11 * dy + (0 if r01 + r11 > 0 else -1)
    patch = np.zeros((y1 - y0, x1 - x0, 4), dtype=np.uint8)
    valid = (u >= 0) & (u < lw) & (v >= 0) & (v < lh)
    if tiling:
        fh, fw = frame.shape[:2]
        tu = (u - int(np.rint(node.tile_offset_x))) % fw
        tv = (v - int(np.rint(node.tile_offset_y))) % fh
        patch[valid] = frame[tv[valid], tu[valid]]
    else:
        patch[valid] = frame[v[valid], u[valid]]
    return patch


def _gather_bilinear(node, frame, m, x0, y0, x1, y1, lw, lh, tiling):
    inv = m.invert()
    ys, xs = np.mgrid[y0:y1, x0:x1]
    px = xs + 0.5
    py = ys + 0.5
    u = inv.a * px + inv.c * py + inv.tx
    v = inv.b * px + inv.d * py + inv.ty

    fh, fw = frame.shape[:2]
    falpha = frame[..., 3].astype(np.float64)
    fpremul = frame[..., :3].astype(np.float64) * (falpha / 255.0)[..., None]

    if tiling:
        su = (u - node.tile_offset_x) / node.tile_scale_x - 0.5
        sv = (v - node.tile_offset_y) / node.tile_scale_y - 0.5
    else:
        su = u - 0.5
        sv = v - 0.5
    # snap samples that are numerically on the texel lattice so that
    # analytically exact transforms stay exact
    su = np.where(np.abs(su - np.rint(su)) < _EPS_EXACT, np.rint(su), su)
    sv = np.where(np.abs(sv - np.rint(sv)) < _EPS_EXACT, np.rint(sv), sv)
    iu0 = np.floor(su).astype(np.int64)
    iv0 = np.floor(sv).astype(np.int64)
    fu = su - iu0
    fv = sv - iv0

    acc_p = np.zeros((y1 - y0, x1 - x0, 3), dtype=np.float64)
    acc_a = np.zeros((y1 - y0, x1 - x0), dtype=np.float64)
    for du, dv, w in (
        (0, 0, (1 - fu) * (1 - fv)),
        (1, 0, fu * (1 - fv)),
        (0, 1, (1 - fu) * fv),
        (1, 1, fu * fv),
    ):
        iu = iu0 + du
        iv = iv0 + dv
        if tiling:
            cu = iu % fw
            cv = iv % fh
            inside = np.ones_like(iu, dtype=bool)
        else:
            inside = (iu >= 0) & (iu < fw) & (iv >= 0) & (iv < fh)
            cu = np.clip(iu, 0, fw - 1)
            cv = np.clip(iv, 0, fh - 1)
        wa = np.where(inside, w, 0.0)
        acc_p += fpremul[cv, cu] * wa[..., None]
        acc_a += falpha[cv, cu] * wa

    if tiling:
        viewport = (u >= 0) & (u < lw) & (v >= 0) & (v < lh)
        acc_p[~viewport] = 0.0
        acc_a[~viewport] = 0.0

    patch = np.zeros((y1 - y0, x1 - x0, 4), dtype=np.uint8)
    has = acc_a > 0.5
    straight = np.zeros_like(acc_p)
    np.divide(acc_p * 255.0, acc_a[..., None], out=straight, where=has[..., None])
    patch[..., :3] = _round_u8(np.clip(straight, 0.0, 255.0))
    patch[..., 3] = _round_u8(np.clip(acc_a, 0.0, 255.0))
    patch[~has] = 0
    return patch


def rasterize_node(node: SceneNode, scene: SceneGraph, assets: AssetStore,
                   canvas_w: int, canvas_h: int) -> RenderLayer:
    """Rasterize one visible drawable node onto a canvas-sized layer."""
    if node.kind == "container":
        raise RenderError(f"container node {node.id} is not drawable")
    if not node.visible:
        raise RenderError(f"node {node.id} is not visible")
    image = np.zeros((canvas_h, canvas_w, 4), dtype=np.uint8)
    res = _render_patch(node, scene, assets, canvas_w, canvas_h)
    if res is not None:
        patch, x0, y0 = res
        image[y0:y0 + patch.shape[0], x0:x0 + patch.shape[1]] = patch
    order = draw_order(scene)
    rank = order.index(node.id) if node.id in order else -1
    return RenderLayer(image=image, node_id=node.id, draw_rank=rank)


def _blend(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    """source-over in premultiplied space, both arguments straight RGBA8."""
    sa = src[..., 3].astype(np.float64) / 255.0
    da = dst[..., 3].astype(np.float64) / 255.0
    sp = src[..., :3].astype(np.float64) * sa[..., None]
    dp = dst[..., :3].astype(np.float64) * da[..., None]
    keep = (1.0 - sa)[..., None]
    op = sp + dp * keep
    oa = sa + da * keep[..., 0]
    out = np.zeros_like(src)
    has = oa > 0
    rgb = np.zeros_like(op)
    np.divide(op * 255.0, (oa * 255.0)[..., None], out=rgb, where=has[..., None])
    out[..., :3] = _round_u8(np.clip(rgb, 0.0, 255.0))
    out[..., 3] = _round_u8(np.clip(oa * 255.0, 0.0, 255.0))
    return out


def alpha_composite(dst: np.ndarray, src) -> np.ndarray:
    """src over dst; src may be a RenderLayer or an RGBA8 array."""
    src_img = src.image if isinstance(src, RenderLayer) else src
    if dst.shape != src_img.shape:
        raise RenderError("alpha_composite size mismatch")
    return _blend(dst, src_img)


def _paint_order(scene: SceneGraph, hook: BugHook | None) -> list[str]:
    if hook is None:
        return draw_order(scene)
    order = draw_order(scene, force_draw_ids=hook.force_draw_ids)
    if hook.reorder is not None:
        order = list(hook.reorder(list(order)))
    if hook.suppress_ids:
        order = [nid for nid in order if nid not in hook.suppress_ids]
    return order


def render_scene(scene: SceneGraph, assets: AssetStore, canvas_w: int, canvas_h: int,
                 hook: BugHook | None = None,
                 background: tuple[int, int, int] | None = None) -> np.ndarray:
    """Render the whole scene to an opaque RGBA8 screenshot."""
    if canvas_w <= 0 or canvas_h <= 0:
        raise RenderError("canvas dimensions must be positive")
    bg = background if background is not None else scene.background
    canvas = np.empty((canvas_h, canvas_w, 4), dtype=np.uint8)
    canvas[..., 0] = bg[0]
    canvas[..., 1] = bg[1]
    canvas[..., 2] = bg[2]
    canvas[..., 3] = 255

    for nid in _paint_order(scene, hook):
        node = scene.nodes[nid]
        eff = node
        if hook is not None and hook.node_override is not None:
            eff = hook.node_override(node)
        res = _render_patch(
            eff, scene, assets, canvas_w, canvas_h,
            asset_override=hook.asset_override if hook is not None else None,
        )
        if res is None:
            continue
        patch, x0, y0 = res
        if hook is not None and hook.post_draw is not None:
            patch = hook.post_draw(node, patch, (x0, y0))
        region = canvas[y0:y0 + patch.shape[0], x0:x0 + patch.shape[1]]
        # restricting the blend to the patch footprint is exact: outside it
        # the source alpha is zero and source-over is the identity
        opaque = patch[..., 3] == 255
        blended = _blend(region[~opaque], patch[~opaque]) if not opaque.all() else None
        region[opaque] = patch[opaque]
        if blended is not None:
            region[~opaque] = blended
    return canvas
