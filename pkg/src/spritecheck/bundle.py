"""Scene-graph snapshots: the canvas objects representation (COR), the
asset store, and the on-disk bundle layout.

A snapshot bundle freezes one animation frame of a scene: the object tree
with transforms and asset links, the screenshot taken at the same tick,
and every bitmap the tree references. Bundles round-trip through a plain
directory (manifest.json, cor.json, screenshot.png, assets/*.png) so that
captures produced elsewhere can be analyzed by this package unchanged.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BundleError,
    IncompleteBundleError,
    MalformedCorError,
    SizeMismatchError,
)

FORMAT_VERSION = 1

NODE_KINDS = ("container", "sprite", "tiling_sprite", "animated_sprite")

_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(eq=False)
class SceneNode:
    """One drawable object or grouping container in the scene tree.

    Coordinates are canvas pixels, y down, origin at the top left.
    Rotation is clockwise radians. anchor_x/anchor_y locate the pivot
    inside the node's frame as fractions of its size.
    """

    id: str
    kind: str = "container"
    parent_id: str | None = None
    children: list[str] = field(default_factory=list)
    x: float = 0.0
    y: float = 0.0
    scale_x: float = 1.0
    scale_y: float = 1.0
    rotation: float = 0.0
    anchor_x: float = 0.0
    anchor_y: float = 0.0
    alpha: float = 1.0
    visible: bool = True
    z_index: int = 0
    asset_id: str | None = None
    frame_rect: tuple[int, int, int, int] | None = None
    tile_offset_x: float = 0.0
    tile_offset_y: float = 0.0
    tile_scale_x: float = 1.0
    tile_scale_y: float = 1.0
    render_size_w: int | None = None
    render_size_h: int | None = None
    frame_index: int | None = None
    frame_count: int | None = None

    def __eq__(self, other):
        if not isinstance(other, SceneNode):
            return NotImplemented
        for f in fields(self):
            if getattr(self, f.name) != getattr(other, f.name):
                return False
        return True


@dataclass(eq=False)
class SceneGraph:
    """A single-rooted node table plus the canvas background colour."""

    root_id: str
    nodes: dict[str, SceneNode]
    background: tuple[int, int, int] = (135, 206, 235)

    def node(self, node_id: str) -> SceneNode:
        return self.nodes[node_id]

    def children_of(self, node_id: str) -> list[SceneNode]:
        return [self.nodes[c] for c in self.nodes[node_id].children if c in self.nodes]

    def __eq__(self, other):
        if not isinstance(other, SceneGraph):
            return NotImplemented
        return (
            self.root_id == other.root_id
            and self.background == other.background
            and list(self.nodes) == list(other.nodes)
            and all(self.nodes[k] == other.nodes[k] for k in self.nodes)
        )


def _pixel_checksum(image: np.ndarray) -> str:
    """Content address of a bitmap: independent of the PNG encoder used."""
    h = hashlib.sha256()
    h.update(np.uint32(image.shape[1]).tobytes())
    h.update(np.uint32(image.shape[0]).tobytes())
    h.update(np.ascontiguousarray(image).tobytes())
    return "sha256:" + h.hexdigest()


@dataclass(eq=False)
class Asset:
    """An RGBA8 bitmap plus provenance."""

    image: np.ndarray
    source_url: str | None = None
    checksum: str = ""

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 4 or self.image.dtype != np.uint8:
            raise BundleError("assets must be RGBA8 bitmaps")
        if self.image.shape[0] <= 0 or self.image.shape[1] <= 0:
            raise BundleError("assets must have positive dimensions")
        if not self.checksum:
            self.checksum = _pixel_checksum(self.image)

    def __eq__(self, other):
        if not isinstance(other, Asset):
            return NotImplemented
        return (
            np.array_equal(self.image, other.image)
            and self.source_url == other.source_url
            and self.checksum == other.checksum
        )


class AssetStore:
    """Maps asset ids to bitmaps; content-addressed via pixel checksums."""

    def __init__(self, assets: dict[str, Asset] | None = None):
        self._assets: dict[str, Asset] = dict(assets or {})

    def add(self, asset_id: str, image: np.ndarray, source_url: str | None = None) -> Asset:
        if not _ID_RE.match(asset_id):
            raise BundleError(f"invalid asset id {asset_id!r}")
        asset = Asset(image=image, source_url=source_url)
        self._assets[asset_id] = asset
        return asset

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._assets

    def __getitem__(self, asset_id: str) -> Asset:
        return self._assets[asset_id]

    def __iter__(self):
        return iter(self._assets)

    def __len__(self) -> int:
        return len(self._assets)

    def items(self):
        return self._assets.items()

    def __eq__(self, other):
        if not isinstance(other, AssetStore):
            return NotImplemented
        return self._assets == other._assets  # dict equality: order-insensitive


@dataclass(eq=False)
class SnapshotBundle:
    """A frozen scene, its synchronized screenshot, and the referenced assets."""

    cor: SceneGraph
    screenshot: np.ndarray
    assets: AssetStore
    canvas_w: int
    canvas_h: int
    run_id: str = "run"
    snapshot_index: int = 0
    timestamp_ms: int = 0
    snapshot_tick: int | None = None

    def __eq__(self, other):
        if not isinstance(other, SnapshotBundle):
            return NotImplemented
        return (
            self.cor == other.cor
            and np.array_equal(self.screenshot, other.screenshot)
            and self.assets == other.assets
            and self.canvas_w == other.canvas_w
            and self.canvas_h == other.canvas_h
            and self.run_id == other.run_id
            and self.snapshot_index == other.snapshot_index
            and self.timestamp_ms == other.timestamp_ms
            and self.snapshot_tick == other.snapshot_tick
        )


@dataclass(frozen=True)
class Violation:
    """One structural rule broken by one node."""

    node_id: str
    rule: str
    message: str


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def validate_cor(scene: SceneGraph, assets: AssetStore) -> list[Violation]:
    """Check every structural rule; returns violations instead of raising.

    Total by design: arbitrary node tables (bad links, bad field values)
    come back as a list, never as an exception.
    """
    out: list[Violation] = []
    nodes = scene.nodes

    roots = [n for n in nodes.values() if n.parent_id is None]
    if scene.root_id not in nodes:
        out.append(Violation(scene.root_id, "root", "root_id not present in node table"))
    if len(roots) > 1:
        out.append(Violation(scene.root_id, "root", "multiple roots"))
    elif not roots:
        out.append(Violation(scene.root_id, "root", "no root node"))

    for nid, n in nodes.items():
        try:
            if n.id != nid:
                out.append(Violation(nid, "identity", "node keyed under a different id"))
            if n.kind not in NODE_KINDS:
                out.append(Violation(nid, "kind", f"unknown kind {n.kind!r}"))
                continue
            if n.parent_id is not None:
                parent = nodes.get(n.parent_id)
                if parent is None:
                    out.append(Violation(nid, "link", f"parent {n.parent_id} missing"))
                elif nid not in parent.children:
                    out.append(Violation(nid, "link", f"not listed in children of {n.parent_id}"))
            for c in n.children:
                if c not in nodes:
                    out.append(Violation(nid, "link", f"child {c} missing"))
                elif nodes[c].parent_id != nid:
                    out.append(Violation(c, "link", f"parent_id does not point back to {nid}"))

            if not (_is_real(n.alpha) and 0.0 <= n.alpha <= 1.0):
                out.append(Violation(nid, "alpha", "alpha outside [0, 1]"))
            if not (_is_real(n.anchor_x) and 0.0 <= n.anchor_x <= 1.0) or not (
                _is_real(n.anchor_y) and 0.0 <= n.anchor_y <= 1.0
            ):
                out.append(Violation(nid, "anchor", "anchor outside [0, 1]"))
            if not _is_real(n.scale_x) or not _is_real(n.scale_y) or n.scale_x == 0 or n.scale_y == 0:
                out.append(Violation(nid, "scale", "scale must be nonzero and finite"))
            for attr in ("x", "y", "rotation"):
                if not _is_real(getattr(n, attr)):
                    out.append(Violation(nid, "transform", f"{attr} must be a finite real"))

            if n.kind == "container":
                continue

            if n.visible:
                if n.asset_id is None:
                    out.append(Violation(nid, "asset", "visible drawable without asset_id"))
                elif n.asset_id not in assets:
                    out.append(Violation(nid, "asset", f"references unknown asset {n.asset_id}"))

            asset = assets[n.asset_id] if (n.asset_id is not None and n.asset_id in assets) else None
            if n.frame_rect is not None:
                ok = (
                    len(n.frame_rect) == 4
                    and all(isinstance(v, int) and not isinstance(v, bool) for v in n.frame_rect)
                    and n.frame_rect[2] > 0
                    and n.frame_rect[3] > 0
                )
                if ok and asset is not None:
                    fx, fy, fw, fh = n.frame_rect
                    ah, aw = asset.image.shape[:2]
                    ok = 0 <= fx and 0 <= fy and fx + fw <= aw and fy + fh <= ah
                if not ok:
                    out.append(Violation(nid, "frame_rect", "frame_rect outside asset bounds"))

            if n.kind == "animated_sprite":
                if n.frame_count is None or n.frame_count <= 0:
                    out.append(Violation(nid, "frames", "animated sprite without positive frame_count"))
                elif n.frame_index is None or not (0 <= n.frame_index < n.frame_count):
                    out.append(Violation(nid, "frames", "frame_index out of range"))

            if n.kind == "tiling_sprite":
                if (
                    n.render_size_w is None
                    or n.render_size_h is None
                    or n.render_size_w <= 0
                    or n.render_size_h <= 0
                ):
                    out.append(Violation(nid, "render_size", "tiling sprite without positive render_size"))
                if n.tile_scale_x == 0 or n.tile_scale_y == 0:
                    out.append(Violation(nid, "tile_scale", "tile_scale must be nonzero"))
        except Exception as exc:  # totality guard for hostile field values
            out.append(Violation(str(nid), "internal", f"unvalidatable node: {exc}"))

    return out


# ---------------------------------------------------------------------------
# serialization

_NODE_DEFAULTS = SceneNode(id="")


def _node_to_doc(n: SceneNode) -> dict:
    doc: dict = {"id": n.id, "kind": n.kind, "parent_id": n.parent_id, "children": list(n.children)}
    for f in fields(SceneNode):
        if f.name in doc:
            continue
        v = getattr(n, f.name)
        if v != getattr(_NODE_DEFAULTS, f.name):
            doc[f.name] = list(v) if isinstance(v, tuple) else v
    return doc


def _node_from_doc(doc: dict) -> SceneNode:
    known = {f.name for f in fields(SceneNode)}
    kwargs = {k: v for k, v in doc.items() if k in known}
    if kwargs.get("frame_rect") is not None:
        kwargs["frame_rect"] = tuple(kwargs["frame_rect"])
    if "children" in kwargs:
        kwargs["children"] = list(kwargs["children"])
    return SceneNode(**kwargs)


def scene_to_doc(scene: SceneGraph) -> dict:
    return {
        "format": "spritecheck-cor",
        "version": FORMAT_VERSION,
        "root_id": scene.root_id,
        "background": list(scene.background),
        "nodes": [_node_to_doc(n) for n in scene.nodes.values()],
    }


def scene_from_doc(doc: dict) -> SceneGraph:
    try:
        nodes = {}
        for nd in doc["nodes"]:
            node = _node_from_doc(nd)
            nodes[node.id] = node
        background = tuple(int(v) for v in doc.get("background", (135, 206, 235)))
        return SceneGraph(root_id=doc["root_id"], nodes=nodes, background=background)
    except MalformedCorError:
        raise
    except Exception as exc:
        raise MalformedCorError(f"malformed COR: {exc}") from exc


def _write_png(path: Path, image: np.ndarray) -> None:
    Image.fromarray(image, mode="RGBA").save(path, format="PNG")


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGBA"), dtype=np.uint8)
    return arr


def _json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def save_bundle(bundle: SnapshotBundle, path: str | Path) -> Path:
    """Write the bundle directory; same bundle twice gives identical bytes."""
    root = Path(path)
    (root / "assets").mkdir(parents=True, exist_ok=True)

    if bundle.screenshot.shape[:2] != (bundle.canvas_h, bundle.canvas_w):
        raise SizeMismatchError("screenshot/canvas size mismatch")

    _write_png(root / "screenshot.png", bundle.screenshot)
    cor_bytes = _json_bytes(scene_to_doc(bundle.cor))
    (root / "cor.json").write_bytes(cor_bytes)

    assets_doc = {}
    for asset_id, asset in bundle.assets.items():
        if not _ID_RE.match(asset_id):
            raise BundleError(f"invalid asset id {asset_id!r}")
        _write_png(root / "assets" / f"{asset_id}.png", asset.image)
        assets_doc[asset_id] = {
            "file": f"assets/{asset_id}.png",
            "checksum": asset.checksum,
            "source_url": asset.source_url,
        }

    manifest = {
        "format": "spritecheck-bundle",
        "version": FORMAT_VERSION,
        "run_id": bundle.run_id,
        "snapshot_index": bundle.snapshot_index,
        "canvas_w": bundle.canvas_w,
        "canvas_h": bundle.canvas_h,
        "timestamp_ms": bundle.timestamp_ms,
        "snapshot_tick": bundle.snapshot_tick,
        "files": {"screenshot": "screenshot.png", "cor": "cor.json"},
        "checksums": {
            "screenshot": _pixel_checksum(bundle.screenshot),
            "cor": "sha256:" + hashlib.sha256(cor_bytes).hexdigest(),
        },
        "assets": assets_doc,
    }
    (root / "manifest.json").write_bytes(_json_bytes(manifest))
    return root


def load_bundle(path: str | Path) -> SnapshotBundle:
    """Read and fully verify a bundle directory.

    Raises IncompleteBundleError for missing files, MalformedCorError for
    schema violations, SizeMismatchError when the screenshot disagrees
    with the declared canvas, BundleError for checksum mismatches.
    """
    root = Path(path)

    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise IncompleteBundleError("incomplete bundle: missing manifest.json")
    try:
        manifest = json.loads(manifest_path.read_bytes())
    except Exception as exc:
        raise MalformedCorError(f"malformed COR: unreadable manifest ({exc})") from exc

    files = manifest.get("files", {})
    shot_rel = files.get("screenshot", "screenshot.png")
    cor_rel = files.get("cor", "cor.json")

    shot_path = root / shot_rel
    if not shot_path.is_file():
        raise IncompleteBundleError(f"incomplete bundle: missing {shot_rel}")
    cor_path = root / cor_rel
    if not cor_path.is_file():
        raise IncompleteBundleError(f"incomplete bundle: missing {cor_rel}")

    screenshot = _read_png(shot_path)
    canvas_w = int(manifest.get("canvas_w", 0))
    canvas_h = int(manifest.get("canvas_h", 0))
    if screenshot.shape[:2] != (canvas_h, canvas_w):
        raise SizeMismatchError("screenshot/canvas size mismatch")

    checksums = manifest.get("checksums", {})
    if "screenshot" in checksums and _pixel_checksum(screenshot) != checksums["screenshot"]:
        raise BundleError("checksum mismatch for screenshot.png")
    cor_bytes = cor_path.read_bytes()
    if "cor" in checksums:
        if "sha256:" + hashlib.sha256(cor_bytes).hexdigest() != checksums["cor"]:
            raise BundleError(f"checksum mismatch for {cor_rel}")

    try:
        cor_doc = json.loads(cor_bytes)
    except Exception as exc:
        raise MalformedCorError(f"malformed COR: invalid JSON ({exc})") from exc
    scene = scene_from_doc(cor_doc)

    assets = AssetStore()
    for asset_id, entry in manifest.get("assets", {}).items():
        asset_path = root / entry["file"]
        if not asset_path.is_file():
            raise IncompleteBundleError(f"incomplete bundle: missing {entry['file']}")
        image = _read_png(asset_path)
        asset = assets.add(asset_id, image, source_url=entry.get("source_url"))
        if entry.get("checksum") and asset.checksum != entry["checksum"]:
            raise BundleError(f"checksum mismatch for asset {asset_id}")

    violations = validate_cor(scene, assets)
    if violations:
        v = violations[0]
        raise MalformedCorError(f"malformed COR: node {v.node_id} {v.message}")

    for asset_id in assets:
        assets[asset_id].image.setflags(write=False)
    screenshot.setflags(write=False)

    return SnapshotBundle(
        cor=scene,
        screenshot=screenshot,
        assets=assets,
        canvas_w=canvas_w,
        canvas_h=canvas_h,
        run_id=str(manifest.get("run_id", "run")),
        snapshot_index=int(manifest.get("snapshot_index", 0)),
        timestamp_ms=int(manifest.get("timestamp_ms", 0)),
        snapshot_tick=manifest.get("snapshot_tick"),
    )
