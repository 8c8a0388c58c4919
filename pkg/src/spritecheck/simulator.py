"""Deterministic catching-game simulator used as the test bed.

A small sprite game in the spirit of browser canvas games: parallax
tiling backgrounds, decor sprites, a four-frame animated player that
chases a scripted pointer, and seeded projectiles that tumble down to
be caught or missed. One miss loses the life and ends the test case.

Everything is engineered for bit-reproducibility:

- all positions, scroll offsets, and spawn columns are integers
- rotations are quarter turns, so every draw takes the rasterizer's
  exact path and bug-free screenshots reproduce from the COR exactly
- the only randomness is a seeded splittable generator; the pointer
  follows a fixed triangle wave

Snapshots freeze the scene and screenshot at evenly spaced ticks of the
episode, title screen and game-over included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bundle import AssetStore, SceneGraph, SceneNode, SnapshotBundle
from .compositor import BugHook, render_scene
from .errors import SimulationError
from .rng import SplitMix64

BACKGROUND = (135, 206, 235)

# fault targets inside the player and ship frames, in frame coordinates
BEARD_RECT = (20, 24, 24, 12)
SAIL_RECT = (52, 8, 36, 28)

INITIAL_NODE_COUNT = 12  # root + 2 clouds + 4 layers + ship + bunny + fallen + player + button

PHASES = ("title", "playing", "life_lost", "ended")

_CATCH_HALFWIDTH = 70
_CATCH_DEPTH = 48  # vertical extent of the catch window above the miss line
_BACKSTOP_TICK = 360  # a guaranteed-miss projectile ends every episode
_LIFE_LOST_TICKS = 32
_TICK_CAP = 1800
_BACKSTOP_SPEED = 4


@dataclass(frozen=True)
class GameConfig:
    canvas_w: int = 1280
    canvas_h: int = 720
    seed: int = 20220531
    frame_rate: int = 60
    snapshot_count: int = 10
    player_speed: float = 8.0
    spawn_rate: float = 1.2  # expected projectiles per second
    asset_pack: AssetStore | None = None


@dataclass(frozen=True)
class PointerInput:
    x: float
    y: float = 0.0
    click: bool = False


@dataclass
class Projectile:
    spawn_tick: int
    vy: int


@dataclass
class GameState:
    config: GameConfig
    phase: str
    tick: int
    scene: SceneGraph
    rng: SplitMix64
    lives: int
    score: int = 0
    miss_tick: int = -1
    spawned: int = 0
    projectiles: dict[str, Projectile] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# procedural asset pack

def _blank(w: int, h: int) -> np.ndarray:
    return np.zeros((h, w, 4), dtype=np.uint8)


def _rect(img, x0, y0, x1, y1, rgb):
    img[max(y0, 0):y1, max(x0, 0):x1, :3] = rgb
    img[max(y0, 0):y1, max(x0, 0):x1, 3] = 255


def _disk(img, cx, cy, r, rgb):
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    hit = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    img[hit, :3] = rgb
    img[hit, 3] = 255


def _pattern(img, rgb, mod_a, mod_b, mod_m, only_opaque=True):
    """Deterministic speckle: recolours pixels where (a*x + b*y) % m == 0."""
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    hit = (mod_a * xs + mod_b * ys) % mod_m == 0
    if only_opaque:
        hit &= img[..., 3] == 255
    img[hit, :3] = rgb


def _player_asset() -> np.ndarray:
    strip = _blank(256, 64)
    arm_cols = (4, 10, 48, 54)
    for f in range(4):
        fr = strip[:, f * 64:(f + 1) * 64]
        _rect(fr, 18, 36, 46, 56, (232, 118, 34))        # tunic
        _rect(fr, 20, 16, 44, 24, (224, 172, 138))       # face
        _rect(fr, 20, 4, 44, 16, (152, 156, 166))        # helmet
        _rect(fr, 14, 6, 20, 12, (240, 236, 210))        # horns
        _rect(fr, 44, 6, 50, 12, (240, 236, 210))
        _rect(fr, 26, 18, 29, 21, (30, 30, 40))          # eyes
        _rect(fr, 35, 18, 38, 21, (30, 30, 40))
        _rect(fr, 20, 24, 44, 36, (139, 84, 28))         # beard, see BEARD_RECT
        _rect(fr, 24 + 4 * f, 40, 30 + 4 * f, 46, (250, 210, 60))  # emblem wanders
        ax = arm_cols[f]
        _rect(fr, ax, 38, ax + 8, 50, (232, 118, 34))    # waving arm
        if f % 2 == 0:
            _rect(fr, 20, 56, 30, 62, (88, 60, 40))
            _rect(fr, 34, 56, 44, 62, (88, 60, 40))
        else:
            _rect(fr, 16, 56, 26, 62, (88, 60, 40))
            _rect(fr, 38, 56, 48, 62, (88, 60, 40))
    return strip


def _log_asset() -> np.ndarray:
    img = _blank(48, 24)
    _rect(img, 2, 3, 46, 21, (148, 92, 40))
    for x in range(8, 42, 8):
        _rect(img, x, 3, x + 2, 21, (104, 62, 26))
    _rect(img, 2, 3, 7, 21, (188, 136, 78))
    _rect(img, 41, 3, 46, 21, (188, 136, 78))
    for cx, cy in ((2, 3), (45, 3), (2, 20), (45, 20)):
        img[cy, cx] = 0
    return img


def _fallen_asset() -> np.ndarray:
    strip = _blank(256, 32)
    wood, dark, dust = (148, 92, 40), (104, 62, 26), (196, 176, 140)
    f0 = strip[:, 0:64]
    _rect(f0, 8, 10, 56, 26, wood)
    _rect(f0, 28, 10, 32, 26, dark)
    f1 = strip[:, 64:128]
    _rect(f1, 6, 12, 30, 26, wood)
    _rect(f1, 34, 10, 58, 24, wood)
    _rect(f1, 30, 16, 34, 20, dust)
    f2 = strip[:, 128:192]
    _rect(f2, 2, 14, 24, 26, wood)
    _rect(f2, 40, 12, 62, 24, wood)
    for x in (28, 32, 36):
        _rect(f2, x, 16 + (x % 8) // 2, x + 3, 19 + (x % 8) // 2, dust)
    f3 = strip[:, 192:256]
    _rect(f3, 4, 20, 28, 28, dark)
    _rect(f3, 36, 20, 60, 28, dark)
    for x in range(8, 56, 10):
        _rect(f3, x, 14, x + 4, 18, dust)
    return strip


def _ship_asset() -> np.ndarray:
    img = _blank(96, 64)
    _rect(img, 6, 44, 90, 56, (94, 62, 40))
    _rect(img, 14, 56, 82, 60, (74, 48, 30))
    _rect(img, 46, 6, 50, 44, (70, 48, 30))
    _rect(img, 52, 8, 88, 36, (242, 240, 232))  # sail, see SAIL_RECT
    _rect(img, 12, 8, 46, 10, (70, 48, 30))     # rigging
    _rect(img, 46, 2, 58, 8, (200, 60, 50))     # flag
    return img


def _bunny_asset() -> np.ndarray:
    img = _blank(32, 32)
    _rect(img, 7, 14, 25, 30, (244, 238, 242))
    _rect(img, 10, 8, 22, 18, (244, 238, 242))
    _rect(img, 11, 0, 14, 10, (244, 238, 242))
    _rect(img, 18, 0, 21, 10, (244, 238, 242))
    _rect(img, 12, 2, 13, 8, (246, 170, 200))
    _rect(img, 19, 2, 20, 8, (246, 170, 200))
    _rect(img, 13, 11, 15, 13, (40, 40, 48))
    _rect(img, 17, 11, 19, 13, (40, 40, 48))
    _rect(img, 3, 22, 7, 26, (252, 250, 252))
    return img


def _cloud_asset() -> np.ndarray:
    img = _blank(128, 48)
    _rect(img, 6, 18, 122, 40, (250, 251, 253))
    _rect(img, 22, 8, 70, 30, (250, 251, 253))
    _rect(img, 62, 12, 112, 34, (250, 251, 253))
    return img


def _button_asset() -> np.ndarray:
    img = _blank(120, 40)
    _rect(img, 0, 0, 120, 40, (36, 110, 58))
    _rect(img, 3, 3, 117, 37, (72, 182, 96))
    _rect(img, 3, 3, 117, 12, (96, 205, 118))
    for x in (22, 44, 66, 88):
        _rect(img, x, 16, x + 14, 24, (246, 250, 246))
    return img


def _hills_asset() -> np.ndarray:
    img = _blank(160, 160)
    xs = np.arange(160)
    top = 24 + ((xs - 80) ** 2) // 170
    ys = np.mgrid[0:160, 0:160][0]
    body = ys >= top[None, :]
    img[body, :3] = (104, 186, 92)
    img[body, 3] = 255
    rim = body & (ys < (top + 6)[None, :])
    img[rim, :3] = (146, 214, 120)
    _pattern(img, (246, 222, 96), 3, 7, 59)
    return img


def _trees_asset() -> np.ndarray:
    img = _blank(160, 140)
    for tx in (28, 104):
        _rect(img, tx, 56, tx + 12, 140, (112, 78, 46))
        for y in range(64, 140, 12):
            _rect(img, tx, y, tx + 12, y + 2, (92, 62, 36))
    _disk(img, 34, 46, 30, (40, 122, 62))
    _disk(img, 110, 40, 34, (40, 122, 62))
    _disk(img, 34, 46, 20, (58, 148, 78))
    _disk(img, 110, 40, 24, (58, 148, 78))
    _pattern(img, (78, 170, 96), 1, 2, 11)
    return img


def _bushes_asset() -> np.ndarray:
    # lumps hug the top of the strip so they clear the beach layer in
    # front of them at any canvas scale
    img = _blank(160, 90)
    for cx, cy, r in ((26, 34, 26), (82, 30, 30), (138, 38, 24)):
        _disk(img, cx, cy, r, (34, 104, 52))
        _disk(img, cx, cy - 6, r - 10, (52, 132, 68))
    img[64:, :, :] = 0  # keep the skirt clear so lower layers stay comparable
    _pattern(img, (222, 64, 86), 5, 3, 47)
    return img


def _beach_asset() -> np.ndarray:
    img = _blank(160, 100)
    _rect(img, 0, 0, 160, 100, (228, 202, 142))
    _rect(img, 0, 0, 160, 10, (214, 184, 128))
    _rect(img, 0, 0, 160, 4, (246, 238, 214))
    _pattern(img, (196, 168, 108), 7, 11, 41)
    _pattern(img, (178, 150, 96), 11, 5, 73)
    return img


def make_asset_pack() -> AssetStore:
    """All bitmaps the test game draws. Alpha is strictly 0 or 255."""
    pack = AssetStore()
    pack.add("player", _player_asset(), source_url="builtin:player")
    pack.add("log", _log_asset(), source_url="builtin:log")
    pack.add("fallen", _fallen_asset(), source_url="builtin:fallen")
    pack.add("ship", _ship_asset(), source_url="builtin:ship")
    pack.add("bunny", _bunny_asset(), source_url="builtin:bunny")
    pack.add("cloud", _cloud_asset(), source_url="builtin:cloud")
    pack.add("button", _button_asset(), source_url="builtin:button")
    pack.add("hills", _hills_asset(), source_url="builtin:hills")
    pack.add("trees", _trees_asset(), source_url="builtin:trees")
    pack.add("bushes", _bushes_asset(), source_url="builtin:bushes")
    pack.add("beach", _beach_asset(), source_url="builtin:beach")
    return pack


# ---------------------------------------------------------------------------
# scene construction and layout

def _sy(base: int, h: int) -> int:
    """Vertical layout scaled from the 720-line reference design."""
    return (base * h) // 720


def _player_y(cfg: GameConfig) -> int:
    return cfg.canvas_h - _sy(90, cfg.canvas_h)


def _miss_line(cfg: GameConfig) -> int:
    return _player_y(cfg) - 12


def _build_scene(cfg: GameConfig) -> SceneGraph:
    w, h = cfg.canvas_w, cfg.canvas_h
    nodes: dict[str, SceneNode] = {}

    def add(node: SceneNode) -> SceneNode:
        nodes[node.id] = node
        nodes["root"].children.append(node.id)
        node.parent_id = "root"
        return node

    nodes["root"] = SceneNode(id="root", kind="container")
    add(SceneNode(id="cloud_a", kind="sprite", asset_id="cloud", z_index=1,
                  x=float((20 * w) // 100), y=float(_sy(60, h))))
    add(SceneNode(id="cloud_b", kind="sprite", asset_id="cloud", z_index=1,
                  x=float((62 * w) // 100), y=float(_sy(130, h))))
    add(SceneNode(id="hills", kind="tiling_sprite", asset_id="hills", z_index=2,
                  x=0.0, y=float(h - _sy(320, h)), render_size_w=w, render_size_h=160))
    add(SceneNode(id="ship", kind="sprite", asset_id="ship", z_index=3,
                  anchor_x=0.5, anchor_y=1.0,
                  x=float((60 * w) // 100), y=float(h - _sy(300, h))))
    add(SceneNode(id="trees", kind="tiling_sprite", asset_id="trees", z_index=4,
                  x=0.0, y=float(h - _sy(230, h)), render_size_w=w, render_size_h=140))
    add(SceneNode(id="bushes", kind="tiling_sprite", asset_id="bushes", z_index=5,
                  x=0.0, y=float(h - _sy(150, h)), render_size_w=w, render_size_h=90))
    add(SceneNode(id="bunny", kind="sprite", asset_id="bunny", z_index=6,
                  anchor_x=0.5, anchor_y=1.0,
                  x=float((22 * w) // 100), y=float(h - _sy(120, h))))
    add(SceneNode(id="beach", kind="tiling_sprite", asset_id="beach", z_index=7,
                  x=0.0, y=float(h - _sy(100, h)), render_size_w=w, render_size_h=100))
    add(SceneNode(id="fallen", kind="animated_sprite", asset_id="fallen", z_index=8,
                  anchor_x=0.5, anchor_y=1.0, visible=False,
                  frame_index=0, frame_count=4,
                  x=float(w // 2), y=float(_player_y(cfg) - 2)))
    add(SceneNode(id="player", kind="animated_sprite", asset_id="player", z_index=10,
                  anchor_x=0.5, anchor_y=1.0, frame_index=0, frame_count=4,
                  x=float(w // 2), y=float(_player_y(cfg))))
    add(SceneNode(id="button", kind="sprite", asset_id="button", z_index=11,
                  x=float(w // 2 - 60), y=float(h - _sy(220, h))))
    return SceneGraph(root_id="root", nodes=nodes, background=BACKGROUND)


def _clone_scene(scene: SceneGraph) -> SceneGraph:
    nodes = {
        nid: replace(n, children=list(n.children),
                     frame_rect=tuple(n.frame_rect) if n.frame_rect else None)
        for nid, n in scene.nodes.items()
    }
    return SceneGraph(root_id=scene.root_id, nodes=nodes, background=scene.background)


def _clone_state(state: GameState) -> GameState:
    rng = SplitMix64(0)
    rng._state = state.rng._state
    return GameState(
        config=state.config, phase=state.phase, tick=state.tick,
        scene=_clone_scene(state.scene), rng=rng, lives=state.lives,
        score=state.score, miss_tick=state.miss_tick, spawned=state.spawned,
        projectiles={k: replace(v) for k, v in state.projectiles.items()},
    )


def new_game(config: GameConfig) -> GameState:
    """Fresh game on the title screen; nothing random consumed yet."""
    if config.canvas_w < 320 or config.canvas_h < 180:
        raise SimulationError("canvas too small for the scene layout (min 320x180)")
    if config.snapshot_count < 1:
        raise SimulationError("snapshot_count must be positive")
    if config.frame_rate < 1:
        raise SimulationError("frame_rate must be positive")
    if config.seed < 0:
        raise SimulationError("seed must be non-negative")
    return GameState(
        config=config, phase="title", tick=0, scene=_build_scene(config),
        rng=SplitMix64(config.seed), lives=1,
    )


def _triangle(t: int, span: int) -> int:
    if span <= 0:
        return 0
    k = t % (2 * span)
    return k if k <= span else 2 * span - k


def pointer_script(config: GameConfig):
    """The scripted input: click on the first tick, then sweep the width."""
    span = config.canvas_w - 80
    y = float(_player_y(config) - 40)

    def at(tick: int) -> PointerInput:
        return PointerInput(x=float(40 + _triangle(8 * tick, span)), y=y, click=tick == 0)

    return at


def _spawn_log(state: GameState, x: int, vy: int) -> None:
    nid = f"log_{state.spawned}"
    state.spawned += 1
    node = SceneNode(id=nid, kind="sprite", asset_id="log", z_index=9,
                     anchor_x=0.5, anchor_y=0.5, x=float(x), y=-40.0,
                     parent_id="root")
    state.scene.nodes[nid] = node
    state.scene.nodes["root"].children.append(nid)
    state.projectiles[nid] = Projectile(spawn_tick=state.tick, vy=vy)


def _remove_log(state: GameState, nid: str) -> None:
    del state.projectiles[nid]
    del state.scene.nodes[nid]
    state.scene.nodes["root"].children.remove(nid)


def _backstop_column(state: GameState) -> int:
    """A spawn column the player provably cannot reach in time."""
    cfg = state.config
    fall_ticks = (_miss_line(cfg) + 40) // _BACKSTOP_SPEED
    landing = pointer_script(cfg)(state.tick + fall_ticks).x
    return 60 if landing > cfg.canvas_w // 2 else cfg.canvas_w - 60


def step(state: GameState, pointer: PointerInput) -> GameState:
    """Advance one tick. Pure: the input state is left untouched."""
    if state.phase == "ended":
        raise SimulationError("cannot step an ended game")
    s = _clone_state(state)
    cfg = s.config
    nodes = s.scene.nodes
    s.tick += 1
    tick = s.tick

    if state.phase == "title":
        if pointer.click:
            s.phase = "playing"
            nodes["button"].visible = False
        return s

    # scripted world motion, all integer functions of the tick
    nodes["hills"].tile_offset_x = float(-(tick // 4) % 160)
    nodes["trees"].tile_offset_x = float(-(tick // 2) % 160)
    nodes["bushes"].tile_offset_x = float(-tick % 160)
    nodes["beach"].tile_offset_x = float(-(tick * 2) % 160)
    ship_x0 = (60 * cfg.canvas_w) // 100
    nodes["ship"].x = float(ship_x0 + _triangle(tick // 2, cfg.canvas_w // 5))
    for cid, start in (("cloud_a", (20 * cfg.canvas_w) // 100),
                       ("cloud_b", (62 * cfg.canvas_w) // 100)):
        nodes[cid].x = float(((start - tick // 3 + 128) % (cfg.canvas_w + 256)) - 128)

    player = nodes["player"]
    player.frame_index = (tick // 10) % 4
    speed = int(cfg.player_speed)
    dx = int(pointer.x) - int(player.x)
    player.x = float(int(player.x) + max(-speed, min(speed, dx)))

    if state.phase == "playing":
        if s.rng.uniform() < cfg.spawn_rate / cfg.frame_rate:
            _spawn_log(s, s.rng.randint(40, cfg.canvas_w - 40), s.rng.randint(3, 5))
        if tick == _BACKSTOP_TICK:
            _spawn_log(s, _backstop_column(s), _BACKSTOP_SPEED)

    miss_line = _miss_line(cfg)
    missed_at: int | None = None
    for nid in list(s.projectiles):
        proj = s.projectiles[nid]
        log = nodes[nid]
        log.y = float(int(log.y) + proj.vy)
        log.rotation = ((tick - proj.spawn_tick) // 12 % 4) * (math.pi / 2)
        if state.phase != "playing":
            if log.y > cfg.canvas_h + 40:
                _remove_log(s, nid)
            continue
        in_window = miss_line - _CATCH_DEPTH <= log.y <= miss_line
        if in_window and abs(int(log.x) - int(player.x)) <= _CATCH_HALFWIDTH:
            s.score += 1
            _remove_log(s, nid)
        elif log.y > miss_line:
            missed_at = int(log.x)
            _remove_log(s, nid)

    if state.phase == "playing" and missed_at is not None:
        s.lives -= 1
        s.miss_tick = tick
        s.phase = "life_lost"
        fallen = nodes["fallen"]
        fallen.visible = True
        fallen.x = float(max(40, min(cfg.canvas_w - 40, missed_at)))
        fallen.frame_index = 0

    if state.phase == "life_lost":
        nodes["fallen"].frame_index = min(3, (tick - s.miss_tick) // 8)
        if tick - s.miss_tick >= _LIFE_LOST_TICKS:
            if s.lives > 0:
                s.phase = "playing"
                nodes["fallen"].visible = False
            else:
                s.phase = "ended"

    return s


def take_snapshot(state: GameState, assets: AssetStore | None = None,
                  hook: BugHook | None = None, snapshot_index: int = 0) -> SnapshotBundle:
    """Freeze the scene and render the synchronized screenshot.

    The state is not modified; snapshotting twice without stepping gives
    identical bundles.
    """
    cfg = state.config
    pack = assets if assets is not None else cfg.asset_pack
    if pack is None:
        pack = make_asset_pack()
    screenshot = render_scene(state.scene, pack, cfg.canvas_w, cfg.canvas_h,
                              hook=hook, background=state.scene.background)
    return SnapshotBundle(
        cor=_clone_scene(state.scene),
        screenshot=screenshot,
        assets=pack,
        canvas_w=cfg.canvas_w,
        canvas_h=cfg.canvas_h,
        run_id=f"run-{cfg.seed:016x}",
        snapshot_index=snapshot_index,
        timestamp_ms=state.tick * 1000 // cfg.frame_rate,
        snapshot_tick=state.tick,
    )


def snapshot_ticks(end_tick: int, count: int) -> list[int]:
    """Evenly spaced capture ticks covering [0, end_tick], endpoints included."""
    if count == 1 or end_tick <= 0:
        return [0] * max(count, 1)
    return [(i * end_tick) // (count - 1) for i in range(count)]


def run_test_case(config: GameConfig, hook: BugHook | None = None) -> list[SnapshotBundle]:
    """Play one scripted episode and capture snapshot_count bundles.

    The episode is simulated once to find its length (the game ends 32
    ticks after the first miss; a scripted unreachable projectile makes
    that bounded), then replayed with snapshots at evenly spaced ticks.
    Fully deterministic for a given config; the hook only affects pixels.
    """
    script = pointer_script(config)
    state = new_game(config)
    while state.phase != "ended" and state.tick < _TICK_CAP:
        state = step(state, script(state.tick))
    end_tick = state.tick

    ticks = snapshot_ticks(end_tick, config.snapshot_count)
    pack = config.asset_pack if config.asset_pack is not None else make_asset_pack()

    bundles: list[SnapshotBundle] = []
    state = new_game(config)
    for t in range(end_tick + 1):
        while len(bundles) < len(ticks) and ticks[len(bundles)] == t:
            bundles.append(take_snapshot(state, pack, hook, snapshot_index=len(bundles)))
        if t < end_tick:
            state = step(state, script(t))
    return bundles
