/**
 * Self-contained demo scene for headless runs.
 *
 * A small side-scroller vignette: tiled ground, a drifting cloud, three
 * bobbing coins sharing one sheet, an animated runner and a HUD badge.
 * Every texture is generated procedurally from the run seed, so a demo
 * run needs no files and no network. All placement stays on whole
 * pixels and every texel is either fully opaque or fully transparent,
 * keeping the renderer on its exact copy path.
 */

import type { SceneNode } from "./scene";
import { appendChild, findNode, makeNode } from "./scene";
import type { Bitmap } from "./png";
import { encodePng } from "./png";
import type { RenderFault, Surface } from "./raster";
import { makeSurface, renderScene } from "./raster";
import type { CaptureHost, FrameScheduler } from "./capture";

const MASK64 = (1n << 64n) - 1n;

/** splitmix64; good enough spread for texture speckle and phase picks. */
export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return (z ^ (z >> 31n)) & MASK64;
  }

  /** Uniform-ish integer in [lo, hi], both inclusive. Small ranges only. */
  int(lo: number, hi: number): number {
    return lo + Number(this.nextU64() % BigInt(hi - lo + 1));
  }
}

function blankBitmap(width: number, height: number): Bitmap {
  return { width, height, pixels: new Uint8Array(width * height * 4) };
}

function put(b: Bitmap, x: number, y: number, r: number, g: number, bl: number): void {
  const i = (y * b.width + x) * 4;
  b.pixels[i] = r;
  b.pixels[i + 1] = g;
  b.pixels[i + 2] = bl;
  b.pixels[i + 3] = 255;
}

const RUNNER_FRAMES = 4;
const RUNNER_W = 16;
const RUNNER_H = 24;

function makeRunnerStrip(rng: SplitMix64): Bitmap {
  const b = blankBitmap(RUNNER_W * RUNNER_FRAMES, RUNNER_H);
  const shirt: [number, number, number] = [rng.int(140, 220), rng.int(40, 90), rng.int(40, 90)];
  const pants: [number, number, number] = [rng.int(30, 70), rng.int(30, 70), rng.int(120, 190)];
  const skin: [number, number, number] = [224, 172, 120];
  for (let f = 0; f < RUNNER_FRAMES; f++) {
    const ox = f * RUNNER_W;
    for (let y = 2; y < 8; y++) {
      for (let x = 5; x < 11; x++) put(b, ox + x, y, skin[0], skin[1], skin[2]);
    }
    for (let y = 8; y < 16; y++) {
      for (let x = 4; x < 12; x++) put(b, ox + x, y, shirt[0], shirt[1], shirt[2]);
    }
    // legs swing with the frame so every frame is visually distinct
    const stride = [0, 2, 0, -2][f]!;
    for (let y = 16; y < 23; y++) {
      const reach = Math.min(3, 23 - y);
      for (let x = 0; x < 2; x++) {
        put(b, ox + 5 + x + Math.round((stride * reach) / 3), y, pants[0], pants[1], pants[2]);
        put(b, ox + 9 + x - Math.round((stride * reach) / 3), y, pants[0], pants[1], pants[2]);
      }
    }
    // frame marker band, one texel per frame index
    for (let x = 0; x <= f; x++) put(b, ox + x, 0, 255, 255, 255);
  }
  return b;
}

const TILE = 24;

function makeGroundTile(rng: SplitMix64): Bitmap {
  const b = blankBitmap(TILE, TILE);
  for (let y = 0; y < TILE; y++) {
    for (let x = 0; x < TILE; x++) {
      const grass = y < 5;
      const base: [number, number, number] = grass ? [76, 154, 66] : [121, 92, 60];
      const jitter = rng.int(-12, 12);
      put(
        b,
        x,
        y,
        Math.max(0, Math.min(255, base[0] + jitter)),
        Math.max(0, Math.min(255, base[1] + jitter)),
        Math.max(0, Math.min(255, base[2] + jitter)),
      );
    }
  }
  return b;
}

// props sheet: coin disc in (0,0,12,12), badge plate in (12,0,16,12)
const COIN_RECT: [number, number, number, number] = [0, 0, 12, 12];
const BADGE_RECT: [number, number, number, number] = [12, 0, 16, 12];

function makePropsSheet(rng: SplitMix64): Bitmap {
  const b = blankBitmap(32, 16);
  const gold = rng.int(196, 240);
  for (let y = 0; y < 12; y++) {
    for (let x = 0; x < 12; x++) {
      const dx = x - 5.5;
      const dy = y - 5.5;
      if (dx * dx + dy * dy <= 30) put(b, x, y, gold, Math.max(0, gold - 60), 24);
    }
  }
  for (let y = 1; y < 11; y++) {
    for (let x = 13; x < 27; x++) put(b, x, y, 40, 44, 60);
  }
  for (let x = 15; x < 25; x++) put(b, x, 5, 210, 210, 230);
  return b;
}

function makeCloudSprite(rng: SplitMix64): Bitmap {
  const b = blankBitmap(28, 12);
  const tint = rng.int(235, 252);
  const lobes: Array<[number, number, number]> = [
    [7, 7, 6],
    [14, 5, 7],
    [21, 7, 6],
  ];
  for (let y = 0; y < 12; y++) {
    for (let x = 0; x < 28; x++) {
      for (const [cx, cy, rad] of lobes) {
        const dx = x - cx;
        const dy = (y - cy) * 1.6;
        if (dx * dx + dy * dy <= rad * rad) {
          put(b, x, y, tint, tint, 255);
          break;
        }
      }
    }
  }
  return b;
}

export const TEXTURE_URLS = {
  runner: "demo://textures/runner.png",
  ground: "demo://textures/ground.png",
  props: "demo://textures/props.png",
  cloud: "demo://textures/cloud.png",
} as const;

export interface DemoFault {
  kind: "invisible";
  nodeId: string;
}

export interface DemoOptions {
  width?: number;
  height?: number;
  fault?: DemoFault | null;
}

const BASE_TIMESTAMP_MS = 1_500_000_000_000;
const FRAME_MS = 16;

/**
 * Headless stand-in for a browser game: owns the scene, the textures,
 * the canvas surface and the frame scheduler the shim suspends.
 */
export class DemoGame {
  readonly width: number;
  readonly height: number;
  readonly background: [number, number, number] = [110, 170, 215];
  readonly scene: SceneNode;
  readonly surface: Surface;
  /** PNG bytes by resource URL; what fetchAsset serves. */
  readonly textures = new Map<string, Buffer>();
  tick = 0;

  private readonly bitmaps = new Map<string, Bitmap>();
  private readonly fault: RenderFault | null;
  private suspendCount = 0;
  private readonly heroX0: number;
  private readonly coinPhase: number;
  private readonly cloudX0: number;
  private readonly groundPhase: number;

  readonly scheduler: FrameScheduler;

  constructor(seed: number | bigint, options: DemoOptions = {}) {
    this.width = options.width ?? 192;
    this.height = options.height ?? 108;
    this.fault =
      options.fault != null ? { hiddenNodeIds: new Set([options.fault.nodeId]) } : null;

    const rng = new SplitMix64(seed);
    this.addTexture(TEXTURE_URLS.runner, makeRunnerStrip(rng));
    this.addTexture(TEXTURE_URLS.ground, makeGroundTile(rng));
    this.addTexture(TEXTURE_URLS.props, makePropsSheet(rng));
    this.addTexture(TEXTURE_URLS.cloud, makeCloudSprite(rng));
    this.heroX0 = rng.int(0, 40);
    this.coinPhase = rng.int(0, 3);
    this.cloudX0 = rng.int(0, 120);
    this.groundPhase = rng.int(0, TILE - 1);

    this.scene = this.buildScene();
    this.surface = makeSurface(this.width, this.height);

    const game = this;
    this.scheduler = {
      get suspended() {
        return game.suspendCount > 0;
      },
      suspend() {
        game.suspendCount += 1;
      },
      resume() {
        if (game.suspendCount === 0) throw new Error("scheduler resumed while running");
        game.suspendCount -= 1;
      },
    };

    this.update(0);
    this.render();
  }

  private addTexture(url: string, bitmap: Bitmap): void {
    this.bitmaps.set(url, bitmap);
    this.textures.set(url, encodePng(bitmap));
  }

  private buildScene(): SceneNode {
    const stage = makeNode("stage", "container");
    appendChild(
      stage,
      makeNode("cloud", "sprite", { textureUrl: TEXTURE_URLS.cloud, y: 10, zIndex: 1 }),
    );
    appendChild(
      stage,
      makeNode("ground", "tiling_sprite", {
        textureUrl: TEXTURE_URLS.ground,
        y: this.height - TILE,
        renderSizeW: this.width,
        renderSizeH: TILE,
        zIndex: 2,
      }),
    );
    for (let i = 0; i < 3; i++) {
      appendChild(
        stage,
        makeNode(`coin-${i}`, "sprite", {
          textureUrl: TEXTURE_URLS.props,
          frameRect: [...COIN_RECT],
          x: 36 + 44 * i,
          y: 38,
          zIndex: 5,
        }),
      );
    }
    appendChild(
      stage,
      makeNode("runner", "animated_sprite", {
        textureUrl: TEXTURE_URLS.runner,
        y: this.height - TILE - RUNNER_H,
        zIndex: 10,
        frameIndex: 0,
        frameCount: RUNNER_FRAMES,
      }),
    );
    const hud = appendChild(stage, makeNode("hud", "container", { x: 4, y: 4, zIndex: 20 }));
    appendChild(
      hud,
      makeNode("badge", "sprite", { textureUrl: TEXTURE_URLS.props, frameRect: [...BADGE_RECT] }),
    );
    return stage;
  }

  private mod(n: number, m: number): number {
    return ((n % m) + m) % m;
  }

  /** Scripted state for a given tick; pure function of tick and run phases. */
  private update(tick: number): void {
    const runner = findNode(this.scene, "runner");
    runner.x = 8 + this.mod(this.heroX0 + 2 * tick, 160);
    runner.frameIndex = this.mod(tick, RUNNER_FRAMES);

    const ground = findNode(this.scene, "ground");
    ground.tileOffsetX = -this.mod(this.groundPhase + 2 * tick, TILE);

    for (let i = 0; i < 3; i++) {
      const coin = findNode(this.scene, `coin-${i}`);
      coin.y = 38 + 2 * (Math.floor((tick + this.coinPhase + 2 * i) / 3) % 2);
    }

    const cloud = findNode(this.scene, "cloud");
    cloud.x = this.mod(this.cloudX0 + 164 - tick, 164);
  }

  private render(): void {
    renderScene(this.surface, this.scene, this.bitmaps, this.background, this.fault);
  }

  /** Advance one frame unless the scheduler is suspended. */
  step(): void {
    if (this.scheduler.suspended) return;
    this.tick += 1;
    this.update(this.tick);
    this.render();
  }

  /** The view of this game a capture session attaches to. */
  host(): CaptureHost {
    const game = this;
    return {
      root: game.scene,
      scheduler: game.scheduler,
      background: game.background,
      get tick() {
        return game.tick;
      },
      canvas: {
        width: game.width,
        height: game.height,
        readPixels: () => game.surface.pixels,
      },
      now: () => BASE_TIMESTAMP_MS + game.tick * FRAME_MS,
      fetchAsset: (url: string) => {
        const bytes = game.textures.get(url);
        if (bytes === undefined) throw new Error(`no resource at ${url}`);
        return bytes;
      },
    };
  }
}
