/**
 * Capture shim: freezes a running scene for one frame and exports a
 * snapshot bundle (scene document, screenshot, textures).
 *
 * The shim is observation only. It never writes to the scene graph, the
 * canvas, or the host's texture store; everything it emits is built from
 * copies. Pixel-exact agreement between the host renderer and any other
 * compositor is not assumed; downstream consumers calibrate per game
 * before judging captured runs.
 */

import type { SceneNode } from "./scene";
import { walk } from "./scene";
import type { Bitmap } from "./png";
import { decodePng, encodePng } from "./png";
import type { AssetFile, Json, SerializedBundle } from "./bundle";
import { COR_FORMAT, FORMAT_VERSION, buildManifest, canonicalJson, pixelChecksum, sha256Hex } from "./bundle";

/** Raised when canvas read-back is blocked or returns garbage. */
export class CaptureError extends Error {
  constructor(message: string, options?: { cause?: unknown }) {
    super(message, options);
    this.name = "CaptureError";
  }
}

export interface FrameScheduler {
  readonly suspended: boolean;
  suspend(): void;
  resume(): void;
}

export interface CanvasSource {
  readonly width: number;
  readonly height: number;
  /** Current frame as RGBA bytes; throws if read-back is blocked. */
  readPixels(): Uint8Array;
}

/** What the shim needs from a host engine. */
export interface CaptureHost {
  readonly root: SceneNode;
  readonly canvas: CanvasSource;
  readonly scheduler: FrameScheduler;
  readonly background: [number, number, number];
  /** Frame counter of the frame currently on the canvas. */
  readonly tick: number;
  now(): number;
  /** Raw bytes behind a resource URL; a browser host serves its loader cache. */
  fetchAsset(url: string): Uint8Array;
}

export interface CollectedAsset {
  id: string;
  url: string;
  checksum: string;
  bytes: Buffer;
  width: number;
  height: number;
}

export interface AssetFailure {
  url: string;
  id: string;
  error: string;
}

export class CaptureSession {
  readonly host: CaptureHost;
  readonly runId: string;
  /** Distinct resource URLs seen on the scene so far. */
  readonly assetUrls = new Set<string>();
  readonly bundles: SerializedBundle[] = [];
  /** Fetches that failed, by URL. Recorded once; capture continues without them. */
  readonly failures = new Map<string, AssetFailure>();

  private readonly byUrl = new Map<string, CollectedAsset>();
  private nextIndex = 0;

  constructor(host: CaptureHost, runId = "run") {
    this.host = host;
    this.runId = runId;
  }

  /**
   * Fetch every distinct texture URL on the scene once and content-address
   * the bytes; the asset id is derived from the decoded pixels, so
   * re-collecting an unchanged scene fetches nothing and changes nothing.
   */
  collectAssets(): CollectedAsset[] {
    walk(this.host.root, (node) => {
      if (node.textureUrl !== null) this.assetUrls.add(node.textureUrl);
    });
    for (const url of this.assetUrls) {
      if (this.byUrl.has(url) || this.failures.has(url)) continue;
      try {
        const bytes = Buffer.from(this.host.fetchAsset(url));
        const bitmap = decodePng(bytes);
        const checksum = pixelChecksum(bitmap);
        const id = "tex-" + checksum.slice("sha256:".length).slice(0, 16);
        this.byUrl.set(url, { id, url, checksum, bytes, width: bitmap.width, height: bitmap.height });
      } catch (err) {
        const id = "missing-" + sha256Hex(Buffer.from(url, "utf8")).slice(0, 16);
        const error = err instanceof Error ? err.message : String(err);
        this.failures.set(url, { url, id, error });
      }
    }
    return [...this.byUrl.values()];
  }

  /** Asset id a texture URL maps to, whether its fetch succeeded or not. */
  assetIdFor(url: string): string {
    const hit = this.byUrl.get(url);
    if (hit !== undefined) return hit.id;
    const miss = this.failures.get(url);
    if (miss !== undefined) return miss.id;
    throw new CaptureError(`texture URL never collected: ${url}`);
  }

  /**
   * Suspend frame scheduling, serialize the scene and read back the
   * canvas from the same frozen frame, then resume. Each capture gets
   * the next snapshot index in this session.
   */
  freezeAndCapture(): SerializedBundle {
    const scheduler = this.host.scheduler;
    const wasSuspended = scheduler.suspended;
    if (!wasSuspended) scheduler.suspend();
    try {
      this.collectAssets();
      const corJson = canonicalJson(this.corDoc());

      let pixels: Uint8Array;
      try {
        pixels = Uint8Array.from(this.host.canvas.readPixels());
      } catch (err) {
        throw new CaptureError("capture denied", { cause: err });
      }
      const { width, height } = this.host.canvas;
      if (pixels.length !== width * height * 4) {
        const cause = new Error(`read-back returned ${pixels.length} bytes for ${width}x${height}`);
        throw new CaptureError("capture denied", { cause });
      }
      const shot: Bitmap = { width, height, pixels };

      const assets = new Map<string, AssetFile>();
      for (const a of this.byUrl.values()) {
        assets.set(a.id, {
          file: `assets/${a.id}.png`,
          checksum: a.checksum,
          sourceUrl: a.url,
          bytes: a.bytes,
        });
      }
      for (const f of this.failures.values()) {
        assets.set(f.id, {
          file: `assets/${f.id}.png`,
          checksum: "",
          sourceUrl: f.url,
          bytes: null,
          error: f.error,
        });
      }

      const partial = {
        runId: this.runId,
        snapshotIndex: this.nextIndex,
        canvasW: width,
        canvasH: height,
        timestampMs: this.host.now(),
        snapshotTick: this.host.tick,
        corJson,
        screenshotPng: encodePng(shot),
        screenshotChecksum: pixelChecksum(shot),
        assets,
      };
      const bundle: SerializedBundle = { ...partial, manifestJson: buildManifest(partial) };
      this.nextIndex += 1;
      this.bundles.push(bundle);
      return bundle;
    } finally {
      if (!wasSuspended) scheduler.resume();
    }
  }

  private corDoc(): Json {
    const nodes: Json[] = [];
    walk(this.host.root, (node) => nodes.push(this.nodeDoc(node)));
    return {
      format: COR_FORMAT,
      version: FORMAT_VERSION,
      root_id: this.host.root.id,
      background: [...this.host.background],
      nodes,
    };
  }

  // Field mapping onto the scene document schema. Values equal to the
  // schema defaults are omitted, matching how the consumer serializes.
  private nodeDoc(node: SceneNode): Json {
    const doc: { [key: string]: Json } = {
      id: node.id,
      kind: node.kind,
      parent_id: node.parent !== null ? node.parent.id : null,
      children: node.children.map((c) => c.id),
    };
    if (node.x !== 0) doc.x = node.x;
    if (node.y !== 0) doc.y = node.y;
    if (node.scaleX !== 1) doc.scale_x = node.scaleX;
    if (node.scaleY !== 1) doc.scale_y = node.scaleY;
    if (node.rotation !== 0) doc.rotation = node.rotation;
    if (node.anchorX !== 0) doc.anchor_x = node.anchorX;
    if (node.anchorY !== 0) doc.anchor_y = node.anchorY;
    if (node.alpha !== 1) doc.alpha = node.alpha;
    if (!node.visible) doc.visible = false;
    if (node.zIndex !== 0) doc.z_index = node.zIndex;
    if (node.textureUrl !== null) doc.asset_id = this.assetIdFor(node.textureUrl);
    if (node.frameRect !== null) doc.frame_rect = [...node.frameRect];
    if (node.tileOffsetX !== 0) doc.tile_offset_x = node.tileOffsetX;
    if (node.tileOffsetY !== 0) doc.tile_offset_y = node.tileOffsetY;
    if (node.tileScaleX !== 1) doc.tile_scale_x = node.tileScaleX;
    if (node.tileScaleY !== 1) doc.tile_scale_y = node.tileScaleY;
    if (node.renderSizeW !== null) doc.render_size_w = node.renderSizeW;
    if (node.renderSizeH !== null) doc.render_size_h = node.renderSizeH;
    if (node.frameIndex !== null) doc.frame_index = node.frameIndex;
    if (node.frameCount !== null) doc.frame_count = node.frameCount;
    return doc;
  }
}
