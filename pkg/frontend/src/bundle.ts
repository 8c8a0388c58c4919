/**
 * Snapshot bundle serialization.
 *
 * One bundle is a directory:
 *
 *   manifest.json        format tag, canvas size, file table, checksums
 *   cor.json             scene document frozen at capture time
 *   screenshot.png       synchronized canvas read-back
 *   assets/<id>.png      content-addressed textures
 *
 * JSON files are written with sorted keys, two-space indent and a
 * trailing newline, so capturing the same frame twice produces
 * byte-identical output.
 */

import { createHash } from "node:crypto";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { Bitmap } from "./png";

export const BUNDLE_FORMAT = "spritecheck-bundle";
export const COR_FORMAT = "spritecheck-cor";
export const FORMAT_VERSION = 1;

export type Json = null | boolean | number | string | Json[] | { [key: string]: Json };

export function sha256Hex(bytes: Uint8Array): string {
  return createHash("sha256").update(bytes).digest("hex");
}

/**
 * Content address of a bitmap, independent of how the PNG was encoded:
 * sha256 over width and height as little-endian uint32 followed by the
 * raw RGBA bytes.
 */
export function pixelChecksum(bitmap: Bitmap): string {
  const dims = Buffer.alloc(8);
  dims.writeUInt32LE(bitmap.width, 0);
  dims.writeUInt32LE(bitmap.height, 4);
  const h = createHash("sha256");
  h.update(dims);
  h.update(bitmap.pixels);
  return "sha256:" + h.digest("hex");
}

/** JSON text with recursively sorted keys, 2-space indent, trailing newline. */
export function canonicalJson(value: Json): string {
  const render = (v: Json, depth: number): string => {
    if (v === null || typeof v === "boolean" || typeof v === "string") {
      return JSON.stringify(v);
    }
    if (typeof v === "number") {
      if (!Number.isFinite(v)) throw new Error("canonicalJson: non-finite number");
      return JSON.stringify(v);
    }
    const pad = "  ".repeat(depth + 1);
    const close = "  ".repeat(depth);
    if (Array.isArray(v)) {
      if (v.length === 0) return "[]";
      const items = v.map((item) => pad + render(item, depth + 1));
      return "[\n" + items.join(",\n") + "\n" + close + "]";
    }
    const keys = Object.keys(v).sort();
    if (keys.length === 0) return "{}";
    const items = keys.map((k) => pad + JSON.stringify(k) + ": " + render(v[k]!, depth + 1));
    return "{\n" + items.join(",\n") + "\n" + close + "}";
  };
  return render(value, 0) + "\n";
}

export interface AssetFile {
  /** Path inside the bundle directory, e.g. assets/tex-0123456789abcdef.png. */
  file: string;
  /** Pixel checksum of the decoded bitmap; empty when the fetch failed. */
  checksum: string;
  sourceUrl: string | null;
  /** PNG bytes, or null when the fetch failed and only the entry remains. */
  bytes: Buffer | null;
  error?: string;
}

export interface SerializedBundle {
  runId: string;
  snapshotIndex: number;
  canvasW: number;
  canvasH: number;
  timestampMs: number;
  snapshotTick: number;
  corJson: string;
  screenshotPng: Buffer;
  screenshotChecksum: string;
  manifestJson: string;
  assets: Map<string, AssetFile>;
}

export function buildManifest(b: Omit<SerializedBundle, "manifestJson">): string {
  const assetsDoc: { [id: string]: Json } = {};
  for (const [id, asset] of b.assets) {
    const entry: { [key: string]: Json } = {
      file: asset.file,
      checksum: asset.checksum,
      source_url: asset.sourceUrl,
    };
    // a failed fetch keeps its manifest entry so downstream validation
    // reports the hole instead of silently dropping the texture
    if (asset.error !== undefined) entry.error = asset.error;
    assetsDoc[id] = entry;
  }
  return canonicalJson({
    format: BUNDLE_FORMAT,
    version: FORMAT_VERSION,
    run_id: b.runId,
    snapshot_index: b.snapshotIndex,
    canvas_w: b.canvasW,
    canvas_h: b.canvasH,
    timestamp_ms: b.timestampMs,
    snapshot_tick: b.snapshotTick,
    files: { screenshot: "screenshot.png", cor: "cor.json" },
    checksums: {
      screenshot: b.screenshotChecksum,
      cor: "sha256:" + sha256Hex(Buffer.from(b.corJson, "utf8")),
    },
    assets: assetsDoc,
  });
}

/** Write one bundle directory. Assets whose fetch failed get no file. */
export function writeBundleDir(dir: string, bundle: SerializedBundle): string {
  mkdirSync(join(dir, "assets"), { recursive: true });
  writeFileSync(join(dir, "manifest.json"), bundle.manifestJson);
  writeFileSync(join(dir, "cor.json"), bundle.corJson);
  writeFileSync(join(dir, "screenshot.png"), bundle.screenshotPng);
  for (const asset of bundle.assets.values()) {
    if (asset.bytes !== null) writeFileSync(join(dir, asset.file), asset.bytes);
  }
  return dir;
}
