import { mkdtempSync, existsSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { createHash } from "node:crypto";
import { afterEach, describe, expect, it } from "vitest";

import {
  buildManifest,
  canonicalJson,
  pixelChecksum,
  sha256Hex,
  writeBundleDir,
  type AssetFile,
  type SerializedBundle,
} from "../src/bundle";

// Reference produced by an independent JSON writer (sorted keys, indent 2,
// trailing newline); canonicalJson must emit these bytes exactly.
const CANONICAL_FIXTURE =
  '{\n  "alpha": {\n    "empty_arr": [],\n    "empty_obj": {},\n    "nested": {\n      "x": -3,\n      "y": 0\n    }\n  },\n  "f": false,\n  "n": 12,\n  "s": "hi \\"there\\"\\n",\n  "zeta": [\n    1,\n    2,\n    {\n      "a": true,\n      "b": null\n    }\n  ]\n}\n';

// sha256 over (uint32le width, uint32le height, RGBA bytes) for the 2x1
// bitmap [1..8], computed with an independent implementation.
const CHECKSUM_FIXTURE = "sha256:5edafcdc512a3bd9296c32e7db7bcbfbc5f83c87a1909702fa0f20a67f27341f";

const cleanups: string[] = [];
afterEach(() => {
  while (cleanups.length > 0) rmSync(cleanups.pop()!, { recursive: true, force: true });
});

function sampleBundle(): SerializedBundle {
  const shot = { width: 2, height: 1, pixels: Uint8Array.from([1, 2, 3, 4, 5, 6, 7, 8]) };
  const assets = new Map<string, AssetFile>([
    [
      "tex-aa",
      { file: "assets/tex-aa.png", checksum: "sha256:00ff", sourceUrl: "demo://a.png", bytes: Buffer.from("png-bytes") },
    ],
    [
      "missing-bb",
      { file: "assets/missing-bb.png", checksum: "", sourceUrl: "demo://b.png", bytes: null, error: "no resource" },
    ],
  ]);
  const partial = {
    runId: "clean-000",
    snapshotIndex: 3,
    canvasW: 2,
    canvasH: 1,
    timestampMs: 1500000000160,
    snapshotTick: 10,
    corJson: '{\n  "format": "spritecheck-cor"\n}\n',
    screenshotPng: Buffer.from("fake"),
    screenshotChecksum: pixelChecksum(shot),
    assets,
  };
  return { ...partial, manifestJson: buildManifest(partial) };
}

describe("canonical json", () => {
  it("matches the reference writer byte for byte", () => {
    const doc = {
      zeta: [1, 2, { b: null, a: true }],
      alpha: { nested: { y: 0, x: -3 }, empty_obj: {}, empty_arr: [] },
      s: 'hi "there"\n',
      n: 12,
      f: false,
    };
    expect(canonicalJson(doc)).toBe(CANONICAL_FIXTURE);
  });

  it("refuses non-finite numbers", () => {
    expect(() => canonicalJson({ x: Infinity })).toThrow(/non-finite/);
  });
});

describe("pixel checksum", () => {
  it("matches the frozen reference vector", () => {
    const bitmap = { width: 2, height: 1, pixels: Uint8Array.from([1, 2, 3, 4, 5, 6, 7, 8]) };
    expect(pixelChecksum(bitmap)).toBe(CHECKSUM_FIXTURE);
  });

  it("depends on the declared dimensions, not just the bytes", () => {
    const px = Uint8Array.from([1, 2, 3, 4, 5, 6, 7, 8]);
    expect(pixelChecksum({ width: 2, height: 1, pixels: px })).not.toBe(
      pixelChecksum({ width: 1, height: 2, pixels: px }),
    );
  });
});

describe("manifest", () => {
  it("records format, geometry, file table and checksums", () => {
    const bundle = sampleBundle();
    const doc = JSON.parse(bundle.manifestJson);
    expect(doc.format).toBe("spritecheck-bundle");
    expect(doc.version).toBe(1);
    expect(doc.run_id).toBe("clean-000");
    expect(doc.snapshot_index).toBe(3);
    expect(doc.canvas_w).toBe(2);
    expect(doc.canvas_h).toBe(1);
    expect(doc.snapshot_tick).toBe(10);
    expect(doc.files).toEqual({ screenshot: "screenshot.png", cor: "cor.json" });
    expect(doc.checksums.screenshot).toBe(CHECKSUM_FIXTURE);
    const corSha = createHash("sha256").update(Buffer.from(bundle.corJson, "utf8")).digest("hex");
    expect(doc.checksums.cor).toBe("sha256:" + corSha);
    expect(sha256Hex(Buffer.from(bundle.corJson, "utf8"))).toBe(corSha);
  });

  it("marks a failed fetch instead of dropping it", () => {
    const doc = JSON.parse(sampleBundle().manifestJson);
    expect(doc.assets["missing-bb"]).toEqual({
      file: "assets/missing-bb.png",
      checksum: "",
      source_url: "demo://b.png",
      error: "no resource",
    });
    expect(doc.assets["tex-aa"].checksum).toBe("sha256:00ff");
  });
});

describe("bundle directory", () => {
  it("writes the layout and skips files for failed assets", () => {
    const dir = mkdtempSync(join(tmpdir(), "capshim-"));
    cleanups.push(dir);
    const bundle = sampleBundle();
    writeBundleDir(dir, bundle);
    expect(readFileSync(join(dir, "manifest.json"), "utf8")).toBe(bundle.manifestJson);
    expect(readFileSync(join(dir, "cor.json"), "utf8")).toBe(bundle.corJson);
    expect(readFileSync(join(dir, "screenshot.png")).equals(bundle.screenshotPng)).toBe(true);
    expect(existsSync(join(dir, "assets", "tex-aa.png"))).toBe(true);
    expect(existsSync(join(dir, "assets", "missing-bb.png"))).toBe(false);
  });
});
