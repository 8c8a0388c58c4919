import { mkdtempSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import { sha256Hex } from "../src/bundle";
import { CaptureSession } from "../src/capture";
import { DemoGame } from "../src/demo";
import { main } from "../src/export";

const cleanups: string[] = [];
afterEach(() => {
  while (cleanups.length > 0) rmSync(cleanups.pop()!, { recursive: true, force: true });
});

const tmp = () => {
  const dir = mkdtempSync(join(tmpdir(), "capshim-"));
  cleanups.push(dir);
  return dir;
};

describe("demo scene", () => {
  it("renders the same pixels with and without the shim attached", () => {
    const plain = new DemoGame(77);
    const hashesPlain: string[] = [];
    for (let t = 0; t < 20; t++) {
      plain.step();
      hashesPlain.push(sha256Hex(plain.surface.pixels));
    }

    const observed = new DemoGame(77);
    const session = new CaptureSession(observed.host(), "shimmed");
    const hashesObserved: string[] = [];
    for (let t = 0; t < 20; t++) {
      observed.step();
      if (t === 5 || t === 10 || t === 15) session.freezeAndCapture();
      hashesObserved.push(sha256Hex(observed.surface.pixels));
    }

    expect(hashesObserved).toEqual(hashesPlain);
    expect(session.bundles).toHaveLength(3);
  });

  it("keeps the scene document clean while the fault hides a node", () => {
    const clean = new DemoGame(88);
    const buggy = new DemoGame(88, { fault: { kind: "invisible", nodeId: "runner" } });
    for (let i = 0; i < 7; i++) {
      clean.step();
      buggy.step();
    }
    const cleanBundle = new CaptureSession(clean.host(), "clean").freezeAndCapture();
    const buggyBundle = new CaptureSession(buggy.host(), "buggy").freezeAndCapture();

    // same scene state on both sides, runner still reported visible
    expect(buggyBundle.corJson).toBe(cleanBundle.corJson);
    const runner = JSON.parse(buggyBundle.corJson).nodes.find(
      (n: { id: string }) => n.id === "runner",
    );
    expect(runner.visible).toBeUndefined(); // default true, omitted

    // but the pixels disagree: the painter dropped the runner
    expect(buggyBundle.screenshotChecksum).not.toBe(cleanBundle.screenshotChecksum);
  });
});

describe("export cli", () => {
  it("writes the requested run layout", () => {
    const out = join(tmp(), "captures");
    const code = main(["--out", out, "--clean-runs", "2", "--buggy-runs", "1", "--seed", "9", "--snapshots", "3"]);
    expect(code).toBe(0);
    expect(readdirSync(out).sort()).toEqual(["buggy-000", "clean-000", "clean-001"]);
    for (const run of readdirSync(out)) {
      expect(readdirSync(join(out, run)).sort()).toEqual(["snap-000", "snap-001", "snap-002"]);
      for (const snap of readdirSync(join(out, run))) {
        const files = readdirSync(join(out, run, snap)).sort();
        expect(files).toEqual(["assets", "cor.json", "manifest.json", "screenshot.png"]);
      }
    }
  });

  it("is deterministic for a fixed seed", () => {
    const a = join(tmp(), "a");
    const b = join(tmp(), "b");
    expect(main(["--out", a, "--seed", "5"])).toBe(0);
    expect(main(["--out", b, "--seed", "5"])).toBe(0);
    const manifests = (root: string) =>
      readdirSync(root)
        .sort()
        .flatMap((run) =>
          readdirSync(join(root, run))
            .sort()
            .map((snap) => readFileSync(join(root, run, snap, "manifest.json"), "utf8")),
        );
    expect(manifests(b)).toEqual(manifests(a));
  });

  it("rejects missing or malformed flags", () => {
    expect(main([])).toBe(2);
    expect(main(["--out", join(tmp(), "x"), "--clean-runs", "-1"])).toBe(2);
    expect(main(["--out", join(tmp(), "x"), "--snapshots", "zero"])).toBe(2);
  });
});
