import { describe, expect, it } from "vitest";

import { CaptureError, CaptureSession, type CaptureHost } from "../src/capture";
import { DemoGame, TEXTURE_URLS } from "../src/demo";
import { decodePng } from "../src/png";
import type { SceneNode } from "../src/scene";

/** Plain-data snapshot of the live tree, parent links dropped. */
function treeDoc(node: SceneNode): unknown {
  const { parent, children, ...rest } = node;
  void parent;
  return { ...rest, children: children.map(treeDoc) };
}

function wrapHost(base: CaptureHost, overrides: Partial<CaptureHost> = {}): CaptureHost {
  return {
    root: base.root,
    canvas: overrides.canvas ?? base.canvas,
    scheduler: base.scheduler,
    background: base.background,
    get tick() {
      return base.tick;
    },
    now: overrides.now ?? (() => base.now()),
    fetchAsset: overrides.fetchAsset ?? ((url) => base.fetchAsset(url)),
  };
}

describe("freeze and capture", () => {
  it("gives identical scene documents for two captures without animation", () => {
    const game = new DemoGame(11);
    for (let i = 0; i < 6; i++) game.step();
    const session = new CaptureSession(game.host(), "twice");
    const first = session.freezeAndCapture();
    const second = session.freezeAndCapture();
    expect(second.corJson).toBe(first.corJson);
    expect(first.snapshotIndex).toBe(0);
    expect(second.snapshotIndex).toBe(1);
    expect(session.bundles).toHaveLength(2);
    expect(JSON.parse(second.manifestJson).snapshot_index).toBe(1);
  });

  it("never mutates the scene, the canvas or the texture store", () => {
    const game = new DemoGame(12);
    for (let i = 0; i < 4; i++) game.step();
    const sceneBefore = JSON.stringify(treeDoc(game.scene));
    const canvasBefore = Buffer.from(game.surface.pixels);
    const texturesBefore = new Map(
      [...game.textures].map(([url, bytes]) => [url, Buffer.from(bytes)]),
    );

    const session = new CaptureSession(game.host(), "hands-off");
    session.freezeAndCapture();
    session.freezeAndCapture();

    expect(JSON.stringify(treeDoc(game.scene))).toBe(sceneBefore);
    expect(Buffer.from(game.surface.pixels).equals(canvasBefore)).toBe(true);
    for (const [url, bytes] of game.textures) {
      expect(bytes.equals(texturesBefore.get(url)!)).toBe(true);
    }
  });

  it("freezes the scene document and the screenshot on the same frame", () => {
    const game = new DemoGame(42);
    for (let i = 0; i < 9; i++) game.step();
    const session = new CaptureSession(game.host(), "anim");
    const bundle = session.freezeAndCapture();

    const cor = JSON.parse(bundle.corJson);
    const runner = cor.nodes.find((n: { id: string }) => n.id === "runner");
    expect(runner.frame_index).toBe(9 % 4);
    expect(JSON.parse(bundle.manifestJson).snapshot_tick).toBe(9);

    // the screenshot is the exact frame a twin game shows at that tick
    const twin = new DemoGame(42);
    for (let i = 0; i < 9; i++) twin.step();
    const shot = decodePng(bundle.screenshotPng);
    expect(Buffer.from(shot.pixels).equals(Buffer.from(twin.surface.pixels))).toBe(true);
  });

  it("suspends frame scheduling during capture and resumes after", () => {
    const game = new DemoGame(13);
    game.scheduler.suspend();
    const tickBefore = game.tick;
    game.step();
    expect(game.tick).toBe(tickBefore); // suspended: no frames advance
    game.scheduler.resume();

    const session = new CaptureSession(game.host(), "sched");
    session.freezeAndCapture();
    expect(game.scheduler.suspended).toBe(false);
    game.step();
    expect(game.tick).toBe(tickBefore + 1);
  });

  it("raises capture denied with the cause when read-back is blocked", () => {
    const game = new DemoGame(14);
    const blocked = wrapHost(game.host(), {
      canvas: {
        width: game.width,
        height: game.height,
        readPixels: () => {
          throw new Error("tainted canvas");
        },
      },
    });
    const session = new CaptureSession(blocked, "denied");
    let caught: unknown;
    try {
      session.freezeAndCapture();
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(CaptureError);
    expect((caught as CaptureError).message).toBe("capture denied");
    expect(((caught as CaptureError).cause as Error).message).toBe("tainted canvas");
    expect(game.scheduler.suspended).toBe(false); // resumed despite the failure
    expect(session.bundles).toHaveLength(0);
  });
});

describe("asset collection", () => {
  it("stores one file for three nodes sharing a texture", () => {
    const game = new DemoGame(15);
    const session = new CaptureSession(game.host(), "dedup");
    const collected = session.collectAssets();
    expect(collected).toHaveLength(4); // runner, ground, props, cloud
    expect(session.assetUrls.size).toBe(4);

    const bundle = session.freezeAndCapture();
    const cor = JSON.parse(bundle.corJson);
    const byId = new Map(cor.nodes.map((n: { id: string }) => [n.id, n]));
    const propsUsers = ["coin-0", "coin-1", "coin-2", "badge"].map(
      (id) => (byId.get(id) as { asset_id: string }).asset_id,
    );
    expect(new Set(propsUsers).size).toBe(1);
    expect(bundle.assets.size).toBe(4);
  });

  it("fetches each distinct URL once, re-collection is checksum-stable", () => {
    const game = new DemoGame(16);
    let fetches = 0;
    const counting = wrapHost(game.host(), {
      fetchAsset: (url) => {
        fetches += 1;
        return game.host().fetchAsset(url);
      },
    });
    const session = new CaptureSession(counting, "stable");
    const first = session.collectAssets().map((a) => `${a.id} ${a.checksum}`);
    const again = session.collectAssets().map((a) => `${a.id} ${a.checksum}`);
    expect(fetches).toBe(4);
    expect(again).toEqual(first);
  });

  it("records a failed fetch and captures without it", () => {
    const game = new DemoGame(17);
    game.textures.delete(TEXTURE_URLS.cloud); // the "network" loses one texture
    const session = new CaptureSession(game.host(), "gap");
    const bundle = session.freezeAndCapture();

    expect(session.failures.size).toBe(1);
    const failure = session.failures.get(TEXTURE_URLS.cloud)!;
    expect(failure.error).toMatch(/no resource/);
    expect(failure.id.startsWith("missing-")).toBe(true);

    const manifest = JSON.parse(bundle.manifestJson);
    const entry = manifest.assets[failure.id];
    expect(entry.checksum).toBe("");
    expect(entry.source_url).toBe(TEXTURE_URLS.cloud);
    expect(typeof entry.error).toBe("string");
    // the other three textures are intact
    const good = Object.keys(manifest.assets).filter((id) => id.startsWith("tex-"));
    expect(good).toHaveLength(3);
    // the scene still references the missing asset so a validator sees the hole
    const cor = JSON.parse(bundle.corJson);
    const cloud = cor.nodes.find((n: { id: string }) => n.id === "cloud");
    expect(cloud.asset_id).toBe(failure.id);
  });
});
