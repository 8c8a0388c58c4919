import { describe, expect, it } from "vitest";

import { decodePng, encodePng } from "../src/png";
import { SplitMix64 } from "../src/demo";

// RGBA PNG written by an unrelated encoder (Pillow), 5x3, adaptive
// scanline filters; raw pixels frozen next to it.
const FOREIGN_PNG_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAUAAAADCAYAAABbNsX4AAAASklEQVR4nAE/AMD/AYtK5fEe9yGv7CkgDydjiTamLFuvBNQMrtW33WQ1aew9ZInniNVUYc0+ADQn+kjXMqHfcKyh6SYRWQHdBvJ/p7Udw4o22vEAAAAASUVORK5CYII=";
const FOREIGN_PIXELS = [
  139, 74, 229, 241, 169, 65, 6, 160, 149, 106, 38, 175, 188, 205, 175, 229, 98, 249, 10, 148,
  95, 86, 147, 198, 66, 39, 106, 213, 171, 45, 167, 57, 69, 81, 55, 14, 153, 178, 215, 76,
  52, 39, 250, 72, 215, 50, 161, 223, 112, 172, 161, 233, 38, 17, 89, 1, 221, 6, 242, 127,
];

describe("png codec", () => {
  it("round trips an arbitrary RGBA bitmap", () => {
    const rng = new SplitMix64(20240901);
    const width = 37;
    const height = 23;
    const pixels = new Uint8Array(width * height * 4);
    for (let i = 0; i < pixels.length; i++) pixels[i] = rng.int(0, 255);
    const decoded = decodePng(encodePng({ width, height, pixels }));
    expect(decoded.width).toBe(width);
    expect(decoded.height).toBe(height);
    expect(Buffer.from(decoded.pixels).equals(Buffer.from(pixels))).toBe(true);
  });

  it("decodes a file written by a different encoder, filters included", () => {
    const decoded = decodePng(Buffer.from(FOREIGN_PNG_B64, "base64"));
    expect(decoded.width).toBe(5);
    expect(decoded.height).toBe(3);
    expect([...decoded.pixels]).toEqual(FOREIGN_PIXELS);
  });

  it("rejects bytes that are not a PNG", () => {
    expect(() => decodePng(Buffer.from("definitely not a png"))).toThrow(/not a PNG/);
  });

  it("rejects bitmaps whose pixel count disagrees with the size", () => {
    expect(() => encodePng({ width: 2, height: 2, pixels: new Uint8Array(3) })).toThrow(
      /dimensions/,
    );
  });
});
