/**
 * Software renderer for the demo engine.
 *
 * Painter's algorithm over the scene tree, siblings ordered by zIndex.
 * Placement is restricted to whole-pixel translations (no rotation, no
 * scaling, anchors at the origin), which keeps every blit an exact texel
 * copy. A render fault can hide individual nodes from the painter while
 * the scene graph still reports them as visible; that mismatch is the
 * class of rendering bug the capture pipeline exists to expose.
 */

import type { SceneNode } from "./scene";
import { paintOrder } from "./scene";
import type { Bitmap } from "./png";

export interface Surface {
  width: number;
  height: number;
  pixels: Uint8Array;
}

export interface RenderFault {
  /** Nodes the painter silently drops; scene state is left alone. */
  hiddenNodeIds: Set<string>;
}

export function makeSurface(width: number, height: number): Surface {
  if (width <= 0 || height <= 0) throw new Error("surface dimensions must be positive");
  return { width, height, pixels: new Uint8Array(width * height * 4) };
}

function mod(n: number, m: number): number {
  return ((n % m) + m) % m;
}

function worldOffset(node: SceneNode): [number, number] {
  let tx = 0;
  let ty = 0;
  let cur: SceneNode | null = node;
  while (cur !== null) {
    if (cur.rotation !== 0 || cur.scaleX !== 1 || cur.scaleY !== 1) {
      throw new Error(`renderer supports translation only, node ${cur.id} is transformed`);
    }
    if (cur.anchorX !== 0 || cur.anchorY !== 0) {
      throw new Error(`renderer supports origin anchors only, node ${cur.id} is anchored`);
    }
    if (!Number.isInteger(cur.x) || !Number.isInteger(cur.y)) {
      throw new Error(`renderer supports whole-pixel placement only, node ${cur.id} is fractional`);
    }
    tx += cur.x;
    ty += cur.y;
    cur = cur.parent;
  }
  return [tx, ty];
}

function frameOf(node: SceneNode, texture: Bitmap): [number, number, number, number] {
  if (node.kind === "animated_sprite") {
    const count = node.frameCount ?? 1;
    const base = node.frameRect ?? [0, 0, Math.floor(texture.width / count), texture.height];
    const index = node.frameIndex ?? 0;
    return [base[0] + index * base[2], base[1], base[2], base[3]];
  }
  return node.frameRect ?? [0, 0, texture.width, texture.height];
}

// src over dst for one pixel, straight RGBA in, straight RGBA out
function blendPixel(dst: Uint8Array, di: number, r: number, g: number, b: number, a: number): void {
  const sa = a / 255;
  const da = dst[di + 3]! / 255;
  const oa = sa + da * (1 - sa);
  if (oa <= 0) {
    dst[di] = dst[di + 1] = dst[di + 2] = dst[di + 3] = 0;
    return;
  }
  const mix = (s: number, d: number) => Math.floor(((s * sa + d * da * (1 - sa)) / oa) + 0.5);
  dst[di] = mix(r, dst[di]!);
  dst[di + 1] = mix(g, dst[di + 1]!);
  dst[di + 2] = mix(b, dst[di + 2]!);
  dst[di + 3] = Math.floor(oa * 255 + 0.5);
}

function putTexel(surface: Surface, cx: number, cy: number, texture: Bitmap, u: number, v: number): void {
  const si = (v * texture.width + u) * 4;
  const a = texture.pixels[si + 3]!;
  if (a === 0) return;
  const di = (cy * surface.width + cx) * 4;
  if (a === 255) {
    surface.pixels[di] = texture.pixels[si]!;
    surface.pixels[di + 1] = texture.pixels[si + 1]!;
    surface.pixels[di + 2] = texture.pixels[si + 2]!;
    surface.pixels[di + 3] = 255;
    return;
  }
  blendPixel(surface.pixels, di, texture.pixels[si]!, texture.pixels[si + 1]!, texture.pixels[si + 2]!, a);
}

function drawSprite(surface: Surface, node: SceneNode, texture: Bitmap, tx: number, ty: number): void {
  const [fx, fy, fw, fh] = frameOf(node, texture);
  if (fw <= 0 || fh <= 0 || fx < 0 || fy < 0 || fx + fw > texture.width || fy + fh > texture.height) {
    throw new Error(`frame outside texture bounds for node ${node.id}`);
  }
  const x0 = Math.max(tx, 0);
  const y0 = Math.max(ty, 0);
  const x1 = Math.min(tx + fw, surface.width);
  const y1 = Math.min(ty + fh, surface.height);
  for (let cy = y0; cy < y1; cy++) {
    for (let cx = x0; cx < x1; cx++) {
      putTexel(surface, cx, cy, texture, fx + (cx - tx), fy + (cy - ty));
    }
  }
}

function drawTiling(surface: Surface, node: SceneNode, texture: Bitmap, tx: number, ty: number): void {
  const [fx, fy, fw, fh] = frameOf(node, texture);
  if (fw <= 0 || fh <= 0 || fx + fw > texture.width || fy + fh > texture.height) {
    throw new Error(`frame outside texture bounds for node ${node.id}`);
  }
  const rw = node.renderSizeW ?? 0;
  const rh = node.renderSizeH ?? 0;
  if (rw <= 0 || rh <= 0) throw new Error(`tiling sprite ${node.id} has no render size`);
  if (node.tileScaleX !== 1 || node.tileScaleY !== 1) {
    throw new Error(`renderer supports unit tile scale only, node ${node.id}`);
  }
  if (!Number.isInteger(node.tileOffsetX) || !Number.isInteger(node.tileOffsetY)) {
    throw new Error(`renderer supports whole-pixel tile offsets only, node ${node.id}`);
  }
  const x0 = Math.max(tx, 0);
  const y0 = Math.max(ty, 0);
  const x1 = Math.min(tx + rw, surface.width);
  const y1 = Math.min(ty + rh, surface.height);
  for (let cy = y0; cy < y1; cy++) {
    const v = fy + mod(cy - ty - node.tileOffsetY, fh);
    for (let cx = x0; cx < x1; cx++) {
      const u = fx + mod(cx - tx - node.tileOffsetX, fw);
      putTexel(surface, cx, cy, texture, u, v);
    }
  }
}

/**
 * Paint the scene onto the surface. Textures are looked up by each
 * node's resource URL; a fault hides listed nodes from the painter only.
 */
export function renderScene(
  surface: Surface,
  root: SceneNode,
  textures: Map<string, Bitmap>,
  background: [number, number, number],
  fault?: RenderFault | null,
): Surface {
  const px = surface.pixels;
  for (let i = 0; i < px.length; i += 4) {
    px[i] = background[0];
    px[i + 1] = background[1];
    px[i + 2] = background[2];
    px[i + 3] = 255;
  }
  for (const node of paintOrder(root)) {
    if (fault != null && fault.hiddenNodeIds.has(node.id)) continue;
    if (node.alpha !== 1) {
      throw new Error(`renderer supports opaque nodes only, node ${node.id} has alpha ${node.alpha}`);
    }
    if (node.textureUrl === null) throw new Error(`drawable node ${node.id} has no texture`);
    const texture = textures.get(node.textureUrl);
    if (texture === undefined) throw new Error(`texture not loaded: ${node.textureUrl}`);
    const [tx, ty] = worldOffset(node);
    if (node.kind === "tiling_sprite") drawTiling(surface, node, texture, tx, ty);
    else drawSprite(surface, node, texture, tx, ty);
  }
  return surface;
}
