/**
 * Minimal PNG codec for RGBA8 bitmaps.
 *
 * The encoder writes one zlib-compressed IDAT with filter 0 on every
 * scanline, which is all a capture needs. The decoder handles
 * non-interlaced 8-bit RGB and RGBA with any scanline filter, enough to
 * read back what the encoder wrote plus typical texture files.
 */

import { deflateSync, inflateSync } from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = new Uint32Array(256);
for (let n = 0; n < 256; n++) {
  let c = n;
  for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
  CRC_TABLE[n] = c >>> 0;
}

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]!) & 0xff]! ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "latin1");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(head.subarray(4), data), 0);
  return Buffer.concat([head, data, crc]);
}

export interface Bitmap {
  width: number;
  height: number;
  /** RGBA bytes, row major, 4 per pixel. */
  pixels: Uint8Array;
}

export function encodePng(bitmap: Bitmap): Buffer {
  const { width, height, pixels } = bitmap;
  if (width <= 0 || height <= 0 || pixels.length !== width * height * 4) {
    throw new Error("encodePng: bitmap dimensions do not match pixel count");
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 6; // color type: RGBA
  // bytes 10..12 stay zero: deflate, adaptive filtering, no interlace

  const stride = width * 4;
  const raw = Buffer.alloc((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter: none
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

export function decodePng(bytes: Uint8Array): Bitmap {
  const buf = Buffer.isBuffer(bytes)
    ? bytes
    : Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("decodePng: not a PNG file");
  }

  let width = 0;
  let height = 0;
  let channels = 0;
  const idat: Buffer[] = [];
  let off = 8;
  while (off + 12 <= buf.length) {
    const len = buf.readUInt32BE(off);
    const type = buf.toString("latin1", off + 4, off + 8);
    const data = buf.subarray(off + 8, off + 8 + len);
    if (type === "IHDR") {
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      const depth = data[8];
      const color = data[9];
      const interlace = data[12];
      if (depth !== 8 || (color !== 6 && color !== 2) || interlace !== 0) {
        throw new Error("decodePng: only non-interlaced 8-bit RGB/RGBA is supported");
      }
      channels = color === 6 ? 4 : 3;
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + len;
  }
  if (width <= 0 || height <= 0 || channels === 0) {
    throw new Error("decodePng: missing or empty IHDR");
  }

  const raw = inflateSync(Buffer.concat(idat));
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new Error("decodePng: scanline data has the wrong length");
  }

  const lines = Buffer.alloc(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)]!;
    const src = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const cur = lines.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? lines.subarray((y - 1) * stride, y * stride) : null;
    for (let i = 0; i < stride; i++) {
      const left = i >= channels ? cur[i - channels]! : 0;
      const up = prev !== null ? prev[i]! : 0;
      const corner = prev !== null && i >= channels ? prev[i - channels]! : 0;
      let v = src[i]!;
      if (filter === 1) v += left;
      else if (filter === 2) v += up;
      else if (filter === 3) v += (left + up) >> 1;
      else if (filter === 4) v += paeth(left, up, corner);
      else if (filter !== 0) throw new Error(`decodePng: unknown scanline filter ${filter}`);
      cur[i] = v & 0xff;
    }
  }

  const pixels = new Uint8Array(width * height * 4);
  if (channels === 4) {
    pixels.set(lines);
  } else {
    for (let p = 0, q = 0; p < lines.length; p += 3, q += 4) {
      pixels[q] = lines[p]!;
      pixels[q + 1] = lines[p + 1]!;
      pixels[q + 2] = lines[p + 2]!;
      pixels[q + 3] = 255;
    }
  }
  return { width, height, pixels };
}
