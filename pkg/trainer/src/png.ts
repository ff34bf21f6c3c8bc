/**
 * Minimal PNG codec: enough to read the restoration pipeline's outputs
 * and write training data and samples. Supports bit depths 8 and 16,
 * color types gray (0), RGB (2), gray+alpha (4) and RGBA (6),
 * non-interlaced only. Values are normalized floats in [0, 1].
 */

import * as zlib from "zlib";

export interface ImageData {
  width: number;
  height: number;
  channels: number;
  /** Row-major (h, w, c), length = width * height * channels. */
  data: Float64Array;
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

let crcTable: Uint32Array | null = null;

function crc32(buf: Buffer): number {
  if (!crcTable) {
    crcTable = new Uint32Array(256);
    for (let n = 0; n < 256; n++) {
      let c = n;
      for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
      crcTable[n] = c >>> 0;
    }
  }
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) c = crcTable[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(data.length, 0);
  const body = Buffer.concat([Buffer.from(type, "ascii"), data]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, body, crc]);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(buf: Buffer): ImageData {
  if (!buf.subarray(0, 8).equals(SIGNATURE)) throw new Error("not a PNG file");
  let pos = 8;
  let width = 0, height = 0, bitDepth = 0, colorType = 0;
  const idat: Buffer[] = [];
  while (pos < buf.length) {
    const len = buf.readUInt32BE(pos);
    const type = buf.toString("ascii", pos + 4, pos + 8);
    const data = buf.subarray(pos + 8, pos + 8 + len);
    if (type === "IHDR") {
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      bitDepth = data[8];
      colorType = data[9];
      if (data[12] !== 0) throw new Error("interlaced PNG not supported");
      if (bitDepth !== 8 && bitDepth !== 16) throw new Error(`bit depth ${bitDepth} not supported`);
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + len;
  }
  const channels = { 0: 1, 2: 3, 4: 2, 6: 4 }[colorType as 0 | 2 | 4 | 6];
  if (channels === undefined) throw new Error(`color type ${colorType} not supported`);
  const raw = zlib.inflateSync(Buffer.concat(idat));
  const sampleBytes = bitDepth / 8;
  const bpp = channels * sampleBytes;
  const stride = width * bpp;
  const out = new Float64Array(width * height * channels);
  const peak = bitDepth === 8 ? 255 : 65535;
  const prev = Buffer.alloc(stride);
  const cur = Buffer.alloc(stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    raw.copy(cur, 0, y * (stride + 1) + 1, (y + 1) * (stride + 1));
    for (let i = 0; i < stride; i++) {
      const left = i >= bpp ? cur[i - bpp] : 0;
      const up = prev[i];
      const ul = i >= bpp ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: cur[i] = (cur[i] + left) & 0xff; break;
        case 2: cur[i] = (cur[i] + up) & 0xff; break;
        case 3: cur[i] = (cur[i] + ((left + up) >> 1)) & 0xff; break;
        case 4: cur[i] = (cur[i] + paeth(left, up, ul)) & 0xff; break;
        default: throw new Error(`bad filter byte ${filter}`);
      }
    }
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < channels; c++) {
        const off = x * bpp + c * sampleBytes;
        const v = bitDepth === 8 ? cur[off] : (cur[off] << 8) | cur[off + 1];
        out[(y * width + x) * channels + c] = v / peak;
      }
    }
    cur.copy(prev);
  }
  return { width, height, channels, data: out };
}

export function encodePng(img: ImageData, bitDepth: 8 | 16 = 8): Buffer {
  const { width, height, channels, data } = img;
  if (channels !== 1 && channels !== 3) {
    throw new Error(`encode supports 1 or 3 channels, got ${channels}`);
  }
  const colorType = channels === 1 ? 0 : 2;
  const peak = bitDepth === 8 ? 255 : 65535;
  const sampleBytes = bitDepth / 8;
  const stride = width * channels * sampleBytes;
  const raw = Buffer.alloc(height * (stride + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < channels; c++) {
        const v = Math.round(Math.min(1, Math.max(0, data[(y * width + x) * channels + c])) * peak);
        const off = y * (stride + 1) + 1 + (x * channels + c) * sampleBytes;
        if (bitDepth === 8) {
          raw[off] = v;
        } else {
          raw[off] = v >> 8;
          raw[off + 1] = v & 0xff;
        }
      }
    }
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = bitDepth;
  ihdr[9] = colorType;
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", zlib.deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

/** Decode and coerce to 3 channels (replicate gray, drop alpha). */
export function toRgb(img: ImageData): ImageData {
  if (img.channels === 3) return img;
  const out = new Float64Array(img.width * img.height * 3);
  for (let p = 0; p < img.width * img.height; p++) {
    const base = p * img.channels;
    if (img.channels === 1 || img.channels === 2) {
      out[p * 3] = out[p * 3 + 1] = out[p * 3 + 2] = img.data[base];
    } else {
      out[p * 3] = img.data[base];
      out[p * 3 + 1] = img.data[base + 1];
      out[p * 3 + 2] = img.data[base + 2];
    }
  }
  return { width: img.width, height: img.height, channels: 3, data: out };
}
