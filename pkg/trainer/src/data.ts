/**
 * Training data plumbing: load a directory of PNGs, center-crop and
 * resize to the training resolution, map to the signed unit range, and
 * generate the procedural toy corpus used by the desk-scale runs.
 */

import * as fs from "fs";
import * as path from "path";
import { Rng } from "./rng";
import { ImageData, decodePng, toRgb } from "./png";

/** Nearest-neighbor resize, matching pixel-center coordinate mapping. */
export function resizeNearest(img: ImageData, outH: number, outW: number): ImageData {
  const { width, height, channels, data } = img;
  const out = new Float64Array(outH * outW * channels);
  for (let y = 0; y < outH; y++) {
    const sy = Math.min(height - 1, Math.max(0, Math.floor((y + 0.5) * (height / outH))));
    for (let x = 0; x < outW; x++) {
      const sx = Math.min(width - 1, Math.max(0, Math.floor((x + 0.5) * (width / outW))));
      for (let c = 0; c < channels; c++) {
        out[(y * outW + x) * channels + c] = data[(sy * width + sx) * channels + c];
      }
    }
  }
  return { width: outW, height: outH, channels, data: out };
}

export function centerCropSquare(img: ImageData): ImageData {
  const side = Math.min(img.width, img.height);
  const x0 = Math.floor((img.width - side) / 2);
  const y0 = Math.floor((img.height - side) / 2);
  const out = new Float64Array(side * side * img.channels);
  for (let y = 0; y < side; y++) {
    for (let x = 0; x < side; x++) {
      for (let c = 0; c < img.channels; c++) {
        out[(y * side + x) * img.channels + c] =
          img.data[((y + y0) * img.width + (x + x0)) * img.channels + c];
      }
    }
  }
  return { width: side, height: side, channels: img.channels, data: out };
}

/** Load every PNG under dir, cropped/resized to size, in [-1, 1]. */
export function loadDataset(dir: string, size: number): Float32Array[] {
  const files = fs.readdirSync(dir).filter((f) => f.toLowerCase().endsWith(".png")).sort();
  if (files.length === 0) throw new Error(`no PNG files in ${dir}`);
  return files.map((f) => {
    let img = toRgb(decodePng(fs.readFileSync(path.join(dir, f))));
    img = centerCropSquare(img);
    if (img.width !== size) img = resizeNearest(img, size, size);
    const out = new Float32Array(img.data.length);
    for (let i = 0; i < out.length; i++) out[i] = img.data[i] * 2 - 1;
    return out;
  });
}

/**
 * Procedural toy image in [0, 1]: smooth low-frequency washes plus
 * hard-edged rectangles/disks and a sinusoidal texture patch. Cheap to
 * sample by the thousand, rich enough that downsampling destroys
 * measurable detail.
 */
export function makeToyImage(size: number, seed: number): ImageData {
  const rng = new Rng(0x9e3779b9 ^ seed);
  const data = new Float64Array(size * size * 3);
  const waves = 4;
  const wx: number[] = [], wy: number[] = [], wp: number[] = [], wa: number[] = [];
  for (let k = 0; k < waves; k++) {
    wx.push(rng.uniform(0.5, 3.0) / size);
    wy.push(rng.uniform(0.5, 3.0) / size);
    wp.push(rng.uniform(0, 2 * Math.PI));
    wa.push(rng.uniform(0.05, 0.15));
  }
  const tint = [rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7)];
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      let v = 0;
      for (let k = 0; k < waves; k++) {
        v += wa[k] * Math.sin(2 * Math.PI * (wx[k] * x + wy[k] * y) + wp[k]);
      }
      for (let c = 0; c < 3; c++) data[(y * size + x) * 3 + c] = tint[c] + v;
    }
  }
  for (let shape = 0; shape < 5; shape++) {
    const color = [rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)];
    if (shape % 2 === 0) {
      const y0 = rng.int(0, (3 * size) / 4), x0 = rng.int(0, (3 * size) / 4);
      const h = rng.int(size / 6, size / 3), w = rng.int(size / 6, size / 3);
      for (let y = y0; y < Math.min(size, y0 + h); y++) {
        for (let x = x0; x < Math.min(size, x0 + w); x++) {
          for (let c = 0; c < 3; c++) {
            const i = (y * size + x) * 3 + c;
            data[i] = 0.2 * data[i] + 0.8 * color[c];
          }
        }
      }
    } else {
      const cy = rng.int(size / 6, (5 * size) / 6), cx = rng.int(size / 6, (5 * size) / 6);
      const r = rng.int(size / 10, size / 5);
      for (let y = Math.max(0, cy - r); y < Math.min(size, cy + r); y++) {
        for (let x = Math.max(0, cx - r); x < Math.min(size, cx + r); x++) {
          if ((y - cy) ** 2 + (x - cx) ** 2 < r * r) {
            for (let c = 0; c < 3; c++) {
              const i = (y * size + x) * 3 + c;
              data[i] = 0.2 * data[i] + 0.8 * color[c];
            }
          }
        }
      }
    }
  }
  const freq = rng.uniform(0.1, 0.16);
  const ang = rng.uniform(0, Math.PI);
  const py = rng.int(0, size / 2), px = rng.int(0, size / 2);
  const side = Math.floor(size / 3);
  for (let y = py; y < Math.min(size, py + side); y++) {
    for (let x = px; x < Math.min(size, px + side); x++) {
      const s = 0.5 + 0.5 * Math.sin(2 * Math.PI * freq * (Math.cos(ang) * x + Math.sin(ang) * y));
      for (let c = 0; c < 3; c++) {
        const i = (y * size + x) * 3 + c;
        data[i] = 0.7 * data[i] + 0.3 * s;
      }
    }
  }
  for (let i = 0; i < data.length; i++) data[i] = Math.min(1, Math.max(0, data[i]));
  return { width: size, height: size, channels: 3, data };
}

export function makeToyDataset(count: number, size: number, seed = 0): Float32Array[] {
  const out: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const img = makeToyImage(size, seed * 1000 + i);
    const arr = new Float32Array(img.data.length);
    for (let j = 0; j < arr.length; j++) arr[j] = img.data[j] * 2 - 1;
    out.push(arr);
  }
  return out;
}
