/**
 * Frechet distance between image sets.
 *
 * FID(real, fake) = |mu_r - mu_f|^2 + tr(C_r + C_f - 2 (C_r C_f)^(1/2)),
 * over features from a fixed extractor. With no pretrained classifier
 * available offline, the default extractor is a deterministic
 * random-weight conv stack (seeded, three stride-2 conv+relu stages,
 * global average pool); random-feature Frechet distances preserve the
 * orderings the evaluation needs (identical sets score ~0, heavier
 * corruption scores higher) without claiming comparability to published
 * FID numbers. The trace term is computed as sum(sqrt(eig(S))) with
 * S = C_r^(1/2) C_f C_r^(1/2), which is symmetric PSD.
 *
 * CLI: node dist/fid.js REAL_DIR FAKE_DIR
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";
import { initBackend } from "./backend";
import { jacobiEigSym, matMul, sqrtmPsd } from "./linalg";
import { ImageData, decodePng, toRgb } from "./png";
import { resizeNearest } from "./data";
import { Rng } from "./rng";

export const FEATURE_DIM = 64;
const FEATURE_INPUT = 32;

let extractor: { w1: tf.Tensor4D; w2: tf.Tensor4D; w3: tf.Tensor4D } | null = null;

function getExtractor() {
  if (!extractor) {
    const rng = new Rng(0x51f1d);
    const mk = (inC: number, outC: number) => {
      const data = new Float32Array(3 * 3 * inC * outC);
      const std = 1 / Math.sqrt(9 * inC);
      for (let i = 0; i < data.length; i++) data[i] = rng.gaussian() * std;
      return tf.tensor4d(data, [3, 3, inC, outC]);
    };
    extractor = { w1: mk(3, 16), w2: mk(16, 32), w3: mk(32, FEATURE_DIM) };
  }
  return extractor;
}

export function featuresOf(img: ImageData): Float64Array {
  const rgb = toRgb(img);
  const sized = rgb.width === FEATURE_INPUT && rgb.height === FEATURE_INPUT
    ? rgb : resizeNearest(rgb, FEATURE_INPUT, FEATURE_INPUT);
  const { w1, w2, w3 } = getExtractor();
  const pooled = tf.tidy(() => {
    const data = new Float32Array(sized.data.length);
    for (let i = 0; i < data.length; i++) data[i] = sized.data[i] * 2 - 1;
    let x = tf.tensor4d(data, [1, FEATURE_INPUT, FEATURE_INPUT, 3]);
    x = tf.relu(tf.conv2d(x, w1, 2, "same"));
    x = tf.relu(tf.conv2d(x, w2, 2, "same"));
    x = tf.relu(tf.conv2d(x, w3, 2, "same"));
    return tf.mean(x, [1, 2]).dataSync() as Float32Array;
  });
  return Float64Array.from(pooled);
}

export interface GaussianStats {
  mean: Float64Array;
  cov: Float64Array; // FEATURE_DIM x FEATURE_DIM row-major
  count: number;
}

export function statsOf(featureRows: Float64Array[]): GaussianStats {
  const n = featureRows.length;
  const d = FEATURE_DIM;
  if (n < 2) throw new Error("need at least 2 images for covariance statistics");
  const mean = new Float64Array(d);
  for (const row of featureRows) for (let i = 0; i < d; i++) mean[i] += row[i] / n;
  const cov = new Float64Array(d * d);
  for (const row of featureRows) {
    for (let i = 0; i < d; i++) {
      const di = row[i] - mean[i];
      for (let j = 0; j < d; j++) cov[i * d + j] += (di * (row[j] - mean[j])) / (n - 1);
    }
  }
  return { mean, cov, count: n };
}

export function frechetDistance(a: GaussianStats, b: GaussianStats): number {
  const d = FEATURE_DIM;
  let meanTerm = 0;
  for (let i = 0; i < d; i++) meanTerm += (a.mean[i] - b.mean[i]) ** 2;
  let traceA = 0, traceB = 0;
  for (let i = 0; i < d; i++) {
    traceA += a.cov[i * d + i];
    traceB += b.cov[i * d + i];
  }
  const rootA = sqrtmPsd(a.cov, d);
  const s = matMul(matMul(rootA, b.cov, d), rootA, d);
  // symmetrize against accumulation noise before the eigensolve
  for (let i = 0; i < d; i++) {
    for (let j = i + 1; j < d; j++) {
      const v = 0.5 * (s[i * d + j] + s[j * d + i]);
      s[i * d + j] = v;
      s[j * d + i] = v;
    }
  }
  const { values } = jacobiEigSym(s, d);
  let traceSqrt = 0;
  for (let i = 0; i < d; i++) traceSqrt += Math.sqrt(Math.max(values[i], 0));
  return meanTerm + traceA + traceB - 2 * traceSqrt;
}

function loadDirFeatures(dir: string): Float64Array[] {
  const files = fs.readdirSync(dir).filter((f) => f.toLowerCase().endsWith(".png")).sort();
  if (files.length === 0) throw new Error(`no PNG files in ${dir}`);
  return files.map((f) => featuresOf(decodePng(fs.readFileSync(path.join(dir, f)))));
}

export function fid(realDir: string, fakeDir: string): number {
  return frechetDistance(statsOf(loadDirFeatures(realDir)), statsOf(loadDirFeatures(fakeDir)));
}

async function main(): Promise<void> {
  const [realDir, fakeDir] = process.argv.slice(2);
  if (!realDir || !fakeDir) {
    process.stderr.write("usage: fid.js REAL_DIR FAKE_DIR\n");
    process.exit(2);
  }
  await initBackend();
  const value = fid(realDir, fakeDir);
  process.stdout.write(`real_dir,fake_dir,fid\n${realDir},${fakeDir},${value.toPrecision(10)}\n`);
}

if (require.main === module) {
  main().catch((err) => {
    process.stderr.write(`fid failed: ${err}\n`);
    process.exit(1);
  });
}
