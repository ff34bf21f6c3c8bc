import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import * as tf from "@tensorflow/tfjs";
import { initBackend } from "../src/backend";
import { netFromContainer, readContainer, writeContainer } from "../src/container";
import { buildNet, predictNoiseImage, sinusoidalEmbedding } from "../src/net";
import { buildSchedule } from "../src/schedule";
import { Rng } from "../src/rng";

// Pinned from the consumer's sinusoidal embedding at (t = 500, dim = 8).
const PINNED_EMBED = [
  -0.467771805322, -0.262374853704, -0.958924274663, 0.479425538604,
  -0.883849273431, 0.964966028492, 0.283662185463, 0.87758256189,
];

let tmp: string;

beforeAll(async () => {
  await initBackend();
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "trainer-net-"));
});

afterAll(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("compact net", () => {
  it("sinusoidal embedding matches the consumer", async () => {
    const emb = sinusoidalEmbedding([500], 8, 10000.0);
    const values = await emb.data();
    PINNED_EMBED.forEach((expected, i) => {
      expect(Math.abs(values[i] - expected)).toBeLessThan(1e-6);
    });
  });

  it("forward is deterministic and shaped", () => {
    const net = buildNet({ channels: 3, features: 8, blocks: 1, groups: 2,
                           embedDim: 16, maxPeriod: 10000 }, 5);
    const rng = new Rng(1);
    const x = rng.gaussianArray(10 * 12 * 3);
    const a = predictNoiseImage(net, x, 10, 12, 3, 100);
    const b = predictNoiseImage(net, x, 10, 12, 3, 100);
    expect(a.length).toBe(10 * 12 * 3);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("output depends on the step index through the time bias", () => {
    const net = buildNet({ channels: 3, features: 8, blocks: 1, groups: 2,
                           embedDim: 16, maxPeriod: 10000 }, 6);
    // the output conv starts zero-initialized; give it weights first
    const rng6 = new Rng(6);
    net.params.get("out_w")!.assign(
      tf.tensor4d(rng6.gaussianArray(3 * 3 * 8 * 3), [3, 3, 8, 3]));
    const x = new Float32Array(8 * 8 * 3);
    const a = predictNoiseImage(net, x, 8, 8, 3, 1);
    const b = predictNoiseImage(net, x, 8, 8, 3, 900);
    let diff = 0;
    for (let i = 0; i < a.length; i++) diff += Math.abs(a[i] - b[i]);
    expect(diff).toBeGreaterThan(0);
  });

  it("zero-initialized output conv starts as the zero predictor", () => {
    const net = buildNet(undefined, 9);
    const rng = new Rng(2);
    const x = rng.gaussianArray(8 * 8 * 3);
    const out = predictNoiseImage(net, x, 8, 8, 3, 250);
    for (let i = 0; i < out.length; i++) expect(out[i]).toBe(0);
  });

  it("container round trip preserves the forward exactly at f32", () => {
    const schedule = buildSchedule("linear", 1000, 1e-4, 0.02);
    const net = buildNet({ channels: 3, features: 8, blocks: 2, groups: 2,
                           embedDim: 16, maxPeriod: 10000 }, 11);
    // give the zero-initialized tail real weights so the test is not trivial
    const rng = new Rng(3);
    net.params.get("out_w")!.assign(
      tf.tensor4d(rng.gaussianArray(3 * 3 * 8 * 3), [3, 3, 8, 3]));
    const modelPath = path.join(tmp, "roundtrip.wct");
    writeContainer(modelPath, net, schedule, [16, 16, 3]);
    const loaded = netFromContainer(modelPath);
    const x = rng.gaussianArray(16 * 16 * 3);
    const a = predictNoiseImage(net, x, 16, 16, 3, 123);
    const b = predictNoiseImage(loaded, x, 16, 16, 3, 123);
    for (let i = 0; i < a.length; i++) {
      expect(Math.abs(a[i] - b[i])).toBeLessThanOrEqual(1e-6);
    }
  });

  it("container header carries fingerprint, resolution and tensor sizes", () => {
    const schedule = buildSchedule("linear", 1000, 1e-4, 0.02);
    const net = buildNet(undefined, 12);
    const modelPath = path.join(tmp, "header.wct");
    writeContainer(modelPath, net, schedule, [64, 64, 3]);
    const { header } = readContainer(modelPath);
    expect(header.schema).toBe("wc/1");
    expect(header.native_resolution).toEqual([64, 64, 3]);
    expect(header.schedule_fingerprint).toMatch(/^[0-9a-f]{64}$/);
    expect(header.tensors.length).toBeGreaterThan(0);
  });

  it("reader fails closed on truncation", () => {
    const schedule = buildSchedule("linear", 1000, 1e-4, 0.02);
    const net = buildNet(undefined, 13);
    const modelPath = path.join(tmp, "trunc.wct");
    writeContainer(modelPath, net, schedule);
    const blob = fs.readFileSync(modelPath);
    fs.writeFileSync(modelPath, blob.subarray(0, blob.length - 11));
    expect(() => readContainer(modelPath)).toThrow(/truncated|mismatch/);
  });
});
