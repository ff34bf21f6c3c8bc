/**
 * Noise-prediction training at toy scale.
 *
 * Each step draws (image, step index, gaussian noise), forms the noised
 * sample x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, and minimizes the
 * mean squared error between eps and the network's prediction with Adam.
 * NaN loss aborts the run, keeping the last checkpoint. Checkpoints and
 * the final weights are weight-container files the restoration library
 * loads directly (the schedule fingerprint ties them together).
 *
 * CLI:
 *   node dist/train.js --out model.wct [--data DIR | --toy N] [--size 64]
 *       [--steps 2000] [--batch 16] [--lr 1e-5] [--features 32]
 *       [--blocks 2] [--checkpoint-every 500] [--seed 0]
 *
 * The optimizer defaults (batch 16, learning rate 1e-5) mirror the
 * reference pretraining recipe; desk-scale smoke runs want a larger
 * learning rate.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";
import { initBackend } from "./backend";
import { writeContainer } from "./container";
import { CompactNet, DEFAULT_NET, buildNet, predictNoiseBatch } from "./net";
import { loadDataset, makeToyDataset } from "./data";
import { Rng } from "./rng";
import { Schedule, buildSchedule } from "./schedule";

export interface TrainSpec {
  datasetDir?: string;
  toyCount?: number;
  size: number;
  schedule: Schedule;
  steps: number;
  batchSize: number;
  learningRate: number;
  features: number;
  blocks: number;
  checkpointEvery: number;
  outPath: string;
  seed: number;
}

export const DEFAULT_TRAIN: Omit<TrainSpec, "outPath"> = {
  size: 64,
  schedule: buildSchedule("linear", 1000, 1e-4, 0.02),
  steps: 2000,
  batchSize: 16,
  learningRate: 1e-5,
  features: DEFAULT_NET.features,
  blocks: DEFAULT_NET.blocks,
  checkpointEvery: 500,
  seed: 0,
};

export interface TrainResult {
  net: CompactNet;
  losses: number[];
  checkpoints: string[];
  aborted: boolean;
}

function makeBatch(images: Float32Array[], spec: TrainSpec, rng: Rng):
    { x: tf.Tensor4D; eps: tf.Tensor4D; ts: number[] } {
  const { size, batchSize, schedule } = spec;
  const n = size * size * 3;
  const xData = new Float32Array(batchSize * n);
  const epsData = new Float32Array(batchSize * n);
  const ts: number[] = [];
  for (let b = 0; b < batchSize; b++) {
    const img = images[rng.int(0, images.length)];
    const t = rng.int(1, schedule.numSteps + 1);
    ts.push(t);
    const abar = schedule.alphaBars[t];
    const sa = Math.sqrt(abar);
    const sn = Math.sqrt(1 - abar);
    for (let i = 0; i < n; i++) {
      const e = rng.gaussian();
      epsData[b * n + i] = e;
      xData[b * n + i] = sa * img[i] + sn * e;
    }
  }
  return {
    x: tf.tensor4d(xData, [batchSize, size, size, 3]),
    eps: tf.tensor4d(epsData, [batchSize, size, size, 3]),
    ts,
  };
}

export async function train(spec: TrainSpec,
                            onStep?: (step: number, loss: number) => void): Promise<TrainResult> {
  await initBackend();
  const images = spec.datasetDir
    ? loadDataset(spec.datasetDir, spec.size)
    : makeToyDataset(spec.toyCount ?? 64, spec.size, spec.seed);
  if (images.length === 0) throw new Error("empty dataset");

  const net = buildNet({ ...DEFAULT_NET, features: spec.features, blocks: spec.blocks },
                       spec.seed + 7);
  const optimizer = tf.train.adam(spec.learningRate);
  const variables = [...net.params.values()];
  const rng = new Rng(spec.seed + 1);
  const losses: number[] = [];
  const checkpoints: string[] = [];
  let aborted = false;

  for (let step = 1; step <= spec.steps; step++) {
    const loss = tf.tidy(() => {
      const { x, eps, ts } = makeBatch(images, spec, rng);
      const lossTensor = optimizer.minimize(() => {
        const pred = predictNoiseBatch(net, x, ts);
        return tf.mean(tf.square(tf.sub(eps, pred))) as tf.Scalar;
      }, true, variables) as tf.Scalar;
      return lossTensor.dataSync()[0];
    });
    losses.push(loss);
    if (onStep) onStep(step, loss);
    if (!isFinite(loss)) {
      aborted = true;
      break;
    }
    if (spec.checkpointEvery > 0 && step % spec.checkpointEvery === 0 && step < spec.steps) {
      const ckpt = checkpointPath(spec.outPath, step);
      writeContainer(ckpt, net, spec.schedule, [spec.size, spec.size, 3]);
      checkpoints.push(ckpt);
    }
  }

  if (!aborted) {
    writeContainer(spec.outPath, net, spec.schedule, [spec.size, spec.size, 3]);
    checkpoints.push(spec.outPath);
  }
  optimizer.dispose();
  return { net, losses, checkpoints, aborted };
}

function checkpointPath(outPath: string, step: number): string {
  const dir = path.dirname(outPath);
  const base = path.basename(outPath).replace(/\.wct$/, "");
  return path.join(dir, `${base}.step${step}.wct`);
}

/** Empirical converged-loss estimate over held-out images. */
export function estimateE0(net: CompactNet, images: Float32Array[], schedule: Schedule,
                           size: number, trials: number, seed = 99): number {
  const rng = new Rng(seed);
  let acc = 0;
  for (let k = 0; k < trials; k++) {
    const img = images[rng.int(0, images.length)];
    const t = rng.int(1, schedule.numSteps + 1);
    const abar = schedule.alphaBars[t];
    const n = img.length;
    const x = new Float32Array(n);
    const eps = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      eps[i] = rng.gaussian();
      x[i] = Math.sqrt(abar) * img[i] + Math.sqrt(1 - abar) * eps[i];
    }
    const pred = tf.tidy(() => {
      const xt = tf.tensor4d(x, [1, size, size, 3]);
      return predictNoiseBatch(net, xt, [t]).dataSync() as Float32Array;
    });
    let sum = 0;
    for (let i = 0; i < n; i++) sum += (eps[i] - pred[i]) ** 2;
    acc += sum / n;
  }
  return acc / trials;
}

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    if (argv[i].startsWith("--")) {
      out[argv[i].slice(2)] = argv[i + 1] ?? "";
      i++;
    }
  }
  return out;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  if (!args.out) {
    process.stderr.write("usage: train.js --out model.wct [--data DIR | --toy N] ...\n");
    process.exit(2);
  }
  fs.mkdirSync(path.dirname(path.resolve(args.out)), { recursive: true });
  const spec: TrainSpec = {
    ...DEFAULT_TRAIN,
    outPath: args.out,
    datasetDir: args.data,
    toyCount: args.toy ? parseInt(args.toy, 10) : undefined,
    size: args.size ? parseInt(args.size, 10) : DEFAULT_TRAIN.size,
    steps: args.steps ? parseInt(args.steps, 10) : DEFAULT_TRAIN.steps,
    batchSize: args.batch ? parseInt(args.batch, 10) : DEFAULT_TRAIN.batchSize,
    learningRate: args.lr ? parseFloat(args.lr) : DEFAULT_TRAIN.learningRate,
    features: args.features ? parseInt(args.features, 10) : DEFAULT_TRAIN.features,
    blocks: args.blocks ? parseInt(args.blocks, 10) : DEFAULT_TRAIN.blocks,
    checkpointEvery: args["checkpoint-every"]
      ? parseInt(args["checkpoint-every"], 10) : DEFAULT_TRAIN.checkpointEvery,
    seed: args.seed ? parseInt(args.seed, 10) : 0,
  };
  const started = Date.now();
  const result = await train(spec, (step, loss) => {
    if (step % 50 === 0 || step === 1) {
      process.stderr.write(`step ${step}/${spec.steps} loss ${loss.toFixed(6)}\n`);
    }
  });
  const secs = ((Date.now() - started) / 1000).toFixed(1);
  if (result.aborted) {
    process.stderr.write(`aborted on non-finite loss after ${result.losses.length} steps; `
      + `last checkpoint kept\n`);
    process.exit(1);
  }
  process.stderr.write(`done in ${secs}s, final loss ${result.losses[result.losses.length - 1].toFixed(6)}, `
    + `wrote ${spec.outPath}\n`);
}

if (require.main === module) {
  main().catch((err) => {
    process.stderr.write(`train failed: ${err}\n`);
    process.exit(1);
  });
}
