/**
 * Empirical converged-loss sweep across training checkpoints.
 *
 * Trains with periodic checkpoints, then estimates E0 (the per-element
 * noise-prediction error on held-out data) for every checkpoint through
 * the same forward path the protocol server uses. A healthy run shows
 * the estimate falling across checkpoints; the final number is what the
 * restoration pipeline should plug into its error model (its signature
 * thresholds scale linearly with E0).
 *
 *   node dist/scripts/checkpoint_sweep.js [--steps 300] [--every 60] [--size 8]
 */

import * as tf from "@tensorflow/tfjs";
import { initBackend } from "../src/backend";
import { netFromContainer } from "../src/container";
import { makeToyDataset } from "../src/data";
import { buildSchedule } from "../src/schedule";
import { TrainSpec, estimateE0, train } from "../src/train";

function arg(name: string, fallback: string): string {
  const i = process.argv.indexOf(`--${name}`);
  return i >= 0 ? process.argv[i + 1] : fallback;
}

async function main(): Promise<void> {
  await initBackend();
  const size = parseInt(arg("size", "8"), 10);
  const schedule = buildSchedule("linear", 1000, 1e-4, 0.02);
  const spec: TrainSpec = {
    size,
    schedule,
    steps: parseInt(arg("steps", "300"), 10),
    batchSize: 8,
    learningRate: parseFloat(arg("lr", "5e-3")),
    features: 16,
    blocks: 1,
    checkpointEvery: parseInt(arg("every", "60"), 10),
    outPath: arg("out", "/tmp/sweep.wct"),
    seed: 5,
    toyCount: 16,
  };
  const result = await train(spec, (step, loss) => {
    if (step % 50 === 0) process.stderr.write(`step ${step}: loss ${loss.toFixed(4)}\n`);
  });
  const heldOut = makeToyDataset(8, size, 4242);
  console.log("checkpoint,e0");
  const estimates: number[] = [];
  for (const ckpt of result.checkpoints) {
    const net = netFromContainer(ckpt);
    const e0 = estimateE0(net, heldOut, schedule, size, 128);
    estimates.push(e0);
    console.log(`${ckpt},${e0.toFixed(6)}`);
  }
  const monotone = estimates.every((v, i) => i === 0 || v <= estimates[i - 1] + 1e-9);
  console.log(`monotone_decrease,${monotone}`);
  console.log(`final_e0,${estimates[estimates.length - 1].toFixed(6)}`);
}

main().catch((err) => {
  process.stderr.write(`${err}\n`);
  process.exit(1);
});
