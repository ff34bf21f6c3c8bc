/**
 * Convergence probe: overfit a single image and report the loss floor.
 *
 * Direct noise prediction carries a 1/sqrt(1 - alpha_bar_t) gain at small
 * t, so the uniform-t training loss of this compact additive-conditioning
 * net bottoms out around the fraction of steps whose gain it cannot
 * track (measured floor at desk scale: a few 1e-2). The script prints
 * the floor so that claim stays checkable.
 *
 *   node dist/scripts/overfit_check.js [--steps 1500] [--size 8] [--lr 5e-3]
 */

import * as tf from "@tensorflow/tfjs";
import { initBackend } from "../src/backend";
import { buildSchedule } from "../src/schedule";
import { TrainSpec, train } from "../src/train";

function arg(name: string, fallback: string): string {
  const i = process.argv.indexOf(`--${name}`);
  return i >= 0 ? process.argv[i + 1] : fallback;
}

async function main(): Promise<void> {
  await initBackend();
  const spec: TrainSpec = {
    size: parseInt(arg("size", "8"), 10),
    schedule: buildSchedule("linear", 1000, 1e-4, 0.02),
    steps: parseInt(arg("steps", "1500"), 10),
    batchSize: 8,
    learningRate: parseFloat(arg("lr", "5e-3")),
    features: 16,
    blocks: 1,
    checkpointEvery: 0,
    outPath: arg("out", "/tmp/overfit_check.wct"),
    seed: 42,
    toyCount: 1,
  };
  let best = Infinity;
  const result = await train(spec, (step, loss) => {
    best = Math.min(best, loss);
    if (step % 100 === 0) {
      process.stderr.write(`step ${step}: loss ${loss.toFixed(5)} (best ${best.toFixed(5)})\n`);
    }
  });
  const tail = result.losses.slice(-50).reduce((a, b) => a + b) / 50;
  console.log(`steps,${spec.steps}`);
  console.log(`best_loss,${best.toExponential(3)}`);
  console.log(`tail_mean_loss,${tail.toExponential(3)}`);
  console.log(`below_1e-3,${best < 1e-3}`);
}

main().catch((err) => {
  process.stderr.write(`${err}\n`);
  process.exit(1);
});
