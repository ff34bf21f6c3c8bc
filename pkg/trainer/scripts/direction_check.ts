/**
 * Scaled direction check for the trained model.
 *
 * Trains a compact denoiser on procedural images, exports it, then
 * drives the restoration pipeline (the Python CLI) over a held-out set:
 * degrade at the target scale, auto-select the injection step, recover,
 * and compare distortion metrics against the degraded baseline, plus
 * Frechet distances of the recovered and degraded sets against the real
 * set. Passes when recovery improves PSNR and SSIM on at least 80% of
 * the held-out images and the recovered-set Frechet distance beats the
 * degraded-set one.
 *
 * The signature threshold scales linearly with the error-model constant,
 * so the measured E0 of the trained model is forwarded to the pipeline
 * together with a rescaled threshold.
 *
 *   node dist/scripts/direction_check.js [--size 32] [--train-count 256]
 *       [--steps 2000] [--held-out 32] [--scale 4] [--workdir DIR]
 *       [--model PATH]  (skip training, reuse an exported container)
 *
 * Defaults are desk-scale; the reference configuration (size 64,
 * >= 1000 images, a few thousand steps) is an overnight run on the
 * pure-JS backend.
 */

import { execFileSync } from "child_process";
import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";
import { initBackend } from "../src/backend";
import { netFromContainer } from "../src/container";
import { makeToyDataset, makeToyImage } from "../src/data";
import { encodePng } from "../src/png";
import { buildSchedule } from "../src/schedule";
import { TrainSpec, estimateE0, train } from "../src/train";
import { fid } from "../src/fid";

const PY = ["python3", "-m", "diffusion_sr.cli"];
const BASE_E0 = 0.05;    // the pipeline's calibration constants
const BASE_CS = 0.345;

function arg(name: string, fallback: string): string {
  const i = process.argv.indexOf(`--${name}`);
  return i >= 0 ? process.argv[i + 1] : fallback;
}

function cli(args: string[], timeoutMs = 600000): string {
  return execFileSync(PY[0], [...PY.slice(1), ...args],
                      { timeout: timeoutMs }).toString();
}

async function main(): Promise<void> {
  await initBackend();
  const size = parseInt(arg("size", "32"), 10);
  const trainCount = parseInt(arg("train-count", "256"), 10);
  const steps = parseInt(arg("steps", "2000"), 10);
  const heldOut = parseInt(arg("held-out", "32"), 10);
  const scale = parseFloat(arg("scale", "4"));
  const workdir = arg("workdir", fs.mkdtempSync("/tmp/direction-"));
  const schedule = buildSchedule("linear", 1000, 1e-4, 0.02);

  fs.mkdirSync(workdir, { recursive: true });
  for (const sub of ["real", "degraded", "recovered"]) {
    fs.mkdirSync(path.join(workdir, sub), { recursive: true });
  }

  let modelPath = arg("model", "");
  if (!modelPath) {
    modelPath = path.join(workdir, "model.wct");
    process.stderr.write(`training ${trainCount} images at ${size}^2 for ${steps} steps...\n`);
    const spec: TrainSpec = {
      size, schedule, steps, batchSize: 8,
      learningRate: parseFloat(arg("lr", "3e-3")),
      features: parseInt(arg("features", "16"), 10),
      blocks: parseInt(arg("blocks", "1"), 10),
      checkpointEvery: Math.max(200, Math.floor(steps / 5)),
      outPath: modelPath, seed: 11, toyCount: trainCount,
    };
    const result = await train(spec, (step, loss) => {
      if (step % 100 === 0) process.stderr.write(`  step ${step}: loss ${loss.toFixed(4)}\n`);
    });
    if (result.aborted) throw new Error("training aborted on non-finite loss");
  }

  const net = netFromContainer(modelPath);
  const holdout = makeToyDataset(heldOut, size, 90001);
  const e0 = estimateE0(net, holdout, schedule, size, 160);
  const cS = (BASE_CS * e0) / BASE_E0;
  process.stderr.write(`estimated e0 = ${e0.toFixed(4)}; signature threshold -> ${cS.toFixed(4)}\n`);

  let improved = 0;
  const rows: string[] = ["image,psnr_degraded,psnr_recovered,ssim_degraded,ssim_recovered,t_star"];
  for (let k = 0; k < heldOut; k++) {
    const name = `img${String(k).padStart(3, "0")}.png`;
    const hrPath = path.join(workdir, "real", name);
    const img = makeToyImage(size, 90001 * 1000 + k);
    fs.writeFileSync(hrPath, encodePng(img, 8));
    const degradedPath = path.join(workdir, "degraded", name);
    cli(["degrade", "--input", hrPath, "--scale", String(scale), "--out", degradedPath]);

    const recoveredPath = path.join(workdir, "recovered", name);
    const reportPath = path.join(workdir, `report${k}.json`);
    cli(["sr", "--input", hrPath, "--scale", String(scale), "--auto",
         "--denoiser", `container:${modelPath}`,
         "--error-model.e0", String(e0), "--prf.c-s", String(cS),
         "--out", recoveredPath, "--report", reportPath, "--seed", String(k)]);
    const report = JSON.parse(fs.readFileSync(reportPath, "utf-8"));

    const metricsCsv = cli(["metrics", "--pair", degradedPath, hrPath]);
    const base = metricsCsv.trim().split("\n")[1].split(",");
    const psnrBase = parseFloat(base[4]);
    const ssimBase = parseFloat(base[5]);
    const better = report.psnr > psnrBase && report.ssim > ssimBase;
    if (better) improved++;
    rows.push(`${name},${psnrBase.toFixed(3)},${report.psnr.toFixed(3)},` +
              `${ssimBase.toFixed(4)},${report.ssim.toFixed(4)},${report.t}`);
    process.stderr.write(`  ${name}: PSNR ${psnrBase.toFixed(2)} -> ${report.psnr.toFixed(2)}  ` +
                         `SSIM ${ssimBase.toFixed(3)} -> ${report.ssim.toFixed(3)}  ` +
                         `${better ? "improved" : "NOT improved"}\n`);
  }

  const fidDegraded = fid(path.join(workdir, "real"), path.join(workdir, "degraded"));
  const fidRecovered = fid(path.join(workdir, "real"), path.join(workdir, "recovered"));
  const fraction = improved / heldOut;

  fs.writeFileSync(path.join(workdir, "direction_check.csv"), rows.join("\n") + "\n");
  console.log(`improved_fraction,${fraction.toFixed(3)}`);
  console.log(`fid_degraded,${fidDegraded.toPrecision(6)}`);
  console.log(`fid_recovered,${fidRecovered.toPrecision(6)}`);
  const pass = fraction >= 0.8 && fidRecovered < fidDegraded;
  console.log(`pass,${pass}`);
  process.exit(pass ? 0 : 1);
}

main().catch((err) => {
  process.stderr.write(`${err}\n`);
  process.exit(1);
});
