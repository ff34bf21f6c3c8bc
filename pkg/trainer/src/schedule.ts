/**
 * Variance schedules mirroring the ones the restoration library uses,
 * plus the fingerprint that ties exported weight containers to their
 * training schedule. The fingerprint hashes the canonical parameter
 * string `kind|T|beta_start|beta_end` with the beta endpoints printed
 * in C "%.17g" style, so both sides derive identical hex digests.
 */

import { createHash } from "crypto";

export interface Schedule {
  kind: string;
  numSteps: number;
  betaStart: number;
  betaEnd: number;
  betas: Float64Array;        // betas[i] = beta_{i+1}
  alphaBars: Float64Array;    // alphaBars[t], t = 0..T, [0] = 1
}

/** C-style %.17g for the fingerprint canonical string. */
export function g17(x: number): string {
  if (x === 0) return "0";
  const exp = Math.floor(Math.log10(Math.abs(x)));
  let s: string;
  if (exp < -4 || exp >= 17) {
    s = x.toExponential(16);
    // trim trailing zeros in the mantissa, normalize exponent form: 1e-05 style
    const [mant, e] = s.split("e");
    const trimmed = mant.replace(/\.?0+$/, "");
    const expNum = parseInt(e, 10);
    const expStr = (expNum < 0 ? "-" : "+") + String(Math.abs(expNum)).padStart(2, "0");
    return `${trimmed}e${expStr}`;
  }
  s = x.toPrecision(17);
  if (s.includes("e")) {
    // toPrecision fell back to exponential inside the %g decimal range
    s = Number(s).toFixed(Math.max(0, 16 - exp));
  }
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s;
}

export function scheduleFingerprint(kind: string, numSteps: number,
                                    betaStart: number, betaEnd: number): string {
  const canonical = `${kind}|${numSteps}|${g17(betaStart)}|${g17(betaEnd)}`;
  return createHash("sha256").update(canonical, "ascii").digest("hex");
}

export function buildSchedule(kind: string, numSteps: number,
                              betaStart = 1e-4, betaEnd = 0.02): Schedule {
  const betas = new Float64Array(numSteps);
  if (kind === "linear") {
    for (let i = 0; i < numSteps; i++) {
      betas[i] = numSteps === 1 ? betaStart
        : betaStart + ((betaEnd - betaStart) * i) / (numSteps - 1);
    }
  } else if (kind === "squared_cosine" || kind === "cosine") {
    const s = 0.008;
    const cap = kind === "squared_cosine" ? 0.999 : 0.9999;
    const f = (t: number) => Math.cos((((t / numSteps) + s) / (1 + s)) * Math.PI / 2) ** 2;
    const f0 = f(0);
    for (let i = 0; i < numSteps; i++) {
      betas[i] = Math.min(1 - f(i + 1) / f0 / (f(i) / f0), cap);
    }
  } else {
    throw new Error(`unsupported schedule kind: ${kind}`);
  }
  const alphaBars = new Float64Array(numSteps + 1);
  alphaBars[0] = 1.0;
  for (let i = 0; i < numSteps; i++) {
    alphaBars[i + 1] = alphaBars[i] * (1 - betas[i]);
  }
  return { kind, numSteps, betaStart, betaEnd, betas, alphaBars };
}

export function fingerprintOf(schedule: Schedule): string {
  return scheduleFingerprint(schedule.kind, schedule.numSteps,
                             schedule.betaStart, schedule.betaEnd);
}
