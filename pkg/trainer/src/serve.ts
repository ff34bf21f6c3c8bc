/**
 * Frame-protocol server entry point.
 *
 *   node dist/serve.js MODEL.wct     serve a trained container
 *   node dist/serve.js --echo        loopback self-test mode
 *
 * One frame in flight at a time, per the protocol contract.
 */

import * as tf from "@tensorflow/tfjs";
import { initBackend } from "./backend";
import { netFromContainer } from "./container";
import { predictNoiseImage } from "./net";
import { serveFrames } from "./protocol";

async function main(): Promise<void> {
  const arg = process.argv[2];
  if (!arg) {
    process.stderr.write("usage: serve.js MODEL.wct | --echo\n");
    process.exit(2);
  }
  await initBackend();
  const done = () => process.exit(0);
  if (arg === "--echo") {
    serveFrames((payload) => payload, process.stdin, process.stdout, done);
    return;
  }
  const net = netFromContainer(arg);
  serveFrames(
    (payload, h, w, c, t) => predictNoiseImage(net, payload, h, w, c, t),
    process.stdin, process.stdout, done);
}

main().catch((err) => {
  process.stderr.write(`serve failed: ${err}\n`);
  process.exit(1);
});
