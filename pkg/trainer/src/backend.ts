/**
 * Backend selection: prefer the WASM backend (an order of magnitude
 * faster for convolutions than the plain-JS CPU backend), but verify it
 * can run an actual optimizer step before committing, and fall back to
 * CPU if any kernel is missing.
 */

import * as path from "path";
import * as tf from "@tensorflow/tfjs";

let initialized: string | null = null;

/**
 * The WASM backend ships without the conv filter-gradient kernel. It can
 * be composed from supported ops: treating the input's channels as batch
 * and the batch as channels, the filter gradient is a convolution of the
 * input with the upstream gradient as the filter; a forward stride
 * becomes a filter dilation in that composition. Supports the zero-padded
 * square-kernel convolutions used here (stride 1 or 2, dilation 1).
 */
function registerConvFilterGradient(): void {
  if (tf.getKernelsForBackend("wasm").some((k) => k.kernelName === "Conv2DBackpropFilter")) {
    return;
  }
  tf.registerKernel({
    kernelName: "Conv2DBackpropFilter",
    backendName: "wasm",
    kernelFunc: (args) => {
      const x = args.inputs.x as tf.TensorInfo;      // [N, H, W, Cin]
      const dy = args.inputs.dy as tf.TensorInfo;    // [N, Ho, Wo, Cout]
      const attrs = args.attrs as unknown as {
        strides: [number, number] | number;
        pad: "same" | "valid" | number;
        filterShape: [number, number, number, number];
        dilations?: [number, number] | number;
      };
      const [kh, kw] = [attrs.filterShape[0], attrs.filterShape[1]];
      const stride = Array.isArray(attrs.strides) ? attrs.strides[0] : attrs.strides;
      const dilVal = attrs.dilations === undefined ? 1
        : Array.isArray(attrs.dilations) ? attrs.dilations[0] : attrs.dilations;
      if (dilVal !== 1) {
        throw new Error("composed Conv2DBackpropFilter supports dilation 1 only");
      }
      const h = x.shape[1];
      const ho = dy.shape[1];
      let padNum: number;
      if (attrs.pad === "same") {
        // forward solved ho = ceil(h / stride); recover the total top-left pad
        padNum = Math.max(0, Math.floor(((ho - 1) * stride + kh - h) / 2));
      } else if (attrs.pad === "valid") {
        padNum = 0;
      } else {
        padNum = attrs.pad as number;
      }
      // compose from raw kernels and free the intermediates explicitly,
      // the standard pattern for composite backend kernels
      const run = (name: string, inputs: object, kattrs: object) =>
        tf.engine().runKernel(name, inputs as never, kattrs as never) as tf.TensorInfo;
      const backend = args.backend as { disposeData(dataId: object): void };
      const xAsBatch = run("Transpose", { x }, { perm: [3, 1, 2, 0] });   // [Cin,H,W,N]
      const dyAsFilter = run("Transpose", { x: dy }, { perm: [1, 2, 0, 3] }); // [Ho,Wo,N,Cout]
      const grad = run("Conv2D", { x: xAsBatch, filter: dyAsFilter }, {
        strides: [1, 1],
        pad: padNum === 0 ? "valid" : [[0, 0], [padNum, padNum], [padNum, padNum], [0, 0]],
        dataFormat: "NHWC",
        dilations: [stride, stride],
        dimRoundingMode: undefined,
      });                                                                  // [Cin,kh,kw,Cout]
      const out = run("Transpose", { x: grad }, { perm: [1, 2, 0, 3] });   // [kh,kw,Cin,Cout]
      backend.disposeData(xAsBatch.dataId);
      backend.disposeData(dyAsFilter.dataId);
      backend.disposeData(grad.dataId);
      return out;
    },
  });
}

async function probeTrainingStep(): Promise<void> {
  const w = tf.variable(tf.randomNormal([3, 3, 2, 2]));
  const x = tf.randomNormal([1, 8, 8, 2]);
  const opt = tf.train.adam(1e-3);
  const loss = opt.minimize(() => {
    const y = tf.conv2d(x as tf.Tensor4D, w as tf.Tensor4D, 1, "same");
    const g = y.reshape([1, 8, 8, 1, 2]);
    const { mean, variance } = tf.moments(g, [1, 2, 4], true);
    const n = g.sub(mean).div(variance.add(1e-5).sqrt()).reshape([1, 8, 8, 2]);
    return tf.mean(tf.square(n.mul(tf.sigmoid(n)))) as tf.Scalar;
  }, true, [w]);
  loss!.dataSync();
  loss!.dispose();
  w.dispose();
  x.dispose();
  opt.dispose();
}

export async function initBackend(prefer: string = "wasm"): Promise<string> {
  if (initialized) return initialized;
  if (prefer === "wasm") {
    try {
      // eslint-disable-next-line @typescript-eslint/no-var-requires
      const wasm = require("@tensorflow/tfjs-backend-wasm");
      wasm.setWasmPaths(
        path.join(require.resolve("@tensorflow/tfjs-backend-wasm"), "..") + path.sep);
      await tf.setBackend("wasm");
      await tf.ready();
      registerConvFilterGradient();
      await probeTrainingStep();
      initialized = "wasm";
      return initialized;
    } catch (err) {
      process.stderr.write(`wasm backend unavailable (${err}); falling back to cpu\n`);
    }
  }
  await tf.setBackend("cpu");
  await tf.ready();
  initialized = "cpu";
  return initialized;
}
