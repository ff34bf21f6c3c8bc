/**
 * The compact noise-prediction network, expressed with raw tfjs ops so
 * its weights map one-to-one onto the portable container schema the
 * restoration library executes:
 *
 *   conv3x3   zero-padded stride-1 convolution, weights (out, in, 3, 3)
 *   silu      x * sigmoid(x)
 *   group_norm over (h, w, channels-within-group), learned scale/shift
 *   time_bias per-channel bias projected from the sinusoidal step embedding
 *   residual  x + body(x)
 *
 * The sinusoidal embedding matches the executor exactly: for even dim D
 * and half = D/2, frequencies are exp(-ln(maxPeriod) * k / half) and the
 * embedding is [sin(t * f_k), cos(t * f_k)].
 *
 * Default architecture: an input conv into F features, B residual blocks
 * of (group_norm, silu, conv, time_bias, silu, conv), then group_norm,
 * silu and an output conv back to the image channels, zero-initialized
 * so training starts from the zero predictor.
 */

import * as tf from "@tensorflow/tfjs";
import { Rng } from "./rng";

export interface NetConfig {
  channels: number;
  features: number;
  blocks: number;
  groups: number;
  embedDim: number;
  maxPeriod: number;
}

export const DEFAULT_NET: NetConfig = {
  channels: 3,
  features: 32,
  blocks: 2,
  groups: 4,
  embedDim: 32,
  maxPeriod: 10000.0,
};

export interface CompactNet {
  config: NetConfig;
  /** container-layer stack, tensor names resolved against `params` */
  layers: LayerSpec[];
  params: Map<string, tf.Variable>;
}

export type LayerSpec =
  | { kind: "conv3x3"; weight: string; bias: string }
  | { kind: "silu" }
  | { kind: "group_norm"; groups: number; weight: string; bias: string; eps: number }
  | { kind: "time_bias"; weight: string; bias: string }
  | { kind: "residual"; layers: LayerSpec[] };

export function sinusoidalEmbedding(ts: number[], dim: number, maxPeriod: number): tf.Tensor2D {
  if (dim % 2 !== 0) throw new Error(`embedding dim must be even, got ${dim}`);
  const half = dim / 2;
  const rows: number[][] = ts.map((t) => {
    const row = new Array<number>(dim);
    for (let k = 0; k < half; k++) {
      const angle = t * Math.exp((-Math.log(maxPeriod) * k) / half);
      row[k] = Math.sin(angle);
      row[half + k] = Math.cos(angle);
    }
    return row;
  });
  return tf.tensor2d(rows, [ts.length, dim], "float32");
}

function convVar(params: Map<string, tf.Variable>, name: string, inC: number, outC: number,
                 rng: Rng, scale: number): void {
  // tfjs filter layout [kh, kw, in, out]
  const data = new Float32Array(3 * 3 * inC * outC);
  const std = scale / Math.sqrt(9 * inC);
  for (let i = 0; i < data.length; i++) data[i] = rng.gaussian() * std;
  params.set(`${name}_w`, tf.variable(tf.tensor4d(data, [3, 3, inC, outC])));
  params.set(`${name}_b`, tf.variable(tf.zeros([outC])));
}

export function buildNet(config: NetConfig = DEFAULT_NET, seed = 7): CompactNet {
  const rng = new Rng(seed);
  const params = new Map<string, tf.Variable>();
  const layers: LayerSpec[] = [];
  const { channels: C, features: F, blocks, groups, embedDim } = config;

  convVar(params, "in", C, F, rng, 1.0);
  layers.push({ kind: "conv3x3", weight: "in_w", bias: "in_b" });

  for (let b = 0; b < blocks; b++) {
    const p = `blk${b}`;
    params.set(`${p}_gn_w`, tf.variable(tf.ones([F])));
    params.set(`${p}_gn_b`, tf.variable(tf.zeros([F])));
    convVar(params, `${p}_c1`, F, F, rng, 1.0);
    const tw = new Float32Array(F * embedDim);
    for (let i = 0; i < tw.length; i++) tw[i] = rng.gaussian() * 0.1;
    params.set(`${p}_t_w`, tf.variable(tf.tensor2d(tw, [F, embedDim])));
    params.set(`${p}_t_b`, tf.variable(tf.zeros([F])));
    convVar(params, `${p}_c2`, F, F, rng, 0.5);
    layers.push({
      kind: "residual",
      layers: [
        { kind: "group_norm", groups, weight: `${p}_gn_w`, bias: `${p}_gn_b`, eps: 1e-5 },
        { kind: "silu" },
        { kind: "conv3x3", weight: `${p}_c1_w`, bias: `${p}_c1_b` },
        { kind: "time_bias", weight: `${p}_t_w`, bias: `${p}_t_b` },
        { kind: "silu" },
        { kind: "conv3x3", weight: `${p}_c2_w`, bias: `${p}_c2_b` },
      ],
    });
  }

  params.set("out_gn_w", tf.variable(tf.ones([F])));
  params.set("out_gn_b", tf.variable(tf.zeros([F])));
  layers.push({ kind: "group_norm", groups, weight: "out_gn_w", bias: "out_gn_b", eps: 1e-5 });
  layers.push({ kind: "silu" });
  params.set("out_w", tf.variable(tf.zeros([3, 3, F, C])));
  params.set("out_b", tf.variable(tf.zeros([C])));
  layers.push({ kind: "conv3x3", weight: "out_w", bias: "out_b" });

  return { config, layers, params };
}

function groupNorm(x: tf.Tensor4D, groups: number, eps: number,
                   gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor4D {
  const [n, h, w, c] = x.shape;
  const g = groups;
  const grouped = x.reshape([n, h, w, g, c / g]);
  const { mean, variance } = tf.moments(grouped, [1, 2, 4], true);
  const normed = grouped.sub(mean).div(variance.add(eps).sqrt());
  return normed.reshape([n, h, w, c]).mul(gamma).add(beta) as tf.Tensor4D;
}

function runLayers(net: CompactNet, layers: LayerSpec[], x: tf.Tensor4D,
                   emb: tf.Tensor2D): tf.Tensor4D {
  let cur = x;
  for (const layer of layers) {
    if (layer.kind === "conv3x3") {
      const w = net.params.get(layer.weight)! as tf.Tensor4D;
      const b = net.params.get(layer.bias)!;
      cur = tf.conv2d(cur, w as tf.Tensor4D, 1, "same").add(b) as tf.Tensor4D;
    } else if (layer.kind === "silu") {
      cur = cur.mul(tf.sigmoid(cur)) as tf.Tensor4D;
    } else if (layer.kind === "group_norm") {
      cur = groupNorm(cur, layer.groups, layer.eps,
                      net.params.get(layer.weight)!, net.params.get(layer.bias)!);
    } else if (layer.kind === "time_bias") {
      const w = net.params.get(layer.weight)! as tf.Tensor2D; // (F, D)
      const b = net.params.get(layer.bias)!;                   // (F,)
      const bias = emb.matMul(w, false, true).add(b);          // (N, F)
      cur = cur.add(bias.reshape([cur.shape[0], 1, 1, -1])) as tf.Tensor4D;
    } else {
      cur = cur.add(runLayers(net, layer.layers, cur, emb)) as tf.Tensor4D;
    }
  }
  return cur;
}

/** Batch forward: x (N, H, W, C), one step index per sample. */
export function predictNoiseBatch(net: CompactNet, x: tf.Tensor4D, ts: number[]): tf.Tensor4D {
  const emb = sinusoidalEmbedding(ts, net.config.embedDim, net.config.maxPeriod);
  return runLayers(net, net.layers, x, emb);
}

/** Single image (H, W, C) as Float32Array -> same shape. */
export function predictNoiseImage(net: CompactNet, data: Float32Array,
                                  h: number, w: number, c: number, t: number): Float32Array {
  return tf.tidy(() => {
    const x = tf.tensor4d(data, [1, h, w, c]);
    const out = predictNoiseBatch(net, x, [t]);
    return out.dataSync() as Float32Array;
  });
}

/** Container-layout tensors: conv weights transposed to (out, in, 3, 3). */
export function exportTensors(net: CompactNet): Map<string, { shape: number[]; data: Float32Array }> {
  const out = new Map<string, { shape: number[]; data: Float32Array }>();
  const convWeights = new Set<string>();
  const walk = (layers: LayerSpec[]) => {
    for (const layer of layers) {
      if (layer.kind === "conv3x3") convWeights.add(layer.weight);
      if (layer.kind === "residual") walk(layer.layers);
    }
  };
  walk(net.layers);
  for (const [name, variable] of net.params) {
    let tensor: tf.Tensor = variable;
    if (convWeights.has(name)) {
      tensor = tf.transpose(variable, [3, 2, 0, 1]); // (kh,kw,in,out) -> (out,in,kh,kw)
    }
    out.set(name, {
      shape: tensor.shape.slice(),
      data: tensor.dataSync() as Float32Array,
    });
    if (tensor !== variable) tensor.dispose();
  }
  return out;
}

/** Rebuild variables from container-layout tensors (inverse of exportTensors). */
export function importTensors(net: CompactNet,
                              tensors: Map<string, { shape: number[]; data: Float32Array }>): void {
  const convWeights = new Set<string>();
  const walk = (layers: LayerSpec[]) => {
    for (const layer of layers) {
      if (layer.kind === "conv3x3") convWeights.add(layer.weight);
      if (layer.kind === "residual") walk(layer.layers);
    }
  };
  walk(net.layers);
  for (const [name, variable] of net.params) {
    const spec = tensors.get(name);
    if (!spec) throw new Error(`missing tensor ${name} in container`);
    let tensor = tf.tensor(spec.data, spec.shape, "float32");
    if (convWeights.has(name)) {
      tensor = tf.transpose(tensor, [2, 3, 1, 0]); // (out,in,kh,kw) -> (kh,kw,in,out)
    }
    variable.assign(tensor as tf.Tensor<tf.Rank>);
    tensor.dispose();
  }
}
