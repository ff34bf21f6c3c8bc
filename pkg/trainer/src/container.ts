/**
 * Weight-container file I/O (the `WCT1` format the restoration library
 * loads): 4-byte magic, u32-LE header length, UTF-8 JSON header, then
 * all tensors as contiguous little-endian float32 in header order.
 */

import * as fs from "fs";
import { CompactNet, LayerSpec, buildNet, exportTensors, importTensors, NetConfig } from "./net";
import { Schedule, fingerprintOf } from "./schedule";

const MAGIC = "WCT1";
const SCHEMA = "wc/1";

export interface TensorSpec {
  name: string;
  shape: number[];
}

export interface ContainerHeader {
  schema: string;
  native_resolution: number[] | null;
  schedule_fingerprint: string | null;
  schedule: { kind: string; num_steps: number; beta_start: number; beta_end: number } | null;
  time_embedding: { dim: number; max_period: number };
  layers: LayerSpec[];
  tensors: TensorSpec[];
}

function tensorOrder(layers: LayerSpec[]): string[] {
  const order: string[] = [];
  const seen = new Set<string>();
  const walk = (ls: LayerSpec[]) => {
    for (const layer of ls) {
      for (const key of ["weight", "bias"] as const) {
        const name = (layer as Record<string, unknown>)[key];
        if (typeof name === "string" && !seen.has(name)) {
          seen.add(name);
          order.push(name);
        }
      }
      if (layer.kind === "residual") walk(layer.layers);
    }
  };
  walk(layers);
  return order;
}

export function writeContainer(path: string, net: CompactNet, schedule: Schedule,
                               nativeResolution: number[] | null = null): void {
  const tensors = exportTensors(net);
  const order = tensorOrder(net.layers);
  const header: ContainerHeader = {
    schema: SCHEMA,
    native_resolution: nativeResolution,
    schedule_fingerprint: fingerprintOf(schedule),
    schedule: {
      kind: schedule.kind,
      num_steps: schedule.numSteps,
      beta_start: schedule.betaStart,
      beta_end: schedule.betaEnd,
    },
    time_embedding: { dim: net.config.embedDim, max_period: net.config.maxPeriod },
    layers: net.layers,
    tensors: order.map((name) => ({ name, shape: tensors.get(name)!.shape })),
  };
  const headerBlob = Buffer.from(JSON.stringify(header), "utf-8");
  const parts: Buffer[] = [Buffer.from(MAGIC, "ascii"), Buffer.alloc(4)];
  parts[1].writeUInt32LE(headerBlob.length, 0);
  parts.push(headerBlob);
  for (const name of order) {
    const spec = tensors.get(name)!;
    parts.push(Buffer.from(spec.data.buffer.slice(
      spec.data.byteOffset, spec.data.byteOffset + spec.data.byteLength)));
  }
  fs.writeFileSync(path, Buffer.concat(parts));
}

export interface LoadedContainer {
  header: ContainerHeader;
  tensors: Map<string, { shape: number[]; data: Float32Array }>;
}

export function readContainer(path: string): LoadedContainer {
  const blob = fs.readFileSync(path);
  if (blob.length < 8 || blob.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("not a weight container");
  }
  const headerLen = blob.readUInt32LE(4);
  if (blob.length < 8 + headerLen) throw new Error("truncated header");
  const header = JSON.parse(blob.toString("utf-8", 8, 8 + headerLen)) as ContainerHeader;
  if (header.schema !== SCHEMA) throw new Error(`unsupported schema ${header.schema}`);
  const tensors = new Map<string, { shape: number[]; data: Float32Array }>();
  let offset = 8 + headerLen;
  for (const spec of header.tensors) {
    const count = spec.shape.reduce((a, b) => a * b, 1);
    if (offset + 4 * count > blob.length) throw new Error("truncated payload");
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = blob.readFloatLE(offset + 4 * i);
    tensors.set(spec.name, { shape: spec.shape, data });
    offset += 4 * count;
  }
  if (offset !== blob.length) throw new Error("payload length mismatch");
  return { header, tensors };
}

/** Rebuild a runnable net from a container written by this trainer. */
export function netFromContainer(path: string): CompactNet {
  const { header, tensors } = readContainer(path);
  const inW = tensors.get("in_w");
  if (!inW) throw new Error("container lacks the trainer's input conv");
  const blocks = header.layers.filter((l) => l.kind === "residual").length;
  const groupsLayer = header.layers.flatMap((l) =>
    l.kind === "residual" ? l.layers : [l]).find((l) => l.kind === "group_norm");
  const config: NetConfig = {
    channels: inW.shape[1],
    features: inW.shape[0],
    blocks,
    groups: groupsLayer && groupsLayer.kind === "group_norm" ? groupsLayer.groups : 1,
    embedDim: header.time_embedding.dim,
    maxPeriod: header.time_embedding.max_period,
  };
  const net = buildNet(config);
  importTensors(net, tensors);
  return net;
}
