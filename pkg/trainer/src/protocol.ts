/**
 * The stdio frame protocol the restoration pipeline drives denoiser
 * children with. Layout after the u32-LE length prefix (which counts the
 * remaining bytes): u32 sequence, u8 opcode (1 predict, 2 shutdown),
 * u32 t, u32 h, u32 w, u32 c, then h*w*c float32-LE payload. Responses
 * mirror the request's sequence number; a shutdown is answered with an
 * empty frame before exit.
 */

import { ChildProcess, spawn } from "child_process";

export const OP_PREDICT = 1;
export const OP_SHUTDOWN = 2;

const FIXED = 4 + 1 + 4 + 4 + 4 + 4; // sequence..c, after the length prefix

export interface Frame {
  sequence: number;
  opcode: number;
  t: number;
  h: number;
  w: number;
  c: number;
  payload: Float32Array | null;
}

export function packFrame(frame: Frame): Buffer {
  const payloadBytes = frame.payload ? frame.payload.length * 4 : 0;
  const buf = Buffer.alloc(4 + FIXED + payloadBytes);
  buf.writeUInt32LE(FIXED + payloadBytes, 0);
  buf.writeUInt32LE(frame.sequence, 4);
  buf.writeUInt8(frame.opcode, 8);
  buf.writeUInt32LE(frame.t, 9);
  buf.writeUInt32LE(frame.h, 13);
  buf.writeUInt32LE(frame.w, 17);
  buf.writeUInt32LE(frame.c, 21);
  if (frame.payload) {
    for (let i = 0; i < frame.payload.length; i++) {
      buf.writeFloatLE(frame.payload[i], 25 + 4 * i);
    }
  }
  return buf;
}

export function unpackFrame(body: Buffer): Frame {
  if (body.length < FIXED) throw new Error(`malformed frame: ${body.length} bytes`);
  const sequence = body.readUInt32LE(0);
  const opcode = body.readUInt8(4);
  const t = body.readUInt32LE(5);
  const h = body.readUInt32LE(9);
  const w = body.readUInt32LE(13);
  const c = body.readUInt32LE(17);
  const count = h * w * c;
  if (body.length !== FIXED + 4 * count) {
    throw new Error(`malformed frame: ${body.length} bytes, header declares ${FIXED + 4 * count}`);
  }
  let payload: Float32Array | null = null;
  if (count > 0) {
    payload = new Float32Array(count);
    for (let i = 0; i < count; i++) payload[i] = body.readFloatLE(FIXED + 4 * i);
  }
  return { sequence, opcode, t, h, w, c, payload };
}

export type PredictHandler = (payload: Float32Array, h: number, w: number, c: number,
                              t: number) => Float32Array;

/**
 * Serve frames on the given streams until shutdown. Handles chunked
 * arrival (stdin gives no framing guarantees).
 */
export function serveFrames(handler: PredictHandler,
                            stdin: NodeJS.ReadableStream,
                            stdout: NodeJS.WritableStream,
                            onDone: () => void): void {
  let pending = Buffer.alloc(0);
  stdin.on("data", (chunk: Buffer) => {
    pending = Buffer.concat([pending, chunk]);
    while (pending.length >= 4) {
      const length = pending.readUInt32LE(0);
      if (pending.length < 4 + length) return;
      const frame = unpackFrame(pending.subarray(4, 4 + length));
      pending = pending.subarray(4 + length);
      if (frame.opcode === OP_SHUTDOWN) {
        stdout.write(packFrame({ sequence: frame.sequence, opcode: OP_SHUTDOWN,
                                 t: 0, h: 0, w: 0, c: 0, payload: null }));
        onDone();
        return;
      }
      const result = handler(frame.payload!, frame.h, frame.w, frame.c, frame.t);
      stdout.write(packFrame({ sequence: frame.sequence, opcode: OP_PREDICT, t: frame.t,
                               h: frame.h, w: frame.w, c: frame.c, payload: result }));
    }
  });
  stdin.on("end", onDone);
}

/** Client side, used by the tests to talk to a spawned server. */
export class FrameClient {
  private proc: ChildProcess;
  private pending = Buffer.alloc(0);
  private sequence = 0;
  private waiter: ((frame: Frame) => void) | null = null;

  constructor(argv: string[], private timeoutMs = 30000) {
    this.proc = spawn(argv[0], argv.slice(1), { stdio: ["pipe", "pipe", "inherit"] });
    this.proc.stdout!.on("data", (chunk: Buffer) => {
      this.pending = Buffer.concat([this.pending, chunk]);
      this.drain();
    });
  }

  private drain(): void {
    while (this.pending.length >= 4) {
      const length = this.pending.readUInt32LE(0);
      if (this.pending.length < 4 + length) return;
      const frame = unpackFrame(this.pending.subarray(4, 4 + length));
      this.pending = this.pending.subarray(4 + length);
      if (this.waiter) {
        const w = this.waiter;
        this.waiter = null;
        w(frame);
      }
    }
  }

  private roundtrip(frame: Frame): Promise<Frame> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.waiter = null;
        reject(new Error(`timeout waiting for frame ${frame.sequence}`));
      }, this.timeoutMs);
      this.waiter = (response) => {
        clearTimeout(timer);
        if (response.sequence !== frame.sequence) {
          reject(new Error(`sequence mismatch: ${response.sequence} != ${frame.sequence}`));
        } else {
          resolve(response);
        }
      };
      this.proc.stdin!.write(packFrame(frame));
    });
  }

  async predict(payload: Float32Array, h: number, w: number, c: number,
                t: number): Promise<Float32Array> {
    this.sequence += 1;
    const response = await this.roundtrip({ sequence: this.sequence, opcode: OP_PREDICT,
                                            t, h, w, c, payload });
    if (!response.payload) throw new Error("empty predict response");
    return response.payload;
  }

  async shutdown(): Promise<void> {
    this.sequence += 1;
    try {
      await this.roundtrip({ sequence: this.sequence, opcode: OP_SHUTDOWN,
                             t: 0, h: 0, w: 0, c: 0, payload: null });
    } finally {
      this.proc.stdin!.end();
    }
  }

  kill(): void {
    this.proc.kill();
  }
}
