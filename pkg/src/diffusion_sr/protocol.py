"""Length-prefixed binary frame protocol for out-of-process denoisers.

Frame layout, all integers little-endian:

    u32 length     bytes remaining after this field
    u32 sequence   strictly increasing, starting at 1; responses mirror it
    u8  opcode     1 = predict, 2 = shutdown
    u32 t          diffusion step index
    u32 h, w, c    tensor dimensions (0,0,0 for an empty frame)
    f32[h*w*c]     tensor payload, row-major (H, W, C)

The dialogue is strict request/response with exactly one frame in flight.
A shutdown request is answered with an empty frame before the child
exits. The client side (:class:`SubprocessDenoiser`) owns one child
process and is not thread-safe by design; concurrent pipelines must each
spawn their own child.

``python -m diffusion_sr.echo_child`` starts a loopback server on stdio
(every predict request answered with its own tensor), which is what the
format tests and the no-model acceptance runs use.
"""

from __future__ import annotations

import os
import select
import struct
import subprocess
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import DenoiserError

OP_PREDICT = 1
OP_SHUTDOWN = 2

_FIXED = struct.Struct("<IBIIII")  # sequence, opcode, t, h, w, c (after length)


def pack_frame(sequence: int, opcode: int, t: int, tensor: np.ndarray | None) -> bytes:
    if tensor is None:
        h = w = c = 0
        payload = b""
    else:
        tensor = np.asarray(tensor, dtype="<f4")
        if tensor.ndim == 2:
            tensor = tensor[:, :, None]
        if tensor.ndim != 3:
            raise ValueError(f"tensor must be (H, W, C), got shape {tensor.shape}")
        h, w, c = tensor.shape
        payload = np.ascontiguousarray(tensor).tobytes()
    body = _FIXED.pack(sequence, opcode, t, h, w, c) + payload
    return struct.pack("<I", len(body)) + body


def unpack_frame(body: bytes):
    """Parse everything after the length prefix."""
    if len(body) < _FIXED.size:
        raise DenoiserError(f"malformed frame: {len(body)} bytes, need {_FIXED.size}")
    sequence, opcode, t, h, w, c = _FIXED.unpack_from(body)
    expected = _FIXED.size + 4 * h * w * c
    if len(body) != expected:
        raise DenoiserError(f"malformed frame: {len(body)} bytes, header declares {expected}",
                            sequence=sequence)
    tensor = None
    if h * w * c:
        tensor = np.frombuffer(body, dtype="<f4", count=h * w * c,
                               offset=_FIXED.size).reshape(h, w, c).astype(np.float64)
    return sequence, opcode, t, tensor


def read_frame_blocking(stream):
    """Read one frame from a blocking binary stream; None on clean EOF."""
    head = stream.read(4)
    if not head:
        return None
    if len(head) < 4:
        raise DenoiserError("truncated frame length prefix")
    (length,) = struct.unpack("<I", head)
    body = stream.read(length)
    if len(body) < length:
        raise DenoiserError("truncated frame body")
    return unpack_frame(body)


@dataclass(frozen=True)
class SubprocessDenoiserConfig:
    argv: list
    timeout: float = 30.0
    native_resolution: tuple | None = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")
        if not self.argv:
            raise ValueError("argv must name an executable")


class SubprocessDenoiser:
    """Bridges predict_noise calls to a child process over stdio frames."""

    def __init__(self, config: SubprocessDenoiserConfig):
        self.config = config
        self.native_resolution = config.native_resolution
        self._sequence = 0
        self._proc = subprocess.Popen(
            config.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        # handshake: child spawned with both pipes open
        if self._proc.poll() is not None:
            raise DenoiserError(f"child exited immediately with {self._proc.returncode}")

    def _read_exact(self, n: int, deadline: float, sequence: int) -> bytes:
        fd = self._proc.stdout.fileno()
        chunks = []
        got = 0
        while got < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise DenoiserError("timeout waiting for child response", sequence=sequence)
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise DenoiserError("timeout waiting for child response", sequence=sequence)
            chunk = os.read(fd, n - got)
            if not chunk:
                raise DenoiserError(
                    f"child closed the pipe (exit {self._proc.poll()})", sequence=sequence)
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def _roundtrip(self, opcode: int, t: int, tensor):
        if self._proc.poll() is not None:
            raise DenoiserError(f"child already exited with {self._proc.returncode}")
        self._sequence += 1
        seq = self._sequence
        frame = pack_frame(seq, opcode, t, tensor)
        deadline = time.monotonic() + self.config.timeout
        try:
            self._proc.stdin.write(frame)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise DenoiserError(f"cannot write to child: {exc}", sequence=seq) from exc
        head = self._read_exact(4, deadline, seq)
        (length,) = struct.unpack("<I", head)
        body = self._read_exact(length, deadline, seq)
        r_seq, r_opcode, _, r_tensor = unpack_frame(body)
        if r_seq != seq:
            raise DenoiserError(f"response sequence {r_seq} != request {seq}", sequence=seq)
        return r_tensor

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=np.float64)
        squeeze = x_t.ndim == 2
        out = self._roundtrip(OP_PREDICT, int(t), x_t)
        if out is None:
            raise DenoiserError("child returned an empty predict response",
                                sequence=self._sequence)
        if squeeze:
            out = out[:, :, 0]
        if out.shape != x_t.shape:
            raise DenoiserError(
                f"child tensor shape {out.shape} != input {x_t.shape}",
                sequence=self._sequence)
        return out

    def close(self):
        if self._proc.poll() is None:
            try:
                self._roundtrip(OP_SHUTDOWN, 0, None)
            except DenoiserError:
                pass
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve_stream(handler, stdin, stdout) -> None:
    """Answer frames until shutdown; ``handler(tensor, t) -> tensor``."""
    while True:
        frame = read_frame_blocking(stdin)
        if frame is None:
            return
        sequence, opcode, t, tensor = frame
        if opcode == OP_SHUTDOWN:
            stdout.write(pack_frame(sequence, OP_SHUTDOWN, 0, None))
            stdout.flush()
            return
        if opcode != OP_PREDICT:
            raise DenoiserError(f"unknown opcode {opcode}", sequence=sequence)
        result = handler(tensor, t)
        stdout.write(pack_frame(sequence, OP_PREDICT, t, result))
        stdout.flush()


if __name__ == "__main__":
    serve_stream(lambda tensor, t: tensor, sys.stdin.buffer, sys.stdout.buffer)
