"""Portable denoiser weight files and their in-process executor.

File layout (everything little-endian):

    bytes 0..3    magic ``WCT1``
    bytes 4..7    u32 header length in bytes
    header        UTF-8 JSON (see below)
    payload       all tensors as contiguous float32, in header order

Header fields: ``schema`` (must be ``"wc/1"``), ``native_resolution``
([H, W, C] or null), ``schedule_fingerprint`` plus an informative
``schedule`` block, ``time_embedding`` ({dim, max_period}), ``layers``
(the executable stack), and ``tensors`` ([{name, shape}] in payload
order).

Supported layer kinds:

    {"kind": "conv3x3", "weight": w, "bias": b}     w: (out, in, 3, 3)
    {"kind": "silu"}
    {"kind": "group_norm", "groups": g, "weight": w, "bias": b, "eps": e}
    {"kind": "time_bias", "weight": w, "bias": b}   w: (channels, dim)
    {"kind": "residual", "layers": [...]}           out = x + body(x)

``time_bias`` adds a per-channel bias projected from the sinusoidal
embedding of the step index: with ``half = dim / 2`` and frequencies
``exp(-log(max_period) * k / half)`` for k < half, the embedding is
``concat(sin(t * freqs), cos(t * freqs))``.

Loading is fail-closed: any size, schema, or kind problem raises
:class:`ContainerError` before a denoiser object exists.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContainerError
from .schedule import NoiseSchedule

MAGIC = b"WCT1"
SCHEMA_VERSION = "wc/1"
LAYER_KINDS = ("conv3x3", "silu", "group_norm", "time_bias", "residual")
DEFAULT_TIME_EMBED_DIM = 32
DEFAULT_MAX_PERIOD = 10000.0


def schedule_fingerprint(kind: str, num_steps: int, beta_start: float,
                         beta_end: float) -> str:
    canonical = "%s|%d|%.17g|%.17g" % (kind, num_steps, beta_start, beta_end)
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


def fingerprint_of(schedule: NoiseSchedule) -> str:
    return schedule_fingerprint(schedule.kind, schedule.num_steps,
                                schedule.params.get("beta_start", 0.0),
                                schedule.params.get("beta_end", 0.0))


def sinusoidal_embedding(t: int, dim: int, max_period: float = DEFAULT_MAX_PERIOD) -> np.ndarray:
    if dim % 2 != 0:
        raise ValueError(f"embedding dim must be even, got {dim}")
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half, dtype=np.float64) / half)
    angles = float(t) * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])


def _iter_layers(layers):
    for layer in layers:
        yield layer
        if layer.get("kind") == "residual":
            yield from _iter_layers(layer.get("layers", []))


def _validate_header(header: dict) -> None:
    if header.get("schema") != SCHEMA_VERSION:
        raise ContainerError(f"schema: unsupported version {header.get('schema')!r}, "
                             f"expected {SCHEMA_VERSION!r}")
    tensors = header.get("tensors")
    if not isinstance(tensors, list):
        raise ContainerError("tensors: missing or not a list")
    for spec in tensors:
        if "name" not in spec or "shape" not in spec:
            raise ContainerError("tensors: entries need 'name' and 'shape'")
    names = [spec["name"] for spec in tensors]
    if len(set(names)) != len(names):
        raise ContainerError("tensors: duplicate tensor names")
    layers = header.get("layers")
    if not isinstance(layers, list):
        raise ContainerError("layers: missing or not a list")
    for layer in _iter_layers(layers):
        kind = layer.get("kind")
        if kind not in LAYER_KINDS:
            raise ContainerError(f"layers: unknown layer kind {kind!r}")
        for key in ("weight", "bias"):
            if key in layer and layer[key] not in names:
                raise ContainerError(f"layers: {kind} references missing tensor {layer[key]!r}")
    emb = header.get("time_embedding", {})
    if any(l.get("kind") == "time_bias" for l in _iter_layers(layers)):
        if not emb or int(emb.get("dim", 0)) % 2 != 0 or int(emb.get("dim", 0)) <= 0:
            raise ContainerError("time_embedding: dim must be a positive even integer")


def save_weight_container(path, layers: list, tensors: dict, *,
                          native_resolution=None, schedule: NoiseSchedule | None = None,
                          time_embedding: dict | None = None) -> None:
    """Write a container; ``tensors`` maps name -> float array."""
    order = []
    seen = set()
    for layer in _iter_layers(layers):
        for key in ("weight", "bias"):
            name = layer.get(key)
            if name is not None and name not in seen:
                if name not in tensors:
                    raise ContainerError(f"tensors: layer references missing tensor {name!r}")
                seen.add(name)
                order.append(name)
    header = {
        "schema": SCHEMA_VERSION,
        "native_resolution": list(native_resolution) if native_resolution else None,
        "schedule_fingerprint": fingerprint_of(schedule) if schedule else None,
        "schedule": None if schedule is None else {
            "kind": schedule.kind,
            "num_steps": schedule.num_steps,
            "beta_start": schedule.params.get("beta_start"),
            "beta_end": schedule.params.get("beta_end"),
        },
        "time_embedding": time_embedding or {"dim": DEFAULT_TIME_EMBED_DIM,
                                             "max_period": DEFAULT_MAX_PERIOD},
        "layers": layers,
        "tensors": [{"name": n, "shape": list(np.asarray(tensors[n]).shape)} for n in order],
    }
    _validate_header(header)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in order:
            arr = np.ascontiguousarray(np.asarray(tensors[name], dtype="<f4"))
            if list(arr.shape) != [int(s) for s in np.asarray(tensors[name]).shape]:
                raise ContainerError(f"tensors: shape mismatch for {name!r}")
            fh.write(arr.tobytes())


class CompactNetDenoiser:
    """Executes a loaded layer stack as a noise predictor."""

    def __init__(self, header: dict, tensors: dict):
        self.header = header
        self.tensors = tensors
        self.native_resolution = (tuple(header["native_resolution"])
                                  if header.get("native_resolution") else None)
        self.schedule_fingerprint = header.get("schedule_fingerprint")
        emb = header.get("time_embedding") or {}
        self._embed_dim = int(emb.get("dim", DEFAULT_TIME_EMBED_DIM))
        self._max_period = float(emb.get("max_period", DEFAULT_MAX_PERIOD))

    def _run(self, layers: list, x: np.ndarray, t: int) -> np.ndarray:
        for layer in layers:
            kind = layer["kind"]
            if kind == "conv3x3":
                w = self.tensors[layer["weight"]]
                b = self.tensors[layer["bias"]]
                if x.shape[2] != w.shape[1]:
                    raise ContainerError(
                        f"conv3x3 expects {w.shape[1]} channels, got {x.shape[2]}")
                xpad = np.pad(x, ((1, 1), (1, 1), (0, 0)))
                win = sliding_window_view(xpad, (3, 3), axis=(0, 1))  # (H, W, C, 3, 3)
                x = np.einsum("hwcuv,ocuv->hwo", win, w, optimize=True) + b
            elif kind == "silu":
                x = x / (1.0 + np.exp(-x))
            elif kind == "group_norm":
                g = int(layer["groups"])
                eps = float(layer.get("eps", 1e-5))
                h, w_, c = x.shape
                if c % g != 0:
                    raise ContainerError(f"group_norm: {c} channels not divisible by {g}")
                grouped = x.reshape(h, w_, g, c // g)
                mean = grouped.mean(axis=(0, 1, 3), keepdims=True)
                var = grouped.var(axis=(0, 1, 3), keepdims=True)
                grouped = (grouped - mean) / np.sqrt(var + eps)
                x = grouped.reshape(h, w_, c)
                x = x * self.tensors[layer["weight"]] + self.tensors[layer["bias"]]
            elif kind == "time_bias":
                emb = sinusoidal_embedding(t, self._embed_dim, self._max_period)
                proj = self.tensors[layer["weight"]] @ emb + self.tensors[layer["bias"]]
                x = x + proj[None, None, :]
            elif kind == "residual":
                x = x + self._run(layer["layers"], x, t)
            else:  # pragma: no cover - rejected at load time
                raise ContainerError(f"unknown layer kind {kind!r}")
        return x

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray:
        x = np.asarray(x_t, dtype=np.float64)
        squeeze = x.ndim == 2
        if squeeze:
            x = x[:, :, None]
        out = self._run(self.header["layers"], x, int(t))
        return out[:, :, 0] if squeeze else out


def load_weight_container(path, schedule: NoiseSchedule | None = None) -> CompactNetDenoiser:
    """Read, validate, and wrap a container; fail-closed on any defect.

    When ``schedule`` is given its fingerprint must match the one embedded
    at export time.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise ContainerError("magic: not a weight container")
    (header_len,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + header_len:
        raise ContainerError("header: truncated before end of header block")
    try:
        header = json.loads(blob[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"header: invalid JSON ({exc})") from exc
    _validate_header(header)

    payload = blob[8 + header_len:]
    expected = sum(int(np.prod(spec["shape"])) for spec in header["tensors"]) * 4
    if len(payload) != expected:
        raise ContainerError(
            f"payload: expected {expected} bytes for declared tensors, got {len(payload)}")

    if schedule is not None:
        want = fingerprint_of(schedule)
        got = header.get("schedule_fingerprint")
        if got != want:
            raise ContainerError(
                f"schedule_fingerprint: container was exported for a different schedule "
                f"({got} != {want})")

    tensors = {}
    offset = 0
    for spec in header["tensors"]:
        count = int(np.prod(spec["shape"]))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
        offset += count * 4
    return CompactNetDenoiser(header, tensors)
