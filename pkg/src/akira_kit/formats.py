"""Readers and writers for the on-disk formats the toolkit exchanges.

Covers 8-bit PNG frames, 32-bit PFM scalar maps (disparity, blur radius),
Middlebury ``.flo`` flow fields, the packed camera-map container, and the
per-frame camera parameter JSON-lines sidecar.  All binary formats are
little-endian; all readers raise :class:`FormatError` with the file and
offset of the first offending byte.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from PIL import Image

from .camera import CameraMap, CameraParams
from .errors import ConfigError, FormatError

FLO_MAGIC = 202021.25  # sanity word spelling "PIEH" when read as ASCII floats
AKMP_MAGIC = b"AKMP"


# ---------------------------------------------------------------------------
# 8-bit PNG frames

def read_png(path) -> np.ndarray:
    """Load an 8-bit PNG as (H, W, 3) float64 in [0, 1]."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot decode PNG: {exc}", path=str(path)) from exc
    return arr.astype(np.float64) / 255.0


def write_png(path, frame: np.ndarray) -> None:
    """Save a float frame in [0, 1] as 8-bit RGB PNG (values are clipped)."""
    u8 = frame_to_uint8(frame)
    Image.fromarray(u8, mode="RGB").save(path, format="PNG")


def frame_to_uint8(frame: np.ndarray) -> np.ndarray:
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ConfigError(f"frame must be (H, W, 3), got {arr.shape}")
    return np.clip(np.round(arr * 255.0), 0.0, 255.0).astype(np.uint8)


# ---------------------------------------------------------------------------
# PFM scalar maps (stored bottom-up per the format's convention)

def read_pfm(path) -> np.ndarray:
    """Load a PFM image; returns (H, W) or (H, W, 3) float arrays, top-down."""
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            channels = 3
        else:
            raise FormatError("not a PFM file (bad header)", path=str(path), offset=0)
        dims = f.readline().split()
        if len(dims) != 2:
            raise FormatError("malformed PFM dimensions line", path=str(path), offset=3)
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        data = np.fromfile(f, dtype=endian + "f4", count=count)
        if data.size != count:
            raise FormatError(
                f"PFM data truncated: expected {count} floats, got {data.size}",
                path=str(path),
                offset=f.tell(),
            )
    shape = (h, w) if channels == 1 else (h, w, 3)
    return np.ascontiguousarray(data.reshape(shape)[::-1])


def write_pfm(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
    else:
        raise ConfigError(f"PFM data must be (H, W) or (H, W, 3), got {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale -> little-endian
        f.write(np.ascontiguousarray(data[::-1]).astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# Middlebury .flo optical flow

def read_flo(path) -> np.ndarray:
    """Load a .flo flow field as (H, W, 2) float32 (du, dv)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12:
        raise FormatError("flow file shorter than its 12-byte header", path=str(path), offset=len(raw))
    magic = np.frombuffer(raw, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"bad flow magic {magic!r}, expected {FLO_MAGIC}", path=str(path), offset=0)
    w, h = struct.unpack_from("<ii", raw, 4)
    if w <= 0 or h <= 0 or w * h > 10**8:
        raise FormatError(f"implausible flow dimensions {w}x{h}", path=str(path), offset=4)
    expected = 12 + w * h * 2 * 4
    if len(raw) != expected:
        raise FormatError(
            f"flow payload is {len(raw) - 12} bytes, expected {expected - 12}",
            path=str(path),
            offset=min(len(raw), expected),
        )
    data = np.frombuffer(raw, dtype="<f4", offset=12, count=w * h * 2)
    return data.reshape(h, w, 2).copy()


def write_flo(path, flow: np.ndarray) -> None:
    flow = np.asarray(flow, dtype=np.float32)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ConfigError(f"flow must be (H, W, 2), got {flow.shape}")
    h, w = flow.shape[:2]
    with open(path, "wb") as f:
        f.write(np.float32(FLO_MAGIC).tobytes())
        f.write(struct.pack("<ii", w, h))
        f.write(np.ascontiguousarray(flow).astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# Packed per-clip camera maps
#
# Layout: 16-byte header (magic "AKMP", uint32 H, W, frame count), then one
# frame after another, each frame channel-major: 9 planes of H*W float32.

def write_camera_maps(path, maps) -> None:
    maps = list(maps)
    if not maps:
        raise ConfigError("refusing to write an empty camera-map container")
    h, w = maps[0].shape
    for m in maps:
        if m.shape != (h, w):
            raise ConfigError(f"camera map shapes differ: {m.shape} vs {(h, w)}")
    with open(path, "wb") as f:
        f.write(AKMP_MAGIC)
        f.write(struct.pack("<III", h, w, len(maps)))
        for m in maps:
            f.write(np.ascontiguousarray(m.as_array()).astype("<f4").tobytes())


def read_camera_maps(path) -> list[CameraMap]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16:
        raise FormatError("camera-map file shorter than its 16-byte header", path=str(path), offset=len(raw))
    if raw[:4] != AKMP_MAGIC:
        raise FormatError(f"bad camera-map magic {raw[:4]!r}", path=str(path), offset=0)
    h, w, n = struct.unpack_from("<III", raw, 4)
    frame_floats = 9 * h * w
    expected = 16 + n * frame_floats * 4
    if len(raw) != expected:
        raise FormatError(
            f"camera-map payload is {len(raw) - 16} bytes, expected {expected - 16} "
            f"for {n} frames of {h}x{w}",
            path=str(path),
            offset=min(len(raw), expected),
        )
    out = []
    for i in range(n):
        start = 16 + i * frame_floats * 4
        arr = np.frombuffer(raw, dtype="<f4", offset=start, count=frame_floats)
        out.append(CameraMap.from_array(arr.reshape(9, h, w)))
    return out


# ---------------------------------------------------------------------------
# Camera parameter JSON-lines sidecar (one frame per line)

def write_params_jsonl(path, params) -> None:
    with open(path, "w", encoding="ascii") as f:
        for p in params:
            f.write(json.dumps(p.to_dict()) + "\n")


def read_params_jsonl(path) -> list[CameraParams]:
    out = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                out.append(CameraParams.from_dict(record))
            except (json.JSONDecodeError, ConfigError, ValueError) as exc:
                raise FormatError(
                    f"bad camera record on line {lineno}: {exc}",
                    path=str(path),
                    offset=lineno,
                ) from exc
    if not out:
        raise FormatError("camera parameter file holds no records", path=str(path), offset=0)
    return out
