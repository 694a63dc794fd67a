"""Bit-exact tensor and image I/O.

Tensors travel in a minimal raw container ("GST1"):

    bytes "GST1" | u32 rank | u32 dims[rank] | u32 dtype | payload

with dtype code 0 = f32 and 1 = u8, everything little-endian, payload in
row-major order, rank 1..4.  Images are binary PPM (P6, maxval 255) with u8
values mapped to [0, 1] floats by division by 255.  Both round-trip
byte-exactly, independent of host endianness.
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path

import numpy as np

from .errors import IoFailure, MalformedHeader, ShapeMismatch, TruncatedPayload, UnsupportedFormat

MAGIC = b"GST1"
MAX_RANK = 4

_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("uint8"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("u1")}


def save_tensor(t: np.ndarray, path) -> None:
    """Write `t` (float32 or uint8, rank 1..4) as a GST1 file."""
    t = np.ascontiguousarray(t)
    if t.dtype not in _DTYPE_CODES:
        raise MalformedHeader(f"unsupported dtype {t.dtype}; expected float32 or uint8")
    if not 1 <= t.ndim <= MAX_RANK:
        raise MalformedHeader(f"rank {t.ndim} outside 1..{MAX_RANK}")
    if any(d < 1 for d in t.shape):
        raise MalformedHeader(f"non-positive dim in shape {t.shape}")
    code = _DTYPE_CODES[t.dtype]
    header = MAGIC + struct.pack("<I", t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape)
    header += struct.pack("<I", code)
    payload = t.astype(_CODE_DTYPES[code], copy=False).tobytes()
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(payload)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def load_tensor(path) -> np.ndarray:
    """Read a GST1 file back into a numpy array (float32 or uint8)."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise MalformedHeader(f"{path}: missing GST1 magic")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if not 1 <= rank <= MAX_RANK:
        raise MalformedHeader(f"{path}: rank {rank} outside 1..{MAX_RANK}")
    need = 8 + 4 * rank + 4
    if len(raw) < need:
        raise MalformedHeader(f"{path}: header truncated")
    dims = struct.unpack_from(f"<{rank}I", raw, 8)
    if any(d < 1 for d in dims):
        raise MalformedHeader(f"{path}: non-positive dim in {dims}")
    (code,) = struct.unpack_from("<I", raw, 8 + 4 * rank)
    if code not in _CODE_DTYPES:
        raise MalformedHeader(f"{path}: unknown dtype code {code}")
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(dims))
    expected = need + count * dtype.itemsize
    if len(raw) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(raw) - need} bytes, expected {count * dtype.itemsize}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=need)
    return data.reshape(dims).astype(dtype.newbyteorder("="), copy=True)


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 PPM (maxval 255) into an (H, W, 3) float array in [0, 1]."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if raw[:2] != b"P6":
        raise UnsupportedFormat(f"{path}: not a binary P6 PPM")
    # Header: three ASCII integers (width, height, maxval) separated by
    # whitespace; '#' starts a comment running to end of line.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        m = re.match(rb"\d+", raw[pos:])
        if not m:
            raise UnsupportedFormat(f"{path}: malformed PPM header")
        fields.append(int(m.group()))
        pos += m.end()
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: maxval {maxval} != 255")
    pos += 1  # single whitespace byte before the binary payload
    count = width * height * 3
    if len(raw) - pos != count:
        raise UnsupportedFormat(f"{path}: payload is {len(raw) - pos} bytes, expected {count}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos)
    return pixels.reshape(height, width, 3).astype(np.float64) / 255.0


def write_ppm(image: np.ndarray, path) -> None:
    """Write an (H, W, 3) float array in [0, 1] as a binary P6 PPM.

    Values are clipped to [0, 1] and rounded to the nearest 1/255 step, so
    write_ppm(read_ppm(f)) reproduces f byte-for-byte.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) image, got {image.shape}")
    h, w = image.shape[:2]
    u8 = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        with open(path, "wb") as f:
            f.write(b"P6\n%d %d\n255\n" % (w, h))
            f.write(u8.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def frame_path(directory, index: int) -> Path:
    """Path of frame `index` in an image-sequence directory (frame_%05d.ppm)."""
    return Path(directory) / f"frame_{index:05d}.ppm"


def write_frames(frames, directory) -> None:
    """Write a T-frame sequence as zero-padded numbered PPM files."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    for t, frame in enumerate(frames):
        write_ppm(frame, frame_path(directory, t))


def read_frames(directory) -> np.ndarray:
    """Read frame_%05d.ppm files 0..T-1 from a directory into a (T, H, W, 3) array."""
    directory = Path(directory)
    frames = []
    t = 0
    while frame_path(directory, t).exists():
        frames.append(read_ppm(frame_path(directory, t)))
        t += 1
    if not frames:
        raise IoFailure(f"no frame_00000.ppm under {directory}")
    return np.stack(frames)
