"""Binary field files ("GWF1") and 8-bit graymap rendering.

Layout: magic "GWF1", one shape-kind byte (0 = flat, 1 = grid), the dims as
32-bit little-endian unsigned integers (d, or h then w), then the values as
row-major 32-bit little-endian IEEE floats. The 32-bit on-disk precision is
deliberate; in-memory math stays float64.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DocumentError
from .fields import FLAT, GRID, Field, Shape

MAGIC = b"GWF1"
_KIND_BYTE = {FLAT: 0, GRID: 1}
_KIND_FROM_BYTE = {0: FLAT, 1: GRID}


def field_to_bytes(f: Field) -> bytes:
    head = MAGIC + bytes([_KIND_BYTE[f.shape.kind]])
    head += struct.pack("<" + "I" * len(f.shape.dims), *f.shape.dims)
    body = f.values.astype("<f4").tobytes()
    return head + body


def field_from_bytes(raw: bytes) -> Field:
    if raw[:4] != MAGIC:
        raise DocumentError("not a GWF1 field file (bad magic)")
    if len(raw) < 5:
        raise DocumentError("truncated field file")
    kind = _KIND_FROM_BYTE.get(raw[4])
    if kind is None:
        raise DocumentError(f"unknown shape kind byte {raw[4]}")
    ndims = 1 if kind == FLAT else 2
    header_len = 5 + 4 * ndims
    if len(raw) < header_len:
        raise DocumentError("truncated field file header")
    dims = struct.unpack("<" + "I" * ndims, raw[5:header_len])
    shape = Shape(kind, dims)
    if (len(raw) - header_len) % 4 != 0:
        raise DocumentError("truncated field file payload")
    values = np.frombuffer(raw[header_len:], dtype="<f4")
    if values.size != shape.volume:
        raise DocumentError(
            f"field file holds {values.size} values, shape needs {shape.volume}"
        )
    return Field(shape, values.astype(np.float64))


def write_field(f: Field, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(f))


def read_field(path: str) -> Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())


def render_pgm(f: Field) -> tuple[bytes, float, float]:
    """Binary P5 graymap with a linear [min, max] -> [0, 255] mapping.

    Returns the bytes plus the (min, max) range for the sidecar manifest;
    flat fields render as a single row. Quantization is for viewing only and
    never feeds back into computation.
    """
    if f.shape.is_grid:
        h, w = f.shape.dims
    else:
        h, w = 1, f.shape.volume
    lo = float(f.values.min())
    hi = float(f.values.max())
    if hi > lo:
        levels = np.rint((f.values - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        levels = np.zeros(f.values.size, dtype=np.uint8)
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + levels.tobytes(), lo, hi
