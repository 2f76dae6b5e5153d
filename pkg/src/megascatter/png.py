"""Minimal deterministic PNG I/O for 8-bit RGBA images.

Writing uses a fixed configuration (filter 0 on every row, zlib level 6, no
ancillary chunks) so identical pixel buffers always produce byte-identical
files. Reading supports exactly the files this module writes plus any
non-interlaced 8-bit RGBA PNG with per-row filters 0-4, which is enough for
round-trips and golden comparisons in tests.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


def _chunk(tag: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + tag + body + struct.pack(">I", zlib.crc32(tag + body))


def write_png(path: str | Path, image: np.ndarray) -> None:
    """Write an (H, W, 4) uint8 array as an RGBA PNG."""
    if image.ndim != 3 or image.shape[2] != 4 or image.dtype != np.uint8:
        raise ValueError("expected an (H, W, 4) uint8 image")
    height, width = image.shape[:2]
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 6, 0, 0, 0)
    rows = np.ascontiguousarray(image)
    raw = b"".join(b"\x00" + rows[y].tobytes() for y in range(height))
    idat = zlib.compress(raw, _ZLIB_LEVEL)
    data = _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")
    Path(path).write_bytes(data)


def _unfilter(filter_type: int, row: np.ndarray, prev: np.ndarray, bpp: int) -> np.ndarray:
    if filter_type == 0:
        return row
    out = row.astype(np.int32)
    if filter_type == 2:  # Up
        return ((out + prev) % 256).astype(np.uint8)
    for i in range(len(row)):
        a = int(out[i - bpp]) if i >= bpp else 0
        b = int(prev[i])
        if filter_type == 1:
            out[i] = (out[i] + a) % 256
        elif filter_type == 3:
            out[i] = (out[i] + (a + b) // 2) % 256
        elif filter_type == 4:
            c = int(prev[i - bpp]) if i >= bpp else 0
            p = a + b - c
            pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
            pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
            out[i] = (out[i] + pred) % 256
        else:
            raise ValueError(f"unsupported PNG filter {filter_type}")
    return out.astype(np.uint8)


def read_png(path: str | Path) -> np.ndarray:
    """Read a non-interlaced 8-bit RGBA PNG into an (H, W, 4) uint8 array."""
    data = Path(path).read_bytes()
    if data[:8] != _SIGNATURE:
        raise ValueError("not a PNG file")
    pos = 8
    width = height = None
    idat = b""
    while pos < len(data):
        (length,) = struct.unpack_from(">I", data, pos)
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, color, _, _, interlace = struct.unpack(">IIBBBBB", body)
            if depth != 8 or color != 6 or interlace != 0:
                raise ValueError("only non-interlaced 8-bit RGBA PNGs are supported")
        elif tag == b"IDAT":
            idat += body
        elif tag == b"IEND":
            break
    if width is None:
        raise ValueError("missing IHDR")
    raw = zlib.decompress(idat)
    stride = width * 4
    image = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(height):
        offset = y * (stride + 1)
        filter_type = raw[offset]
        row = np.frombuffer(raw, dtype=np.uint8, count=stride, offset=offset + 1)
        image[y] = _unfilter(filter_type, row, prev, 4)
        prev = image[y]
    return image.reshape(height, width, 4)
