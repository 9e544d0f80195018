"""Reading and writing PNG and binary PGM/PPM (P5/P6) files."""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParseError

_PNM_SUFFIXES = {".pgm", ".ppm", ".pnm"}
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_pnm(raw: bytes) -> np.ndarray:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise ParseError("truncated PNM header")
        fields.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = fields
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"unsupported PNM magic {magic!r}")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ParseError(f"bad PNM header: {exc}") from None
    if maxval != 255:
        raise ParseError(f"only 8-bit PNM supported, maxval={maxval}")
    pos += 1  # single whitespace byte after maxval
    channels = 1 if magic == b"P5" else 3
    n = w * h * channels
    body = raw[pos:pos + n]
    if len(body) != n:
        raise ParseError(f"PNM body has {len(body)} bytes, expected {n}")
    a = np.frombuffer(body, dtype=np.uint8)
    return a.reshape((h, w) if channels == 1 else (h, w, 3)).copy()


def encode_pnm(img: np.ndarray) -> bytes:
    a = np.asarray(img, dtype=np.uint8)
    if a.ndim == 2:
        magic = "P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = "P6"
    else:
        raise ValueError(f"cannot encode array of shape {a.shape} as PNM")
    h, w = a.shape[:2]
    return f"{magic} {w} {h} 255\n".encode("ascii") + np.ascontiguousarray(a).tobytes()


def read_image(path) -> np.ndarray:
    """Load an image as uint8: ``(H, W)`` for gray files, ``(H, W, 3)`` otherwise."""
    path = Path(path)
    if path.suffix.lower() in _PNM_SUFFIXES:
        return _parse_pnm(path.read_bytes())
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "1"):
            return np.asarray(im.convert("L"), dtype=np.uint8).copy()
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_image(path, img: np.ndarray) -> None:
    path = Path(path)
    a = np.asarray(img)
    if a.dtype == bool:
        a = a.astype(np.uint8) * 255
    a = a.astype(np.uint8)
    if path.suffix.lower() in _PNM_SUFFIXES:
        path.write_bytes(encode_pnm(a))
        return
    # fixed compression settings keep output byte-stable across runs
    Image.fromarray(a).save(os.fspath(path), format="PNG", optimize=False, compress_level=6)
