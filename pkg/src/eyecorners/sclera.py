"""Sclera segmentation, morphological clean-up and the eyelid contour."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import ndimage

from .errors import DimMismatch, EmptyImage
from .image import saturation_plane, to_grayscale


def otsu_threshold(img) -> int:
    """Otsu's threshold on a uint8 plane.

    Returns ``t`` such that the lower class is ``values <= t``. Ties in the
    between-class variance resolve to the smallest ``t``; a constant plane
    returns its single value.
    """
    a = np.asarray(img)
    if a.size == 0:
        raise EmptyImage("cannot threshold an empty image")
    hist = np.bincount(a.ravel().astype(np.int64), minlength=256)[:256].astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = total - w0
    m0 = np.cumsum(hist * levels)
    mt = m0[-1]
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return int(np.flatnonzero(hist)[0])
    between = np.zeros(256)
    w0v, w1v, m0v = w0[valid], w1[valid], m0[valid]
    between[valid] = (m0v * total - mt * w0v) ** 2 / (w0v * w1v)
    return int(np.argmax(np.where(valid, between, -1.0)))


def segment_sclera(eye, mode: str = "auto", thresh: Union[str, int] = "auto") -> np.ndarray:
    """Boolean mask of sclera pixels in an eye crop.

    ``color`` mode keeps the least saturated pixels (saturation <= t);
    ``gray`` mode keeps the brightest (intensity >= t, or above Otsu's
    threshold when automatic). ``auto`` picks by the number of channels.
    """
    a = np.asarray(eye)
    if a.size == 0:
        raise EmptyImage("empty eye crop")
    if mode == "auto":
        mode = "color" if a.ndim == 3 else "gray"
    if mode == "color":
        if a.ndim != 3:
            raise ValueError("color mode needs an RGB crop")
        plane = saturation_plane(a)
        t = otsu_threshold(plane) if thresh == "auto" else int(thresh)
        return plane <= t
    if mode == "gray":
        plane = to_grayscale(a) if a.ndim == 3 else a
        if thresh == "auto":
            return plane > otsu_threshold(plane)
        return plane >= int(thresh)
    raise ValueError(f"unknown sclera mode {mode!r}")


@dataclass(frozen=True)
class StructuringElement:
    half_axes: tuple
    offsets: tuple  # (dx, dy) pairs

    @property
    def radius(self) -> tuple:
        return (max(abs(u) for u, _ in self.offsets), max(abs(v) for _, v in self.offsets))


def ellipse_element(a: int, b: int) -> StructuringElement:
    """Offsets ``(u, v)`` with ``(u/a)^2 + (v/b)^2 <= 1``; ``a`` is horizontal."""
    if a < 0 or b < 0:
        raise ValueError("half-axes must be non-negative")
    offs = []
    for v in range(-b, b + 1):
        for u in range(-a, a + 1):
            tu = (u / a) ** 2 if a else (0.0 if u == 0 else 2.0)
            tv = (v / b) ** 2 if b else (0.0 if v == 0 else 2.0)
            if tu + tv <= 1.0:
                offs.append((u, v))
    return StructuringElement((a, b), tuple(offs))


def scaled_element(crop_width: int, base=(3, 2), base_width: int = 100) -> StructuringElement:
    f = crop_width / base_width
    a = max(1, int(np.floor(base[0] * f + 0.5)))
    b = max(1, int(np.floor(base[1] * f + 0.5)))
    return ellipse_element(a, b)


def _shifted(padded: np.ndarray, pad: int, u: int, v: int, shape) -> np.ndarray:
    h, w = shape
    return padded[pad + v:pad + v + h, pad + u:pad + u + w]


def erode(m, se: StructuringElement) -> np.ndarray:
    """Pixels whose whole translated element lies in the mask; off-image is background."""
    m = np.asarray(m, dtype=bool)
    pad = max(max(se.radius), 1)
    p = np.pad(m, pad, constant_values=False)
    out = np.ones(m.shape, dtype=bool)
    for u, v in se.offsets:
        out &= _shifted(p, pad, u, v, m.shape)
    return out


def dilate(m, se: StructuringElement) -> np.ndarray:
    m = np.asarray(m, dtype=bool)
    pad = max(max(se.radius), 1)
    p = np.pad(m, pad, constant_values=False)
    out = np.zeros(m.shape, dtype=bool)
    for u, v in se.offsets:
        out |= _shifted(p, pad, -u, -v, m.shape)
    return out


def morph_open(m, se: StructuringElement) -> np.ndarray:
    return dilate(erode(m, se), se)


_EIGHT = np.ones((3, 3), dtype=bool)


def largest_component(m) -> np.ndarray:
    """Largest 8-connected foreground component.

    Equal sizes go to the component whose first pixel comes first in
    row-major order.
    """
    m = np.asarray(m, dtype=bool)
    labels, n = ndimage.label(m, structure=_EIGHT)
    if n == 0:
        return np.zeros_like(m)
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=n + 1)
    sizes[0] = 0
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size))
    best = min(range(1, n + 1), key=lambda k: (-sizes[k], first[k]))
    return labels == best


def mask_boundary(m) -> np.ndarray:
    """Foreground pixels with a background 4-neighbor or on the image border."""
    m = np.asarray(m, dtype=bool)
    p = np.pad(m, 1, constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return m & ~interior


def eyelid_contour(eye_enhanced, m) -> np.ndarray:
    """Enhanced eye intensities on the mask boundary, zero elsewhere."""
    g = np.asarray(eye_enhanced)
    m = np.asarray(m, dtype=bool)
    if g.ndim != 2 or g.shape != m.shape:
        raise DimMismatch(f"eye image {g.shape} and mask {m.shape} differ")
    out = np.zeros_like(g)
    b = mask_boundary(m)
    out[b] = g[b]
    return out
