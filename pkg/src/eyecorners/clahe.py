"""Contrast limited adaptive histogram equalization on gray images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ImageTooSmall
from .image import as_gray


@dataclass(frozen=True)
class ClaheParams:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 4.0

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError(f"tile grid must be at least 1x1, got {self.tiles_x}x{self.tiles_y}")
        if not self.clip_limit >= 1.0:
            raise ValueError(f"clip_limit must be >= 1.0, got {self.clip_limit}")


def tile_bounds(length: int, tiles: int) -> np.ndarray:
    """Integer tile edges ``b`` so tile k spans ``[b[k], b[k+1])``."""
    return (np.arange(tiles + 1) * length) // tiles


@njit(cache=True)
def _clip_histogram(hist, limit):
    h = np.empty(256, dtype=np.float64)
    excess = 0.0
    for i in range(256):
        v = float(hist[i])
        if v > limit:
            excess += v - limit
            v = limit
        h[i] = v
    while excess > 1e-12 * limit:
        n = 0
        for i in range(256):
            if h[i] < limit:
                n += 1
        if n == 0:
            break
        share = excess / n
        spent = 0.0
        for i in range(256):
            if h[i] < limit:
                v = min(h[i] + share, limit)
                spent += v - h[i]
                h[i] = v
        if spent <= 0.0:
            break
        excess -= spent
    return h


@njit(cache=True)
def _tile_lut(hist, clip_limit):
    area = 0.0
    for i in range(256):
        area += hist[i]
    h = _clip_histogram(hist, clip_limit * area / 256.0)
    cdf = np.cumsum(h)
    first = 0
    while h[first] <= 0.0:
        first += 1
    cdf_min = cdf[first]
    span = cdf[255] - cdf_min
    lut = np.empty(256, dtype=np.int64)
    for i in range(256):
        if span <= 0.0:
            # a single occupied bin: nothing to spread
            lut[i] = i
        else:
            # multiply first: for integer counts the quotient is then correctly
            # rounded, so exact halves round up as intended
            v = math.floor((cdf[i] - cdf_min) * 255.0 / span + 0.5)
            lut[i] = min(max(v, 0), 255)
    return lut


def clip_histogram(hist: np.ndarray, limit: float) -> np.ndarray:
    """Clip bins at ``limit`` and hand the excess back to bins still below it.

    The excess is spread evenly over the bins below the limit, capped at the
    limit, repeating until it is used up. With ``limit = area / 256`` every bin
    ends at exactly ``limit``.
    """
    return _clip_histogram(np.asarray(hist, dtype=np.float64), float(limit))


def tile_mapping(hist: np.ndarray, clip_limit: float) -> np.ndarray:
    """256-entry monotone lookup table equalizing one tile's histogram."""
    return _tile_lut(np.asarray(hist, dtype=np.float64), float(clip_limit))


def _axis_weights(length: int, bounds: np.ndarray):
    """Per-coordinate (lower tile, upper tile, numerator, denominator).

    Tile centers are half-integers, so weights are carried as integer ratios
    ``num / den`` over doubled coordinates to keep the blend exact.
    """
    centers2 = bounds[:-1] + bounds[1:] - 1  # twice the center coordinate
    pos2 = 2 * np.arange(length)
    hi = np.searchsorted(centers2, pos2, side="right")
    lo = np.clip(hi - 1, 0, len(centers2) - 1)
    hi = np.clip(hi, 0, len(centers2) - 1)
    den = np.where(hi > lo, centers2[hi] - centers2[lo], 1)
    num = np.where(hi > lo, pos2 - centers2[lo], 0)
    return lo, hi, num.astype(np.int64), den.astype(np.int64)


@njit(cache=True)
def _tile_luts(img, by, bx, clip_limit):
    ty, tx = by.shape[0] - 1, bx.shape[0] - 1
    luts = np.empty((ty, tx, 256), dtype=np.int64)
    hist = np.empty(256, dtype=np.float64)
    for i in range(ty):
        for j in range(tx):
            hist[:] = 0.0
            for y in range(by[i], by[i + 1]):
                for x in range(bx[j], bx[j + 1]):
                    hist[img[y, x]] += 1.0
            luts[i, j] = _tile_lut(hist, clip_limit)
    return luts


@njit(cache=True)
def _blend(img, luts, ylo, yhi, ynum, yden, xlo, xhi, xnum, xden):
    h, w = img.shape
    out = np.empty((h, w), dtype=np.uint8)
    for y in range(h):
        i0, i1, ny, dy = ylo[y], yhi[y], ynum[y], yden[y]
        for x in range(w):
            j0, j1, nx, dx = xlo[x], xhi[x], xnum[x], xden[x]
            v = img[y, x]
            top = (dx - nx) * luts[i0, j0, v] + nx * luts[i0, j1, v]
            bot = (dx - nx) * luts[i1, j0, v] + nx * luts[i1, j1, v]
            total = (dy - ny) * top + ny * bot
            den = dy * dx
            out[y, x] = (2 * total + den) // (2 * den)
    return out


def tile_mappings(img: np.ndarray, p: ClaheParams) -> np.ndarray:
    """All tile lookup tables, shape ``(tiles_y, tiles_x, 256)``."""
    h, w = img.shape
    return _tile_luts(img, tile_bounds(h, p.tiles_y), tile_bounds(w, p.tiles_x), float(p.clip_limit))


def clahe(img, p: ClaheParams = ClaheParams()) -> np.ndarray:
    a = as_gray(img)
    if a.dtype != np.uint8:
        raise TypeError(f"clahe expects uint8 pixels, got {a.dtype}")
    h, w = a.shape
    if w < p.tiles_x or h < p.tiles_y:
        raise ImageTooSmall(f"{w}x{h} image cannot hold a {p.tiles_x}x{p.tiles_y} tile grid")
    luts = tile_mappings(a, p)
    return _blend(a, luts, *_axis_weights(h, tile_bounds(h, p.tiles_y)),
                  *_axis_weights(w, tile_bounds(w, p.tiles_x)))
