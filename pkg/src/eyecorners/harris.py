"""Harris-Stephens corner candidates on the eyelid contour image."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DimMismatch, NoCandidates, OutOfBounds
from .image import GradientField, sobel


@dataclass(frozen=True)
class CircularWindow:
    """Gaussian weights on a discrete disk, normalized to sum to one."""
    radius: int
    kernel: np.ndarray  # (2r+1, 2r+1), zero outside the disk

    @classmethod
    def make(cls, radius: int = 3, sigma: float | None = None) -> "CircularWindow":
        if radius < 0:
            raise ValueError("radius must be >= 0")
        sigma = radius / 2.0 if sigma is None else sigma
        v, u = np.mgrid[-radius:radius + 1, -radius:radius + 1]
        d2 = (u * u + v * v).astype(np.float64)
        if sigma > 0:
            k = np.exp(-d2 / (2.0 * sigma * sigma))
        else:
            k = np.ones_like(d2)
        k[d2 > radius * radius] = 0.0
        k /= k.sum()
        k.setflags(write=False)
        return cls(radius, k)

    def weights(self) -> dict:
        r = self.radius
        return {(u, v): float(self.kernel[v + r, u + r])
                for v in range(-r, r + 1) for u in range(-r, r + 1)
                if u * u + v * v <= r * r}


class HarrisField(NamedTuple):
    """Per-pixel structure tensor ``[[a, b], [b, c]]``."""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def at(self, x: int, y: int) -> np.ndarray:
        return np.array([[self.a[y, x], self.b[y, x]], [self.b[y, x], self.c[y, x]]])


@dataclass(frozen=True)
class CornerCandidate:
    x: int
    y: int
    response: float


def harris_field(g: GradientField, w: CircularWindow) -> HarrisField:
    ix = np.asarray(g.ix, dtype=np.float64)
    iy = np.asarray(g.iy, dtype=np.float64)
    if ix.shape != iy.shape:
        raise DimMismatch("gradient components differ in shape")
    k = w.kernel
    a = ndimage.correlate(ix * ix, k, mode="nearest")
    b = ndimage.correlate(ix * iy, k, mode="nearest")
    c = ndimage.correlate(iy * iy, k, mode="nearest")
    return HarrisField(a, b, c)


def ssd_score(img, px: int, py: int, sx: int, sy: int, w: CircularWindow) -> float:
    """Exact weighted SSD between the window at ``(px, py)`` and its shift by ``(sx, sy)``."""
    I = np.asarray(img, dtype=np.float64)
    h, wd = I.shape
    r = w.radius
    lo_x, hi_x = px - r + min(0, sx), px + r + max(0, sx)
    lo_y, hi_y = py - r + min(0, sy), py + r + max(0, sy)
    if lo_x < 0 or lo_y < 0 or hi_x >= wd or hi_y >= h:
        raise OutOfBounds(f"window at ({px}, {py}) shifted by ({sx}, {sy}) leaves the image")
    base = I[py - r:py + r + 1, px - r:px + r + 1]
    moved = I[py - r + sy:py + r + 1 + sy, px - r + sx:px + r + 1 + sx]
    return float(np.sum(w.kernel * (moved - base) ** 2))


def quadratic_score(h: HarrisField, px: int, py: int, sx: float, sy: float) -> float:
    """Second-order approximation ``[sx sy] H [sx sy]^T`` of the SSD score."""
    a, b, c = h.a[py, px], h.b[py, px], h.c[py, px]
    return float(a * sx * sx + 2.0 * b * sx * sy + c * sy * sy)


def corner_response(h: HarrisField, k: float = 0.04) -> np.ndarray:
    if not 0.01 <= k <= 0.25:
        raise ValueError(f"harris k must lie in [0.01, 0.25], got {k}")
    det = h.a * h.c - h.b * h.b
    tr = h.a + h.c
    return det - k * tr * tr


def _disk_offsets(radius: int):
    return [(dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)
            if (dx or dy) and dx * dx + dy * dy <= radius * radius]


def select_candidates(resp, contour, nms_radius: int = 3, rel_thresh: float = 0.01,
                      max_n: int = 10) -> list[CornerCandidate]:
    """Strongest local maxima of ``resp`` on the nonzero contour support.

    A pixel survives when no contour pixel within ``nms_radius`` scores
    higher; equal scores go to the pixel earlier in (y, x) order. Results are
    sorted by response, ties by (y, x).
    """
    R = np.asarray(resp, dtype=np.float64)
    support = np.asarray(contour) != 0
    if R.shape != support.shape:
        raise DimMismatch(f"response {R.shape} and contour {support.shape} differ")
    if not support.any():
        raise NoCandidates("contour is empty")
    rmax = float(R[support].max())
    if rmax <= 0.0:
        raise NoCandidates("no positive corner response on the contour")
    thr = rel_thresh * rmax
    keep = support & (R >= thr) & (R > 0)
    pad = nms_radius
    Rp = np.pad(np.where(support, R, -np.inf), pad, constant_values=-np.inf)
    h, w = R.shape
    for dx, dy in _disk_offsets(nms_radius):
        q = Rp[pad + dy:pad + dy + h, pad + dx:pad + dx + w]
        earlier = dy < 0 or (dy == 0 and dx < 0)
        keep &= ~((q > R) | ((q == R) & earlier))
    ys, xs = np.nonzero(keep)
    cands = sorted(zip(-R[ys, xs], ys.tolist(), xs.tolist()))
    return [CornerCandidate(int(x), int(y), float(-nr)) for nr, y, x in cands[:max_n]]


def contour_candidates(contour, window: CircularWindow | None = None, k: float = 0.04,
                       nms_radius: int = 3, rel_thresh: float = 0.01,
                       max_n: int = 10) -> list[CornerCandidate]:
    """Sobel gradients, structure tensor, response and selection in one call."""
    window = window or CircularWindow.make(3)
    field = harris_field(sobel(contour), window)
    return select_candidates(corner_response(field, k), contour, nms_radius, rel_thresh, max_n)


def min_eigenvalue(h: HarrisField) -> np.ndarray:
    tr = h.a + h.c
    disc = np.sqrt(np.maximum((h.a - h.c) ** 2 + 4.0 * h.b * h.b, 0.0))
    return 0.5 * (tr - disc)
