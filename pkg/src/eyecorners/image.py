"""Image containers and the small set of kernels the pipeline needs.

Images are plain numpy arrays: gray images are ``(H, W)`` uint8, RGB images
``(H, W, 3)`` uint8. Coordinates are ``x = column``, ``y = row`` with the
origin at the top-left pixel.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyImage, ImageTooSmall, OutOfBounds

LUMA_WEIGHTS = (299, 587, 114)  # per mille


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def area(self) -> int:
        return self.w * self.h

    def inside(self, width: int, height: int) -> bool:
        return (self.w >= 1 and self.h >= 1 and self.x >= 0 and self.y >= 0
                and self.x2 <= width and self.y2 <= height)

    def translate(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)

    def iou(self, other: "Rect") -> float:
        ix = max(0, min(self.x2, other.x2) - max(self.x, other.x))
        iy = max(0, min(self.y2, other.y2) - max(self.y, other.y))
        inter = ix * iy
        union = self.area() + other.area() - inter
        return inter / union if union else 0.0


class GradientField(NamedTuple):
    ix: np.ndarray
    iy: np.ndarray

    @property
    def shape(self):
        return self.ix.shape


def round_half_up(a):
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5)


def as_gray(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D gray image, got shape {a.shape}")
    if a.size == 0:
        raise EmptyImage("image has no pixels")
    return a


def as_rgb(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {a.shape}")
    if a.size == 0:
        raise EmptyImage("image has no pixels")
    return a


def to_grayscale(img) -> np.ndarray:
    """BT.601 luma, rounded half-up.

    Evaluated as ``(299 R + 587 G + 114 B + 500) // 1000`` so ties round
    exactly instead of at the mercy of binary fractions.
    """
    rgb = as_rgb(img).astype(np.uint32)
    y = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500
    return (y // 1000).astype(np.uint8)


def saturation_plane(img) -> np.ndarray:
    """HSV saturation quantized to 0..255."""
    rgb = as_rgb(img).astype(np.int32)
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    # round(255 * (max - min) / max) half-up, in integers
    s = (510 * (mx - mn) + mx) // np.maximum(2 * mx, 1)
    return s.astype(np.uint8)


def integral(img, squared: bool = False) -> np.ndarray:
    """Summed-area table of shape ``(H+1, W+1)`` with a zero first row/column."""
    a = as_gray(img).astype(np.int64)
    if squared:
        a = a * a
    h, w = a.shape
    table = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(a, axis=0, out=table[1:, 1:])
    np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
    return table


def rect_sum(table: np.ndarray, r: Rect) -> int:
    x, y, w, h = r
    return int(table[y + h, x + w] - table[y, x + w] - table[y + h, x] + table[y, x])


def sobel(img, normalize: bool = False) -> GradientField:
    """3x3 Sobel derivatives with replicated borders.

    Raw responses carry the kernel gain of 8 (a ramp of slope s gives 8*s).
    With ``normalize=True`` the gain is divided out so ``ix``/``iy`` estimate
    the true derivative, which is what the quadratic SSD approximation needs.
    """
    a = as_gray(img)
    h, w = a.shape
    if h < 3 or w < 3:
        raise ImageTooSmall(f"sobel needs at least 3x3 pixels, got {w}x{h}")
    integer = np.issubdtype(a.dtype, np.integer)
    p = np.pad(a.astype(np.int32 if integer else np.float64), 1, mode="edge")
    # [1 2 1] smoothing across, [-1 0 1] difference along
    dx = p[:, 2:] - p[:, :-2]
    dy = p[2:, :] - p[:-2, :]
    ix = dx[:-2] + 2 * dx[1:-1] + dx[2:]
    iy = dy[:, :-2] + 2 * dy[:, 1:-1] + dy[:, 2:]
    if normalize:
        return GradientField(ix / 8.0, iy / 8.0)
    return GradientField(ix, iy)


def crop(img, r: Rect) -> np.ndarray:
    a = np.asarray(img)
    h, w = a.shape[:2]
    if not Rect(*r).inside(w, h):
        raise OutOfBounds(f"crop rect {tuple(r)} exceeds image {w}x{h}")
    x, y, rw, rh = r
    return a[y:y + rh, x:x + rw].copy()


RECT_COLOR = (0, 255, 0)
POINT_COLOR = (255, 0, 0)


def draw_annotations(img, rects: Sequence[Rect] = (), points: Sequence[tuple] = (),
                     arm: int = 3) -> np.ndarray:
    """Copy of ``img`` with rectangle outlines and cross markers drawn on it."""
    out = np.array(as_rgb(img), dtype=np.uint8, copy=True)
    h, w = out.shape[:2]
    for r in rects:
        r = Rect(*(int(v) for v in r))
        if not r.inside(w, h):
            raise OutOfBounds(f"rect {tuple(r)} outside image {w}x{h}")
        out[r.y, r.x:r.x2] = RECT_COLOR
        out[r.y2 - 1, r.x:r.x2] = RECT_COLOR
        out[r.y:r.y2, r.x] = RECT_COLOR
        out[r.y:r.y2, r.x2 - 1] = RECT_COLOR
    for pt in points:
        px, py = (int(v) for v in round_half_up(pt))
        if not (0 <= px < w and 0 <= py < h):
            raise OutOfBounds(f"point ({px}, {py}) outside image {w}x{h}")
        out[py, max(0, px - arm):min(w, px + arm + 1)] = POINT_COLOR
        out[max(0, py - arm):min(h, py + arm + 1), px] = POINT_COLOR
    return out
