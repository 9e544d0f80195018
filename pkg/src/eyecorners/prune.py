"""Reduce corner candidates to the final nasal/temporal pair.

The canthi are the two contour points farthest from each other, so the pair of
candidates farthest apart wins. When several pairs share the maximum
distance, every point in a tied pair is split by side and each side is
averaged into one corner.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyCandidates
from .image import Rect

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class EyeCorners:
    nasal: tuple
    temporal: tuple
    eye_side: str
    source_rect: Rect
    degenerate: bool = False
    full_frame: bool = False

    def points(self) -> list[tuple]:
        return [self.nasal, self.temporal]


def _xy(c) -> tuple[int, int]:
    if hasattr(c, "x"):
        return int(c.x), int(c.y)
    x, y = c
    return int(x), int(y)


def farthest_pairs(points: Sequence[tuple]) -> tuple[int, list[tuple[int, int]]]:
    """Maximum squared distance and every index pair attaining it (exact integers)."""
    p = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    n = len(p)
    if n < 2:
        return 0, []
    d = p[:, None, :] - p[None, :, :]
    d2 = (d * d).sum(axis=2)
    iu, ju = np.triu_indices(n, k=1)
    vals = d2[iu, ju]
    best = int(vals.max())
    hit = vals == best
    return best, list(zip(iu[hit].tolist(), ju[hit].tolist()))


def _mean_half_up(pts: list[tuple[int, int]]) -> tuple[int, int]:
    n = len(pts)
    sx = sum(x for x, _ in pts)
    sy = sum(y for _, y in pts)
    return ((2 * sx + n) // (2 * n), (2 * sy + n) // (2 * n))


def _is_temporal_side(pt, ref, eye_side: str) -> bool:
    """Whether ``pt`` lies on the temporal side of ``ref``.

    Subject's right eye (image left): temporal is smaller x; mirrored for the
    left eye. Equal x falls back to smaller y. Comparisons are done on
    doubled/scaled integers by the caller to stay exact.
    """
    (x, y), (rx, ry) = pt, ref
    if x != rx:
        return x < rx if eye_side == RIGHT else x > rx
    return y < ry


def prune(candidates: Iterable, eye_side: str = RIGHT,
          source_rect: Optional[Rect] = None) -> EyeCorners:
    if eye_side not in (LEFT, RIGHT):
        raise ValueError(f"eye_side must be 'left' or 'right', got {eye_side!r}")
    # repeated pixels carry no extra information
    pts = list(dict.fromkeys(_xy(c) for c in candidates))
    if not pts:
        raise EmptyCandidates("no corner candidates to prune")
    rect = Rect(*source_rect) if source_rect is not None else Rect(0, 0, 1, 1)
    if len(pts) == 1:
        return EyeCorners(pts[0], pts[0], eye_side, rect, degenerate=True)

    _, pairs = farthest_pairs(pts)
    if len(pairs) == 1:
        a, b = pts[pairs[0][0]], pts[pairs[0][1]]
        temporal, nasal = (a, b) if _is_temporal_side(a, b, eye_side) else (b, a)
        return EyeCorners(nasal, temporal, eye_side, rect)

    tied = sorted({pts[i] for pair in pairs for i in pair})
    m = len(tied)
    # compare m*pt against the coordinate sum to keep the centroid exact
    sx, sy = sum(x for x, _ in tied), sum(y for _, y in tied)
    ref = (sx, sy)
    temporal_pts = [p for p in tied if _is_temporal_side((m * p[0], m * p[1]), ref, eye_side)]
    nasal_pts = [p for p in tied if p not in temporal_pts]
    return EyeCorners(_mean_half_up(nasal_pts), _mean_half_up(temporal_pts), eye_side, rect)


def to_full_frame(c: EyeCorners) -> EyeCorners:
    if c.full_frame:
        return c
    dx, dy = c.source_rect.x, c.source_rect.y
    return replace(c, nasal=(c.nasal[0] + dx, c.nasal[1] + dy),
                   temporal=(c.temporal[0] + dx, c.temporal[1] + dy), full_frame=True)


def to_local_frame(c: EyeCorners) -> EyeCorners:
    if not c.full_frame:
        return c
    dx, dy = c.source_rect.x, c.source_rect.y
    return replace(c, nasal=(c.nasal[0] - dx, c.nasal[1] - dy),
                   temporal=(c.temporal[0] - dx, c.temporal[1] - dy), full_frame=False)
