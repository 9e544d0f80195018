"""Slow, direct reference implementations used as test oracles.

Nothing here calls into the library. Each routine is written straight from
the definition of the quantity it computes: direct pixel sums, Python
integers and Fractions, coordinate sets, breadth-first search.
"""

import math
from collections import deque
from fractions import Fraction
from itertools import combinations

import numpy as np


def naive_sum(img, x, y, w, h) -> int:
    """Direct sum of the pixels in a rectangle (no summed-area table)."""
    return int(np.asarray(img)[y:y + h, x:x + w].astype(np.int64).sum())


# --- histogram equalization ------------------------------------------------

def _half_up(q: Fraction) -> int:
    return math.floor(q + Fraction(1, 2))


def ahe_reference(img, tiles_x, tiles_y):
    """Plain (unclipped) adaptive histogram equalization with bilinear blending.

    Tile ``k`` along an axis of length ``L`` spans ``[k*L//n, (k+1)*L//n)`` and
    its center sits at the midpoint of its first and last pixel. Pixels beyond
    the outermost centers use the nearest tile. All arithmetic is exact.
    """
    img = np.asarray(img)
    H, W = img.shape
    ybounds = [k * H // tiles_y for k in range(tiles_y + 1)]
    xbounds = [k * W // tiles_x for k in range(tiles_x + 1)]

    luts = {}
    for ty in range(tiles_y):
        for tx in range(tiles_x):
            counts = [0] * 256
            for r in range(ybounds[ty], ybounds[ty + 1]):
                for c in range(xbounds[tx], xbounds[tx + 1]):
                    counts[int(img[r, c])] += 1
            cdf, run = [], 0
            for v in counts:
                run += v
                cdf.append(run)
            first = next(i for i, v in enumerate(counts) if v)
            span = cdf[-1] - cdf[first]
            if span == 0:
                luts[ty, tx] = list(range(256))
            else:
                luts[ty, tx] = [min(255, max(0, _half_up(Fraction((cdf[i] - cdf[first]) * 255, span))))
                                for i in range(256)]

    def axis(pos, bounds):
        centers = [Fraction(bounds[k] + bounds[k + 1] - 1, 2) for k in range(len(bounds) - 1)]
        if pos <= centers[0]:
            return 0, 0, Fraction(0)
        if pos >= centers[-1]:
            n = len(centers) - 1
            return n, n, Fraction(0)
        k = max(i for i, c in enumerate(centers) if c <= pos)
        if centers[k] == pos:
            return k, k, Fraction(0)
        return k, k + 1, (pos - centers[k]) / (centers[k + 1] - centers[k])

    out = np.zeros_like(img)
    for r in range(H):
        i0, i1, fy = axis(r, ybounds)
        for c in range(W):
            j0, j1, fx = axis(c, xbounds)
            v = int(img[r, c])
            top = (1 - fx) * luts[i0, j0][v] + fx * luts[i0, j1][v]
            bot = (1 - fx) * luts[i1, j0][v] + fx * luts[i1, j1][v]
            out[r, c] = _half_up((1 - fy) * top + fy * bot)
    return out


# --- cascade window decision -----------------------------------------------

def _rnd(v):
    return int(math.floor(v + 0.5))


def naive_window_decision(img, model, scale, x, y) -> bool:
    """Evaluate every stage of ``model`` on one window by summing pixels directly.

    Scaled rectangles are rounded half-up and then clipped to the window.
    """
    img = np.asarray(img)
    W, H = model.window_w, model.window_h
    win_w, win_h = _rnd(W * scale), _rnd(H * scale)
    off = _rnd(scale)
    nw = min(max(1, _rnd((W - 2) * scale)), win_w - off)
    nh = min(max(1, _rnd((H - 2) * scale)), win_h - off)
    s = naive_sum(img, x + off, y + off, nw, nh)
    patch = img[y + off:y + off + nh, x + off:x + off + nw].astype(np.int64)
    s2 = int((patch * patch).sum())
    var = nw * nh * s2 - s * s
    if var <= 0:
        return False
    nf = math.sqrt(float(var))

    def feature_value(fi):
        rects = []
        for rx, ry, rw, rh, wt in model.features[fi].rects:
            sx, sy = min(_rnd(rx * scale), win_w - 1), min(_rnd(ry * scale), win_h - 1)
            sw = min(max(1, _rnd(rw * scale)), win_w - sx)
            sh = min(max(1, _rnd(rh * scale)), win_h - sy)
            sr = (sx, sy, sw, sh)
            rects.append((sr, float(wt)))
        if len(rects) >= 2:
            areas = [r[2] * r[3] for r, _ in rects]
            rest = 0.0
            for k in range(1, len(rects)):
                rest += rects[k][1] * areas[k]
            rects[0] = (rects[0][0], -rest / areas[0])
        val = 0.0
        for (rx, ry, rw, rh), wt in rects:
            val += wt * float(naive_sum(img, x + rx, y + ry, rw, rh))
        return val

    for stage in model.stages:
        total = 0.0
        for wc in stage.weak_classifiers:
            idx = 0
            while True:
                fi, thr, left, right = wc.nodes[idx]
                idx = left if feature_value(fi) < thr * nf else right
                if idx <= 0:
                    break
            total += wc.leaves[-idx]
        if total < stage.stage_threshold:
            return False
    return True


# --- binary morphology -----------------------------------------------------

def ellipse_offsets(a, b):
    out = set()
    for v in range(-b, b + 1):
        for u in range(-a, a + 1):
            if Fraction(u * u, a * a) + Fraction(v * v, b * b) <= 1:
                out.add((u, v))
    return out


def erode_set(pixels, shape, offsets):
    H, W = shape
    return {(x, y) for y in range(H) for x in range(W)
            if all((x + u, y + v) in pixels for u, v in offsets)}


def dilate_set(pixels, shape, offsets):
    H, W = shape
    return {(x + u, y + v) for x, y in pixels for u, v in offsets
            if 0 <= x + u < W and 0 <= y + v < H}


def mask_to_set(m):
    ys, xs = np.nonzero(np.asarray(m))
    return set(zip(xs.tolist(), ys.tolist()))


def set_to_mask(s, shape):
    m = np.zeros(shape, dtype=bool)
    for x, y in s:
        m[y, x] = True
    return m


def flood_fill_largest(m):
    """Largest 8-connected component by BFS, seeded in row-major order."""
    m = np.asarray(m, dtype=bool)
    H, W = m.shape
    seen = np.zeros_like(m)
    best = []
    for y in range(H):
        for x in range(W):
            if not m[y, x] or seen[y, x]:
                continue
            comp, q = [], deque([(y, x)])
            seen[y, x] = True
            while q:
                cy, cx = q.popleft()
                comp.append((cy, cx))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < H and 0 <= nx < W and m[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            q.append((ny, nx))
            if len(comp) > len(best):
                best = comp
    out = np.zeros_like(m)
    for y, x in best:
        out[y, x] = True
    return out


# --- Harris ----------------------------------------------------------------

def harris_double_loop(ix, iy, kernel):
    """Windowed gradient products with clamped (replicated) borders."""
    H, W = ix.shape
    r = kernel.shape[0] // 2
    a = np.zeros((H, W))
    b = np.zeros((H, W))
    c = np.zeros((H, W))
    for y in range(H):
        for x in range(W):
            sa = sb = sc = 0.0
            for v in range(-r, r + 1):
                for u in range(-r, r + 1):
                    w = kernel[v + r, u + r]
                    if w == 0:
                        continue
                    yy = min(max(y + v, 0), H - 1)
                    xx = min(max(x + u, 0), W - 1)
                    gx, gy = float(ix[yy, xx]), float(iy[yy, xx])
                    sa += w * gx * gx
                    sb += w * gx * gy
                    sc += w * gy * gy
            a[y, x], b[y, x], c[y, x] = sa, sb, sc
    return a, b, c


# --- farthest pair and the mean-on-tie rule --------------------------------

def brute_force_farthest(points):
    """(max squared distance, sorted list of index pairs attaining it)."""
    best, pairs = -1, []
    for (i, p), (j, q) in combinations(enumerate(points), 2):
        d = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        if d > best:
            best, pairs = d, [(i, j)]
        elif d == best:
            pairs.append((i, j))
    return best, pairs


def expected_corners(points, eye_side):
    """(nasal, temporal) from first principles; None for a single point."""
    points = [(int(x), int(y)) for x, y in points]
    if len(points) == 1:
        return points[0], points[0]

    def temporal_first(p, q):
        # is p temporal relative to q?
        if p[0] != q[0]:
            return p[0] < q[0] if eye_side == "right" else p[0] > q[0]
        return p[1] < q[1]

    _, pairs = brute_force_farthest(points)
    if len(pairs) == 1:
        p, q = points[pairs[0][0]], points[pairs[0][1]]
        return (q, p) if temporal_first(p, q) else (p, q)
    tied = sorted({points[k] for pr in pairs for k in pr})
    cx = Fraction(sum(p[0] for p in tied), len(tied))
    cy = Fraction(sum(p[1] for p in tied), len(tied))
    temporal = [p for p in tied if temporal_first(p, (cx, cy))]
    nasal = [p for p in tied if p not in temporal]

    def mean(pts):
        n = len(pts)
        return (_half_up(Fraction(sum(p[0] for p in pts), n)),
                _half_up(Fraction(sum(p[1] for p in pts), n)))
    return mean(nasal), mean(temporal)
