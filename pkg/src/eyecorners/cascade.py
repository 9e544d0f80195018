"""Haar-feature cascade detection (Viola-Jones) for faces and eyes.

Models are read from the published XML cascade format, both the old
``opencv-haar-classifier`` layout (``<trees>`` of nodes) and the newer
``opencv-cascade-classifier`` layout (``internalNodes``/``leafValues``).
Multi-scale scanning scales the feature rectangles rather than the image.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ImageTooSmall, OutOfBounds, ParseError, UnsupportedFeature
from .image import Rect, as_gray, integral

GROUP_EPS = 0.2


@dataclass(frozen=True)
class HaarFeature:
    # (x, y, w, h, weight) relative to the model window
    rects: tuple
    tilted: bool = False


@dataclass(frozen=True)
class WeakClassifier:
    """A stump or small tree of Haar-feature tests.

    ``nodes`` holds ``(feature_index, threshold, left, right)``; a child value
    > 0 is a node index, <= 0 is ``-leaf_index``.
    """
    nodes: tuple
    leaves: tuple


@dataclass(frozen=True)
class CascadeStage:
    weak_classifiers: tuple
    stage_threshold: float


@dataclass(frozen=True)
class CascadeModel:
    window_w: int
    window_h: int
    stages: tuple
    features: tuple

    @property
    def n_weak(self) -> int:
        return sum(len(s.weak_classifiers) for s in self.stages)

    @property
    def n_nodes(self) -> int:
        return sum(len(wc.nodes) for s in self.stages for wc in s.weak_classifiers)


@dataclass(frozen=True)
class DetectParams:
    scale_factor: float = 1.1
    min_neighbors: int = 3
    min_size: int = 0
    max_size: Optional[int] = None

    def __post_init__(self):
        if not self.scale_factor > 1.0:
            raise ValueError(f"scale_factor must be > 1, got {self.scale_factor}")
        if self.min_neighbors < 0:
            raise ValueError("min_neighbors must be >= 0")


# ---------------------------------------------------------------------------
# XML parsing


def _floats(text, what, n=None):
    try:
        vals = [float(t) for t in (text or "").split()]
    except ValueError:
        raise ParseError(f"non-numeric {what}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise ParseError(f"{what} expects {n} values, got {len(vals)}")
    return vals


def _child(elem, tag, what=None):
    c = elem.find(tag)
    if c is None:
        raise ParseError(f"missing <{tag}> in {what or elem.tag}")
    return c


def _parse_rects(feat_elem, allow_tilted):
    rects = []
    for r in _child(feat_elem, "rects").findall("_"):
        x, y, w, h, wt = _floats(r.text, "rect", 5)
        rects.append((int(x), int(y), int(w), int(h), wt))
    if not 1 <= len(rects) <= 3:
        raise ParseError(f"feature has {len(rects)} rects, expected 1-3")
    tilted_elem = feat_elem.find("tilted")
    tilted = tilted_elem is not None and int(float(tilted_elem.text)) != 0
    if tilted and not allow_tilted:
        raise UnsupportedFeature("model uses tilted (45 degree) Haar features")
    return HaarFeature(tuple(rects), tilted)


def _parse_new(root, allow_tilted):
    try:
        ww = int(_child(root, "width").text)
        wh = int(_child(root, "height").text)
    except (TypeError, ValueError):
        raise ParseError("bad window size") from None
    ftype = root.find("featureType")
    if ftype is not None and ftype.text.strip().upper() != "HAAR":
        raise UnsupportedFeature(f"feature type {ftype.text.strip()} is not HAAR")
    features = tuple(_parse_rects(f, allow_tilted) for f in _child(root, "features").findall("_"))
    stages = []
    for st in _child(root, "stages").findall("_"):
        thr = _floats(_child(st, "stageThreshold").text, "stageThreshold", 1)[0]
        weak = []
        for wc in _child(st, "weakClassifiers").findall("_"):
            raw = _floats(_child(wc, "internalNodes").text, "internalNodes")
            if not raw or len(raw) % 4:
                raise ParseError("internalNodes must hold groups of 4 values")
            leaves = tuple(_floats(_child(wc, "leafValues").text, "leafValues"))
            nodes = tuple((int(raw[i + 2]), raw[i + 3], int(raw[i]), int(raw[i + 1]))
                          for i in range(0, len(raw), 4))
            weak.append(WeakClassifier(nodes, leaves))
        if not weak:
            raise ParseError("stage without weak classifiers")
        stages.append(CascadeStage(tuple(weak), thr))
    return ww, wh, stages, features


def _parse_old(root, allow_tilted):
    size = _floats(_child(root, "size").text, "size", 2)
    ww, wh = int(size[0]), int(size[1])
    features = []
    stages = []
    for st in _child(root, "stages").findall("_"):
        thr = _floats(_child(st, "stage_threshold").text, "stage_threshold", 1)[0]
        weak = []
        for tree in _child(st, "trees").findall("_"):
            tree_nodes = tree.findall("_")
            if not tree_nodes:
                raise ParseError("empty tree")
            nodes, leaves = [], []
            for node in tree_nodes:
                fi = len(features)
                features.append(_parse_rects(_child(node, "feature"), allow_tilted))
                node_thr = _floats(_child(node, "threshold").text, "threshold", 1)[0]
                children = []
                for side in ("left", "right"):
                    val = node.find(f"{side}_val")
                    if val is not None:
                        leaves.append(_floats(val.text, f"{side}_val", 1)[0])
                        children.append(-(len(leaves) - 1))
                    else:
                        nxt = node.find(f"{side}_node")
                        if nxt is None:
                            raise ParseError(f"node lacks {side}_val/{side}_node")
                        idx = int(nxt.text)
                        if not 0 < idx < len(tree_nodes):
                            raise ParseError(f"bad {side}_node index {idx}")
                        children.append(idx)
                nodes.append((fi, node_thr, children[0], children[1]))
            weak.append(WeakClassifier(tuple(nodes), tuple(leaves)))
        if not weak:
            raise ParseError("stage without trees")
        stages.append(CascadeStage(tuple(weak), thr))
    return ww, wh, stages, tuple(features)


def load_cascade(model_text: bytes | str, allow_tilted: bool = False) -> CascadeModel:
    if isinstance(model_text, str):
        model_text = model_text.encode("utf-8")
    if not model_text or not model_text.strip():
        raise ParseError("empty cascade model")
    try:
        doc = ET.fromstring(model_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    root = doc
    if doc.tag == "opencv_storage":
        kids = list(doc)
        if not kids:
            raise ParseError("opencv_storage holds no cascade")
        root = kids[0]
    if root.find("stageType") is not None or root.find("internalNodes") is not None \
            or root.find("features") is not None:
        ww, wh, stages, features = _parse_new(root, allow_tilted)
    elif root.find("size") is not None:
        ww, wh, stages, features = _parse_old(root, allow_tilted)
    else:
        raise ParseError(f"unrecognized cascade layout under <{root.tag}>")
    if ww < 1 or wh < 1:
        raise ParseError(f"invalid window {ww}x{wh}")
    if not stages:
        raise ParseError("cascade has zero stages")
    for st in stages:
        for wc in st.weak_classifiers:
            for fi, _, left, right in wc.nodes:
                if not 0 <= fi < len(features):
                    raise ParseError(f"feature index {fi} out of range")
                for c in (left, right):
                    if c <= 0 and -c >= len(wc.leaves):
                        raise ParseError(f"leaf index {-c} out of range")
    for f in features:
        for x, y, w, h, _ in f.rects:
            if x < 0 or y < 0 or w < 1 or h < 1 or x + w > ww or y + h > wh:
                raise ParseError(f"feature rect {(x, y, w, h)} outside {ww}x{wh} window")
    return CascadeModel(ww, wh, tuple(stages), features)


def load_cascade_file(path) -> CascadeModel:
    with open(path, "rb") as fh:
        return load_cascade(fh.read())


BUNDLED_MODELS = {
    "face": "haarcascade_frontalface_default.xml",
    "eye": "haarcascade_eye.xml",
}


@lru_cache(maxsize=None)
def bundled_model(kind: str) -> CascadeModel:
    """Pretrained frontal-face (``"face"``) or eye (``"eye"``) cascade."""
    ref = resources.files("eyecorners") / "data" / BUNDLED_MODELS[kind]
    return load_cascade(ref.read_bytes())


# ---------------------------------------------------------------------------
# Flattened model and scaled feature geometry


@dataclass
class FlatCascade:
    rects: np.ndarray        # (F, 3, 4) int64, x y w h in window units
    weights: np.ndarray      # (F, 3) float64
    nrects: np.ndarray       # (F,) int64
    node_feat: np.ndarray
    node_thr: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    wc_node0: np.ndarray     # first node of each weak classifier
    wc_leaf0: np.ndarray     # first leaf of each weak classifier
    leaves: np.ndarray
    stage_wc0: np.ndarray    # (S+1,) weak-classifier offsets per stage
    stage_thr: np.ndarray
    window_w: int
    window_h: int


def flatten(model: CascadeModel) -> FlatCascade:
    if any(f.tilted for f in model.features):
        # tilted models can be loaded for inspection but not evaluated
        raise UnsupportedFeature("evaluation of tilted Haar features is not implemented")
    F = len(model.features)
    rects = np.zeros((F, 3, 4), dtype=np.int64)
    weights = np.zeros((F, 3), dtype=np.float64)
    nrects = np.zeros(F, dtype=np.int64)
    for i, f in enumerate(model.features):
        nrects[i] = len(f.rects)
        for k, (x, y, w, h, wt) in enumerate(f.rects):
            rects[i, k] = (x, y, w, h)
            weights[i, k] = wt
    nf, nt, nl, nr, n0, l0, lv, s0, sth = [], [], [], [], [], [], [], [0], []
    for st in model.stages:
        for wc in st.weak_classifiers:
            n0.append(len(nf))
            l0.append(len(lv))
            for fi, thr, left, right in wc.nodes:
                nf.append(fi)
                nt.append(thr)
                nl.append(left)
                nr.append(right)
            lv.extend(wc.leaves)
        s0.append(len(n0))
        sth.append(st.stage_threshold)
    i64 = lambda v: np.asarray(v, dtype=np.int64)
    f64 = lambda v: np.asarray(v, dtype=np.float64)
    return FlatCascade(rects, weights, nrects, i64(nf), f64(nt), i64(nl), i64(nr),
                       i64(n0), i64(l0), f64(lv), i64(s0), f64(sth),
                       model.window_w, model.window_h)


_flat_cache: dict = {}


def flat_model(model: CascadeModel) -> FlatCascade:
    key = id(model)
    hit = _flat_cache.get(key)
    if hit is None or hit[0] is not model:
        hit = (model, flatten(model))
        _flat_cache[key] = hit
    return hit[1]


def _rnd(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass
class ScaledCascade:
    """Feature rectangles and weights for one detection-window scale."""
    scale: float
    win_w: int
    win_h: int
    rects: np.ndarray
    weights: np.ndarray
    norm_rect: np.ndarray    # x, y, w, h of the variance-normalization area
    flat: FlatCascade = field(repr=False)


def scale_cascade(flat: FlatCascade, scale: float) -> ScaledCascade:
    """Round feature rects to the scaled window and rebalance the weights.

    The first rectangle's weight is recomputed from the scaled areas so each
    feature still sums to zero over a constant patch.
    """
    used = np.arange(3)[None, :] < flat.nrects[:, None]
    rects = np.floor(flat.rects * scale + 0.5).astype(np.int64)
    win_w, win_h = _rnd(flat.window_w * scale), _rnd(flat.window_h * scale)
    # half-up rounding can push a rect one pixel past the window; clip it back
    rects[..., 0] = np.minimum(rects[..., 0], win_w - 1)
    rects[..., 1] = np.minimum(rects[..., 1], win_h - 1)
    rects[..., 2] = np.clip(rects[..., 2], 1, win_w - rects[..., 0])
    rects[..., 3] = np.clip(rects[..., 3], 1, win_h - rects[..., 1])
    rects[~used] = 0
    weights = np.where(used, flat.weights, 0.0)
    areas = (rects[..., 2] * rects[..., 3]).astype(np.float64)
    multi = flat.nrects >= 2
    rest = weights[:, 1] * areas[:, 1] + weights[:, 2] * areas[:, 2]
    weights[multi, 0] = -rest[multi] / areas[multi, 0]
    off = _rnd(scale)
    nw = max(1, _rnd((flat.window_w - 2) * scale))
    nh = max(1, _rnd((flat.window_h - 2) * scale))
    nw, nh = min(nw, win_w - off), min(nh, win_h - off)
    norm = np.array([off, off, nw, nh], dtype=np.int64)
    return ScaledCascade(scale, win_w, win_h, rects, weights, norm, flat)


# ---------------------------------------------------------------------------
# Window evaluation
#
# The kernel works on the flattened integral image: every node carries the
# four corner offsets of each of its rectangles relative to the window origin,
# so a rectangle sum is ii[b + o0] - ii[b + o1] - ii[b + o2] + ii[b + o3].


@dataclass
class ScanPlan:
    """A scaled cascade bound to one integral-image row stride."""
    scaled: ScaledCascade
    stride: int
    node_off: np.ndarray     # (N, 3, 4) int64
    node_w: np.ndarray       # (N, 3) float64
    node_nr: np.ndarray      # (N,) int64
    norm_off: np.ndarray     # (4,) int64
    norm_area: int
    stumps: bool = False


def _corner_offsets(rects: np.ndarray, stride: int) -> np.ndarray:
    x, y, w, h = (rects[..., k] for k in range(4))
    return np.stack([y * stride + x,
                     y * stride + x + w,
                     (y + h) * stride + x,
                     (y + h) * stride + x + w], axis=-1).astype(np.int64)


def make_plan(sc: ScaledCascade, stride: int) -> ScanPlan:
    f = sc.flat
    # every weak classifier a single node whose children are leaves 0 and 1
    stumps = (len(f.node_feat) == len(f.wc_node0)
              and bool(np.all(f.node_left == 0)) and bool(np.all(f.node_right == -1)))
    return ScanPlan(sc, stride,
                    _corner_offsets(sc.rects[f.node_feat], stride),
                    np.ascontiguousarray(sc.weights[f.node_feat]),
                    np.ascontiguousarray(f.nrects[f.node_feat]),
                    _corner_offsets(sc.norm_rect, stride),
                    int(sc.norm_rect[2] * sc.norm_rect[3]),
                    stumps)


_plan_cache: dict = {}


def cached_plan(model: CascadeModel, scale: float, stride: int) -> ScanPlan:
    key = (id(model), scale, stride)
    hit = _plan_cache.get(key)
    if hit is None or hit[0] is not model:
        if len(_plan_cache) > 512:
            _plan_cache.clear()
        hit = (model, make_plan(scale_cascade(flat_model(model), scale), stride))
        _plan_cache[key] = hit
    return hit[1]


@njit(cache=True, inline="always")
def _box(ii, b, off, n, k):
    return ii[b + off[n, k, 0]] - ii[b + off[n, k, 1]] - ii[b + off[n, k, 2]] + ii[b + off[n, k, 3]]


@njit(cache=True)
def _eval_window(ii, sq, b, norm_off, norm_area, node_off, node_w, node_nr, node_thr,
                 node_left, node_right, wc_node0, wc_leaf0, leaves, stage_wc0, stage_thr):
    s = ii[b + norm_off[0]] - ii[b + norm_off[1]] - ii[b + norm_off[2]] + ii[b + norm_off[3]]
    s2 = sq[b + norm_off[0]] - sq[b + norm_off[1]] - sq[b + norm_off[2]] + sq[b + norm_off[3]]
    var = norm_area * s2 - s * s
    if var <= 0:
        return False
    nf = math.sqrt(float(var))
    for si in range(stage_thr.shape[0]):
        total = 0.0
        for wc in range(stage_wc0[si], stage_wc0[si + 1]):
            base = wc_node0[wc]
            idx = 0
            while True:
                n = base + idx
                val = 0.0
                for k in range(node_nr[n]):
                    val += node_w[n, k] * float(_box(ii, b, node_off, n, k))
                if val < node_thr[n] * nf:
                    idx = node_left[n]
                else:
                    idx = node_right[n]
                if idx <= 0:
                    break
            total += leaves[wc_leaf0[wc] - idx]
        if total < stage_thr[si]:
            return False
    return True


@njit(cache=True)
def _scan(ii, sq, stride, height, width, win_w, win_h, step, norm_off, norm_area,
          node_off, node_w, node_nr, node_thr, node_left, node_right,
          wc_node0, wc_leaf0, leaves, stage_wc0, stage_thr):
    ny = (height - win_h) // step + 1
    nx = (width - win_w) // step + 1
    hits = np.empty((max(ny * nx, 0), 2), dtype=np.int64)
    n = 0
    for j in range(ny):
        y = j * step
        for i in range(nx):
            x = i * step
            if _eval_window(ii, sq, y * stride + x, norm_off, norm_area, node_off, node_w,
                            node_nr, node_thr, node_left, node_right, wc_node0,
                            wc_leaf0, leaves, stage_wc0, stage_thr):
                hits[n, 0] = x
                hits[n, 1] = y
                n += 1
    return hits[:n]


@njit(cache=True)
def _scan_stumps(ii, sq, stride, height, width, win_w, win_h, step, norm_off, norm_area,
                 node_off, node_w, node_nr, node_thr, node_left, node_right,
                 wc_node0, wc_leaf0, leaves, stage_wc0, stage_thr):
    # Same arithmetic as _eval_window, specialised to depth-1 trees. Windows of
    # one row move through the stages together; survivors are compacted after
    # each stage so the inner loops run branch-free over independent windows.
    ny = (height - win_h) // step + 1
    nx = (width - win_w) // step + 1
    hits = np.empty((max(ny * nx, 0), 2), dtype=np.int64)
    if nx <= 0 or ny <= 0:
        return hits
    n_hits = 0
    n_stages = stage_thr.shape[0]
    n0, n1, n2, n3 = norm_off[0], norm_off[1], norm_off[2], norm_off[3]
    base = np.empty(nx, dtype=np.int64)
    nf = np.empty(nx, dtype=np.float64)
    xs = np.empty(nx, dtype=np.int64)
    total = np.empty(nx, dtype=np.float64)
    for j in range(ny):
        y = j * step
        m = 0
        for i in range(nx):
            b = y * stride + i * step
            s = np.int64(ii[b + n0] - ii[b + n1] - ii[b + n2] + ii[b + n3])
            s2 = sq[b + n0] - sq[b + n1] - sq[b + n2] + sq[b + n3]
            var = norm_area * s2 - s * s
            if var > 0:
                base[m] = b
                nf[m] = math.sqrt(float(var))
                xs[m] = i * step
                m += 1
        for si in range(n_stages):
            if m == 0:
                break
            total[:m] = 0.0
            for n in range(stage_wc0[si], stage_wc0[si + 1]):
                o00, o01, o02, o03 = node_off[n, 0, 0], node_off[n, 0, 1], node_off[n, 0, 2], node_off[n, 0, 3]
                o10, o11, o12, o13 = node_off[n, 1, 0], node_off[n, 1, 1], node_off[n, 1, 2], node_off[n, 1, 3]
                w0, w1 = node_w[n, 0], node_w[n, 1]
                thr = node_thr[n]
                lo = leaves[wc_leaf0[n]]
                hi = leaves[wc_leaf0[n] + 1]
                if node_nr[n] > 2:
                    o20, o21, o22, o23 = node_off[n, 2, 0], node_off[n, 2, 1], node_off[n, 2, 2], node_off[n, 2, 3]
                    w2 = node_w[n, 2]
                    for k in range(m):
                        b = base[k]
                        val = w0 * float(ii[b + o00] - ii[b + o01] - ii[b + o02] + ii[b + o03])
                        val += w1 * float(ii[b + o10] - ii[b + o11] - ii[b + o12] + ii[b + o13])
                        val += w2 * float(ii[b + o20] - ii[b + o21] - ii[b + o22] + ii[b + o23])
                        total[k] += lo if val < thr * nf[k] else hi
                elif node_nr[n] > 1:
                    for k in range(m):
                        b = base[k]
                        val = w0 * float(ii[b + o00] - ii[b + o01] - ii[b + o02] + ii[b + o03])
                        val += w1 * float(ii[b + o10] - ii[b + o11] - ii[b + o12] + ii[b + o13])
                        total[k] += lo if val < thr * nf[k] else hi
                else:
                    for k in range(m):
                        b = base[k]
                        val = w0 * float(ii[b + o00] - ii[b + o01] - ii[b + o02] + ii[b + o03])
                        total[k] += lo if val < thr * nf[k] else hi
            keep = 0
            st = stage_thr[si]
            for k in range(m):
                if total[k] >= st:
                    base[keep] = base[k]
                    nf[keep] = nf[k]
                    xs[keep] = xs[k]
                    keep += 1
            m = keep
        for k in range(m):
            hits[n_hits, 0] = xs[k]
            hits[n_hits, 1] = y
            n_hits += 1
    return hits[:n_hits]


def _plan_args(plan: ScanPlan):
    f = plan.scaled.flat
    return (plan.norm_off, plan.norm_area, plan.node_off, plan.node_w, plan.node_nr,
            f.node_thr, f.node_left, f.node_right, f.wc_node0, f.wc_leaf0, f.leaves,
            f.stage_wc0, f.stage_thr)


def evaluate_window(ii: np.ndarray, sq: np.ndarray, sc: ScaledCascade, x: int, y: int) -> bool:
    """Run every stage on the window at ``(x, y)``; True iff all stages pass."""
    H, W = ii.shape[0] - 1, ii.shape[1] - 1
    if x < 0 or y < 0 or x + sc.win_w > W or y + sc.win_h > H:
        raise OutOfBounds(f"window at ({x}, {y}) size {sc.win_w}x{sc.win_h} exceeds {W}x{H}")
    plan = make_plan(sc, ii.shape[1])
    return bool(_eval_window(ii.ravel(), sq.ravel(), y * plan.stride + x, *_plan_args(plan)))


# ---------------------------------------------------------------------------
# Multi-scale detection and grouping


def scan_scales(model: CascadeModel, width: int, height: int, p: DetectParams):
    """Scales whose window fits the image and respects min/max size."""
    flat = flat_model(model)
    out = []
    scale = 1.0
    while True:
        ww, wh = _rnd(flat.window_w * scale), _rnd(flat.window_h * scale)
        if ww > width or wh > height:
            break
        if p.max_size is not None and min(ww, wh) > p.max_size:
            break
        if min(ww, wh) >= p.min_size:
            out.append(scale)
        scale *= p.scale_factor
    return out


def window_step(scale: float) -> int:
    return max(2, _rnd(scale))


@njit(cache=True)
def _scan_tables(a):
    """Flattened sum (int32) and squared-sum (int64) tables in one pass."""
    h, w = a.shape
    stride = w + 1
    ii = np.zeros((h + 1) * stride, dtype=np.int32)
    sq = np.zeros((h + 1) * stride, dtype=np.int64)
    for y in range(h):
        rs = 0
        rs2 = 0
        row = (y + 1) * stride
        prev = y * stride
        for x in range(w):
            v = np.int64(a[y, x])
            rs += v
            rs2 += v * v
            ii[row + x + 1] = ii[prev + x + 1] + rs
            sq[row + x + 1] = sq[prev + x + 1] + rs2
    return ii, sq


def raw_hits(img, model: CascadeModel, p: DetectParams) -> list[Rect]:
    a = as_gray(img)
    h, w = a.shape
    if a.size > (2**31 - 1) // 255:
        iif, sqf = integral(a).ravel(), integral(a, squared=True).ravel()
    else:
        iif, sqf = _scan_tables(np.ascontiguousarray(a, dtype=np.uint8))
    stride = w + 1
    hits = []
    for scale in scan_scales(model, w, h, p):
        plan = cached_plan(model, scale, stride)
        sc = plan.scaled
        kernel = _scan_stumps if plan.stumps else _scan
        found = kernel(iif, sqf, stride, h, w, sc.win_w, sc.win_h, window_step(scale),
                       *_plan_args(plan))
        hits.extend(Rect(int(x), int(y), sc.win_w, sc.win_h) for x, y in found)
    return hits


def _similar(a: Rect, b: Rect, eps: float) -> bool:
    delta = eps * (min(a.w, b.w) + min(a.h, b.h)) * 0.5
    return (abs(a.x - b.x) <= delta and abs(a.y - b.y) <= delta
            and abs(a.x2 - b.x2) <= delta and abs(a.y2 - b.y2) <= delta)


def group_rects(rects: list[Rect], min_neighbors: int, eps: float = GROUP_EPS,
                bounds: Optional[tuple] = None) -> list[tuple[Rect, int]]:
    """Cluster similar rectangles; returns ``(mean_rect, support)`` pairs.

    Clusters are the connected components of the pairwise similarity graph.
    Only clusters with at least ``min_neighbors`` members survive, ordered by
    support (descending) then position.
    """
    rects = sorted(rects)
    n = len(rects)
    if n == 0:
        return []
    r = np.asarray(rects, dtype=np.float64)
    x1, y1, w, h = r.T
    x2, y2 = x1 + w, y1 + h
    delta = eps * (np.minimum.outer(w, w) + np.minimum.outer(h, h)) * 0.5
    adj = ((np.abs(np.subtract.outer(x1, x1)) <= delta) & (np.abs(np.subtract.outer(y1, y1)) <= delta)
           & (np.abs(np.subtract.outer(x2, x2)) <= delta) & (np.abs(np.subtract.outer(y2, y2)) <= delta))
    _, labels = connected_components(csr_matrix(adj), directed=False)
    clusters: dict[int, list[Rect]] = {}
    for i in range(n):
        clusters.setdefault(int(labels[i]), []).append(rects[i])
    out = []
    for members in clusters.values():
        if len(members) < max(1, min_neighbors):
            continue
        m = len(members)
        # half-up rounding of the per-coordinate mean, in integers
        mean = [(2 * sum(r[k] for r in members) + m) // (2 * m) for k in range(4)]
        x, y, w, h = mean
        if bounds is not None:
            W, H = bounds
            x, y = min(max(x, 0), W - 1), min(max(y, 0), H - 1)
            w, h = min(w, W - x), min(h, H - y)
        out.append((Rect(x, y, w, h), m))
    out.sort(key=lambda t: (-t[1], t[0].y, t[0].x, t[0].h, t[0].w))
    return out


def detect(img, model: CascadeModel, p: DetectParams = DetectParams(),
           with_support: bool = False):
    """Multi-scale cascade scan; grouped detections, strongest cluster first."""
    a = as_gray(img)
    h, w = a.shape
    if w < model.window_w or h < model.window_h:
        raise ImageTooSmall(f"{w}x{h} image is smaller than the {model.window_w}x{model.window_h} model window")
    grouped = group_rects(raw_hits(a, model, p), p.min_neighbors, bounds=(w, h))
    if with_support:
        return grouped
    return [r for r, _ in grouped]


# ---------------------------------------------------------------------------
# Eye search inside the face


@dataclass(frozen=True)
class EyeRoiFractions:
    x_split: float = 0.5
    y_top: float = 0.20
    y_bottom: float = 0.55


def _clamped_span(origin: int, extent: int, f0: float, f1: float) -> tuple[int, int]:
    a = _rnd(f0 * extent)
    b = _rnd(f1 * extent)
    a = min(max(a, 0), extent - 1)
    b = min(max(b, a + 1), extent)
    return origin + a, b - a


def eye_rois(face: Rect, fr: EyeRoiFractions = EyeRoiFractions()) -> tuple[Rect, Rect]:
    """``(left, right)`` search regions for the subject's left and right eye.

    The subject's left eye appears on the image right.
    """
    face = Rect(*face)
    y, h = _clamped_span(face.y, face.h, fr.y_top, fr.y_bottom)
    lx, lw = _clamped_span(face.x, face.w, fr.x_split, 1.0)
    rx, rw = _clamped_span(face.x, face.w, 0.0, fr.x_split)
    return Rect(lx, y, lw, h), Rect(rx, y, rw, h)


def detect_eyes(img, face: Rect, eye_model: CascadeModel, p: DetectParams = DetectParams(),
                fr: EyeRoiFractions = EyeRoiFractions()) -> tuple[Optional[Rect], Optional[Rect]]:
    """Best eye detection in each half of the face, in full-frame coordinates."""
    a = as_gray(img)
    face = Rect(*face)
    if not face.inside(a.shape[1], a.shape[0]):
        raise OutOfBounds(f"face {tuple(face)} outside image")
    found = []
    for roi in eye_rois(face, fr):
        if roi.w < eye_model.window_w or roi.h < eye_model.window_h:
            found.append(None)
            continue
        sub = a[roi.y:roi.y2, roi.x:roi.x2]
        hits = detect(sub, eye_model, p)
        found.append(hits[0].translate(roi.x, roi.y) if hits else None)
    return found[0], found[1]
