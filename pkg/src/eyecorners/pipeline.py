"""End-to-end corner localization: enhancement, detection, sclera, Harris, pruning."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .cascade import (CascadeModel, DetectParams, EyeRoiFractions, bundled_model, detect,
                      detect_eyes, load_cascade_file)
from .clahe import ClaheParams, clahe
from .errors import EyeCornerError
from .harris import CircularWindow, contour_candidates
from .image import Rect, saturation_plane, to_grayscale
from .prune import EyeCorners, prune, to_full_frame
from .sclera import eyelid_contour, largest_component, morph_open, scaled_element, segment_sclera

SIDES = ("left", "right")


def _parse_pair(v, sep="x", typ=int) -> tuple:
    if isinstance(v, str):
        parts = v.lower().replace(",", sep).split(sep)
        if len(parts) != 2:
            raise ValueError(f"expected two values separated by {sep!r}, got {v!r}")
        return typ(parts[0]), typ(parts[1])
    a, b = v
    return typ(a), typ(b)


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt(typ):
    def conv(v):
        if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none")):
            return None
        return typ(v)
    return conv


def _thresh(v):
    if isinstance(v, str) and v.strip().lower() == "auto":
        return "auto"
    t = int(v)
    if not 0 <= t <= 255:
        raise ValueError(f"sclera threshold must lie in [0, 255], got {t}")
    return t


@dataclass
class PipelineConfig:
    clahe_tiles: tuple = (8, 8)  # (x, y)
    clahe_clip: float = 4.0
    no_clahe: bool = False
    face_model: Optional[str] = None  # None: bundled frontal-face model
    eye_model: Optional[str] = None
    scale_factor: float = 1.1
    min_neighbors: int = 3
    min_size: int = 80
    max_size: Optional[int] = None
    eye_min_frac: float = 0.15  # eye window bounds as fractions of the face width
    eye_max_frac: float = 0.40
    eye_pad: float = 0.0        # widen the eye crop by this fraction of its width per side
    sclera_mode: str = "auto"
    sclera_thresh: object = "auto"
    se_scale: float = 1.0       # multiplies the (3, 2)-per-100-px element
    harris_k: float = 0.04
    harris_radius: int = 3
    nms_radius: int = 3
    max_candidates: int = 10
    rel_thresh: float = 0.01
    error_norm: str = "eye-diagonal"
    input: str = "auto"

    _CONVERT = {
        "clahe_tiles": lambda v: _parse_pair(v),
        "clahe_clip": float, "no_clahe": _parse_bool,
        "face_model": _opt(str), "eye_model": _opt(str),
        "scale_factor": float, "min_neighbors": int, "min_size": int, "max_size": _opt(int),
        "eye_min_frac": float, "eye_max_frac": float, "eye_pad": float,
        "sclera_mode": str, "sclera_thresh": _thresh, "se_scale": float,
        "harris_k": float, "harris_radius": int, "nms_radius": int,
        "max_candidates": int, "rel_thresh": float, "error_norm": str, "input": str,
    }

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, self._CONVERT[f.name](getattr(self, f.name)))
        ClaheParams(*self.clahe_tiles, self.clahe_clip)
        DetectParams(self.scale_factor, self.min_neighbors, self.min_size, self.max_size)
        if self.sclera_mode not in ("auto", "color", "gray"):
            raise ValueError(f"sclera_mode must be auto, color or gray, got {self.sclera_mode!r}")
        if not 0.01 <= self.harris_k <= 0.25:
            raise ValueError(f"harris_k must lie in [0.01, 0.25], got {self.harris_k}")
        if self.harris_radius < 1 or self.nms_radius < 0 or self.max_candidates < 1:
            raise ValueError("harris_radius >= 1, nms_radius >= 0 and max_candidates >= 1 required")
        if not 0.0 <= self.rel_thresh <= 1.0:
            raise ValueError(f"rel_thresh must lie in [0, 1], got {self.rel_thresh}")
        if not 0.0 < self.eye_min_frac <= self.eye_max_frac:
            raise ValueError("need 0 < eye_min_frac <= eye_max_frac")
        if self.eye_pad < 0 or self.se_scale <= 0:
            raise ValueError("eye_pad must be >= 0 and se_scale > 0")
        if self.error_norm not in ("eye-diagonal", "pixels"):
            raise ValueError(f"error_norm must be eye-diagonal or pixels, got {self.error_norm!r}")
        if self.input not in ("auto", "frame", "eye"):
            raise ValueError(f"input must be auto, frame or eye, got {self.input!r}")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, d: dict) -> "PipelineConfig":
        known = set(cls.keys())
        bad = sorted(k for k in d if k not in known)
        if bad:
            raise KeyError(f"unknown config keys: {', '.join(bad)}")
        return cls(**d)

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def clahe_params(self) -> ClaheParams:
        return ClaheParams(self.clahe_tiles[0], self.clahe_tiles[1], self.clahe_clip)

    @property
    def face_params(self) -> DetectParams:
        return DetectParams(self.scale_factor, self.min_neighbors, self.min_size, self.max_size)

    def eye_params(self, face_w: int) -> DetectParams:
        return DetectParams(self.scale_factor, self.min_neighbors,
                            int(self.eye_min_frac * face_w), int(np.ceil(self.eye_max_frac * face_w)))

    def window(self) -> CircularWindow:
        return CircularWindow.make(self.harris_radius)

    def models(self) -> tuple[CascadeModel, CascadeModel]:
        face = load_cascade_file(self.face_model) if self.face_model else bundled_model("face")
        eye = load_cascade_file(self.eye_model) if self.eye_model else bundled_model("eye")
        return face, eye


@dataclass
class EyeResult:
    side: str
    rect: Rect
    corners: Optional[EyeCorners] = None
    candidates: list = field(default_factory=list)
    failure: Optional[str] = None


@dataclass
class FrameResult:
    face: Optional[Rect] = None
    eyes: dict = field(default_factory=dict)  # side -> EyeResult
    timings: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    error: Optional[str] = None  # set when the frame could not be processed at all

    @property
    def ok(self) -> bool:
        return any(e.corners is not None and not e.corners.degenerate for e in self.eyes.values())

    def failure(self) -> Optional[str]:
        if self.ok:
            return None
        if self.error:
            return self.error
        if self.face is None and not self.eyes:
            return "no face detected"
        reasons = [f"{s}: {e.failure}" for s, e in sorted(self.eyes.items()) if e.failure]
        return "; ".join(reasons) or "no eyes detected"


@contextmanager
def _timed(timings: dict, name: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def enhance(gray: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    return gray if cfg.no_clahe else clahe(gray, cfg.clahe_params)


def analyze_eye(eye: np.ndarray, eye_enhanced: np.ndarray, side: str, rect: Rect,
                cfg: PipelineConfig, timings: Optional[dict] = None,
                stages: Optional[dict] = None) -> EyeResult:
    """Corners of one eye crop. ``eye`` is the RGB or gray crop, ``eye_enhanced`` its
    enhanced gray counterpart; ``rect`` places the crop in the frame."""
    timings = timings if timings is not None else {}
    res = EyeResult(side, Rect(*rect))
    with _timed(timings, "sclera"):
        raw = segment_sclera(eye, cfg.sclera_mode, cfg.sclera_thresh)
        se = scaled_element(eye.shape[1], base=(3 * cfg.se_scale, 2 * cfg.se_scale))
        opened = largest_component(morph_open(raw, se))
        contour = eyelid_contour(eye_enhanced, opened)
    if stages is not None:
        if eye.ndim == 3:
            stages[f"{side}_saturation"] = saturation_plane(eye)
        stages[f"{side}_raw_mask"] = raw
        stages[f"{side}_opened_mask"] = opened
        stages[f"{side}_contour"] = contour
        overlay = np.array(eye if eye.ndim == 3 else np.repeat(eye[..., None], 3, axis=2))
        overlay[contour != 0] = (255, 0, 0)
        stages[f"{side}_overlay"] = overlay
    if not opened.any():
        res.failure = "empty sclera mask"
        return res
    try:
        with _timed(timings, "harris"):
            res.candidates = contour_candidates(contour, cfg.window(), cfg.harris_k,
                                                cfg.nms_radius, cfg.rel_thresh, cfg.max_candidates)
        with _timed(timings, "prune"):
            c = to_full_frame(prune(res.candidates, side, res.rect))
    except EyeCornerError as e:
        res.failure = str(e) or type(e).__name__
        return res
    if c.degenerate:
        res.failure = "single corner candidate"
    res.corners = c
    return res


def process_eye_crop(img: np.ndarray, side: str, cfg: PipelineConfig = PipelineConfig(),
                     stages: Optional[dict] = None) -> FrameResult:
    """Run the corner stages on an image that is already an eye crop."""
    out = FrameResult(stages=stages if stages is not None else {})
    with _timed(out.timings, "gray"):
        gray = to_grayscale(img) if img.ndim == 3 else img
    with _timed(out.timings, "clahe"):
        enh = enhance(gray, cfg)
    h, w = gray.shape
    out.eyes[side] = analyze_eye(img, enh, side, Rect(0, 0, w, h), cfg, out.timings, stages)
    return out


def _pad_rect(r: Rect, pad: float, w: int, h: int) -> Rect:
    if pad <= 0:
        return r
    dx = int(round(r.w * pad))
    x0, x1 = max(0, r.x - dx), min(w, r.x2 + dx)
    return Rect(x0, r.y, x1 - x0, r.h)


def process_frame(img: np.ndarray, cfg: PipelineConfig = PipelineConfig(),
                  models: Optional[tuple] = None, stages: Optional[dict] = None) -> FrameResult:
    """Face, both eyes and their corners in one frame."""
    face_model, eye_model = models or cfg.models()
    out = FrameResult(stages=stages if stages is not None else {})
    with _timed(out.timings, "gray"):
        gray = to_grayscale(img) if img.ndim == 3 else img
    with _timed(out.timings, "clahe"):
        enh = enhance(gray, cfg)
    h, w = gray.shape
    if w < face_model.window_w or h < face_model.window_h:
        return out
    with _timed(out.timings, "face"):
        faces = detect(enh, face_model, cfg.face_params)
    if not faces:
        return out
    out.face = faces[0]
    with _timed(out.timings, "eyes"):
        left, right = detect_eyes(enh, out.face, eye_model, cfg.eye_params(out.face.w),
                                  EyeRoiFractions())
    for side, r in (("left", left), ("right", right)):
        if r is None:
            continue
        r = _pad_rect(r, cfg.eye_pad, w, h)
        eye = img[r.y:r.y2, r.x:r.x2]
        out.eyes[side] = analyze_eye(eye, enh[r.y:r.y2, r.x:r.x2], side, r, cfg,
                                     out.timings, stages)
    return out
