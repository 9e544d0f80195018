"""Ground-truth annotations, the normalized corner error, and batch benchmarking."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import BoundsError, EyeCornerError, NoPairs, ParseError
from .image import Rect

HEADER = ["image_id", "eye", "nasal_x", "nasal_y", "temporal_x", "temporal_y"]
FACE_COLUMNS = ["face_x", "face_y", "face_w", "face_h"]
IMAGE_EXTENSIONS = (".png", ".pgm", ".ppm", ".pnm")


@dataclass(frozen=True)
class EyeTruth:
    nasal: tuple
    temporal: tuple


@dataclass
class Annotation:
    image_id: str
    eyes: dict  # side -> EyeTruth
    face: Optional[Rect] = None
    eye_rects: Optional[dict] = None  # side -> Rect of a planted eye region, when known

    def check_bounds(self, width: int, height: int):
        for side, t in sorted(self.eyes.items()):
            for name, (x, y) in (("nasal", t.nasal), ("temporal", t.temporal)):
                if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
                    raise BoundsError(f"image {self.image_id!r}: {side} {name} corner "
                                      f"({x}, {y}) outside {width}x{height}")


def _num(text: str, line: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{col} is not a number: {text!r}", line) from None
    if not np.isfinite(v):
        raise ParseError(f"{col} is not finite: {text!r}", line)
    return int(v) if v.is_integer() else v


def load_annotations(path, image_sizes: Optional[dict] = None) -> list[Annotation]:
    """Parse the per-eye corner CSV into one Annotation per image.

    ``image_sizes`` maps image_id to ``(width, height)``; listed images get
    their coordinates checked against those bounds. Order follows the first
    appearance of each image_id.
    """
    out: dict[str, Annotation] = {}
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None:
            raise ParseError("missing header", 1)
        header = [h.strip() for h in header]
        if header not in (HEADER, HEADER + FACE_COLUMNS):
            raise ParseError(f"unexpected header {','.join(header)}", 1)
        arity = len(header)
        for line, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != arity:
                raise ParseError(f"expected {arity} fields, got {len(row)}", line)
            row = [c.strip() for c in row]
            image_id, eye = row[0], row[1]
            if not image_id:
                raise ParseError("empty image_id", line)
            if eye not in ("left", "right"):
                raise ParseError(f"eye must be left or right, got {eye!r}", line)
            v = [_num(t, line, c) for t, c in zip(row[2:6], HEADER[2:])]
            if min(v) < 0:
                raise BoundsError(f"image {image_id!r}: negative coordinate on line {line}")
            ann = out.setdefault(image_id, Annotation(image_id, {}))
            if eye in ann.eyes:
                raise ParseError(f"duplicate {eye} eye for image {image_id!r}", line)
            ann.eyes[eye] = EyeTruth((v[0], v[1]), (v[2], v[3]))
            if arity > len(HEADER) and any(row[6:]):
                ann.face = Rect(*(int(_num(t, line, c)) for t, c in zip(row[6:], FACE_COLUMNS)))
    anns = list(out.values())
    for a in anns:
        if image_sizes and a.image_id in image_sizes:
            a.check_bounds(*image_sizes[a.image_id])
    return anns


def _fmt(v) -> str:
    s = f"{float(v):.4f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def write_annotations(path, annotations: Sequence[Annotation], with_face: bool = False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER + (FACE_COLUMNS if with_face else []))
        for a in annotations:
            for side in ("right", "left"):
                if side not in a.eyes:
                    continue
                t = a.eyes[side]
                row = [a.image_id, side, *map(_fmt, (*t.nasal, *t.temporal))]
                if with_face:
                    row += [str(v) for v in a.face] if a.face is not None else [""] * 4
                w.writerow(row)


def eye_box_diagonal2(truth) -> float:
    """Squared diagonal of the true corners' bounding box, grown by 10% per side."""
    (x1, y1), (x2, y2) = truth
    w, h = abs(x1 - x2), abs(y1 - y2)
    m = 0.1 * max(w, h)
    d2 = (w + 2 * m) ** 2 + (h + 2 * m) ** 2
    if d2 <= 0:
        raise ValueError("true corners coincide; eye box is empty")
    return float(d2)


def _sq(a, b) -> float:
    return float((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


def corner_errors(detected, truth, norm: str = "eye-diagonal") -> list[float]:
    """Per-corner error ``[nasal, temporal]``; a miss scores 1 when normalized."""
    if detected is None:
        return [1.0, 1.0] if norm == "eye-diagonal" else [float("nan")] * 2
    e = [_sq(detected[0], truth[0]), _sq(detected[1], truth[1])]
    if norm == "eye-diagonal":
        d2 = eye_box_diagonal2(truth)
        return [v / d2 for v in e]
    return e


def percent_error(detections: Sequence, truths: Sequence, norm: str = "eye-diagonal") -> float:
    """Mean corner error over all eyes.

    Each element is a ``(nasal, temporal)`` pair (or None for a missed eye).
    With ``norm="eye-diagonal"`` every corner's squared error is divided by the
    squared eye-box diagonal and the mean is reported in percent, misses
    counting as 1. With ``norm="pixels"`` the plain mean squared pixel error
    over detected corners is returned.
    """
    if len(detections) != len(truths):
        raise ValueError(f"{len(detections)} detections for {len(truths)} truths")
    if not truths:
        raise NoPairs("no detection/truth pairs to score")
    if norm not in ("eye-diagonal", "pixels"):
        raise ValueError(f"unknown error normalization {norm!r}")
    errs = [e for d, t in zip(detections, truths) for e in corner_errors(d, t, norm)]
    if norm == "pixels":
        errs = [e for e in errs if not np.isnan(e)]
        if not errs:
            raise NoPairs("every eye was missed")
        return float(np.mean(errs))
    return 100.0 * float(np.mean(errs))


@dataclass
class EvalReport:
    per_image: list = field(default_factory=list)
    percent_error: Optional[float] = None
    failures: int = 0
    frames: int = 0
    wall_time: float = 0.0
    error_norm: str = "eye-diagonal"

    @property
    def fps(self) -> float:
        return self.frames / self.wall_time if self.wall_time > 0 else 0.0

    def to_dict(self) -> dict:
        return {"per_image": self.per_image, "percent_error": self.percent_error,
                "fps": self.fps, "failures": self.failures, "frames": self.frames,
                "wall_time": self.wall_time, "error_norm": self.error_norm}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def resolve_image(image_dir, image_id: str) -> Path:
    """Path for ``image_id`` in ``image_dir``: the id itself, else id plus a known extension."""
    base = Path(image_dir) / image_id
    if base.is_file():
        return base
    for ext in IMAGE_EXTENSIONS:
        p = base.with_name(base.name + ext)
        if p.is_file():
            return p
    raise FileNotFoundError(f"no image file for {image_id!r} in {image_dir}")


def _pt(p) -> list:
    return [float(p[0]), float(p[1])]


def _run_one(ann: Annotation, source, cfg, models, oracle: bool, on_result=None) -> dict:
    # imported here: the pipeline pulls in the numba kernels, which the
    # annotation helpers above do not need
    from .imageio import read_image
    from .pipeline import process_eye_crop, process_frame

    entry = {"image_id": ann.image_id, "eyes": {}, "error": None, "failure": None, "time": 0.0}
    dets: dict = {}
    try:
        img = read_image(source) if isinstance(source, (str, os.PathLike)) else np.asarray(source)
        ann.check_bounds(img.shape[1], img.shape[0])
        mode = cfg.input
        if mode == "auto":
            mode = "eye" if len(ann.eyes) == 1 else "frame"
        t0 = time.perf_counter()
        if oracle:
            dets = {s: (t.nasal, t.temporal) for s, t in ann.eyes.items()}
        else:
            if mode == "eye":
                side = next(iter(ann.eyes))
                res = process_eye_crop(img, side, cfg)
            else:
                res = process_frame(img, cfg, models)
            entry["time"] = time.perf_counter() - t0
            if on_result is not None:
                on_result(ann.image_id, img, res)
            for s, e in res.eyes.items():
                if e.corners is not None and not e.corners.degenerate:
                    dets[s] = (e.corners.nasal, e.corners.temporal)
        if oracle:
            entry["time"] = time.perf_counter() - t0
    except (OSError, EyeCornerError, ValueError) as e:
        entry["failure"] = f"{type(e).__name__}: {e}"
        entry["time"] = None
    missed = []
    for side, t in sorted(ann.eyes.items()):
        truth = (t.nasal, t.temporal)
        d = dets.get(side)
        if d is None:
            missed.append(side)
        entry["eyes"][side] = {
            "truth": {"nasal": _pt(t.nasal), "temporal": _pt(t.temporal)},
            "detected": None if d is None else {"nasal": _pt(d[0]), "temporal": _pt(d[1])},
            "sq_errors": None if d is None else [_sq(d[0], truth[0]), _sq(d[1], truth[1])],
            "normalized": corner_errors(d, truth, "eye-diagonal"),
        }
    if missed and entry["failure"] is None:
        entry["failure"] = "missed " + ", ".join(missed)
    return entry


def benchmark(items: Sequence[tuple], annotations: Sequence[Annotation], cfg=None,
              oracle: bool = False, jobs: int = 1, on_result=None) -> EvalReport:
    """Run the pipeline over ``items`` (``(image_id, path_or_array)`` pairs).

    Each image is scored against the annotation with the same image_id.
    Timing covers the pipeline only; decoding is excluded. Per-image
    results are reported in image_id order whatever ``jobs`` is.
    """
    from .pipeline import PipelineConfig

    cfg = cfg or PipelineConfig()
    by_id = {a.image_id: a for a in annotations}
    sources = dict(items)
    ids = sorted(i for i in sources if i in by_id)
    report = EvalReport(error_norm=cfg.error_norm)
    if not ids:
        return report
    models = None if oracle or cfg.input == "eye" else cfg.models()

    def run(i):
        return _run_one(by_id[i], sources[i], cfg, models, oracle, on_result)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            entries = list(ex.map(run, ids))
    else:
        entries = [run(i) for i in ids]

    dets, truths = [], []
    for entry in entries:
        for side, ev in sorted(entry["eyes"].items()):
            t = ev["truth"]
            truths.append((t["nasal"], t["temporal"]))
            d = ev["detected"]
            dets.append(None if d is None else (d["nasal"], d["temporal"]))
        norm = [v for ev in entry["eyes"].values() for v in ev["normalized"]]
        entry["error"] = 100.0 * float(np.mean(norm)) if norm else None
        if entry["failure"] is not None:
            report.failures += 1
        if entry["time"] is not None:
            report.frames += 1
            report.wall_time += entry["time"]
    report.per_image = entries
    try:
        report.percent_error = percent_error(dets, truths, cfg.error_norm)
    except NoPairs:
        report.percent_error = None
    return report
