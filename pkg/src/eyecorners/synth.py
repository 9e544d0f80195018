"""Synthetic eye crops and face frames with exact corner ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import GeometryError
from .evaluate import Annotation, EyeTruth
from .image import Rect

SKIN = (205, 160, 135)
SCLERA = (235, 235, 230)
IRIS = (90, 60, 40)
PUPIL = (25, 20, 20)


@dataclass(frozen=True)
class SynthEyeParams:
    """Geometry and colors of one synthetic eye crop.

    The visible sclera is the part of the ellipse ``(cx, cy, a, b)`` lying
    between two parabolic lids ``y = cy -/+ aperture * b * (1 - ((x - cx) / a)^2)``.
    Both lids meet the horizontal axis at ``x = cx -/+ a``, which are the canthi.
    """
    width: int = 100
    height: int = 60
    cx: float = 50.0
    cy: float = 30.0
    a: float = 38.0
    b: float = 20.0
    aperture: float = 0.9
    iris_dx: float = 0.0
    iris_dy: float = 0.0
    iris_r: float = 9.0
    pupil_r: float = 4.0
    skin: tuple = SKIN
    sclera: tuple = SCLERA
    iris: tuple = IRIS
    pupil: tuple = PUPIL
    noise: float = 4.0
    gradient: float = 0.3  # relative brightness change across the image width
    eye: str = "right"

    def __post_init__(self):
        if not 0.0 < self.aperture <= 1.0:
            raise GeometryError(f"aperture must lie in (0, 1], got {self.aperture}")
        if self.width < 1 or self.height < 1:
            raise GeometryError("image size must be positive")
        if self.a <= 0 or self.b <= 0:
            raise GeometryError("ellipse half-axes must be positive")
        if self.iris_r < 0 or self.pupil_r < 0 or self.noise < 0:
            raise GeometryError("radii and noise must be non-negative")
        if self.eye not in ("left", "right"):
            raise GeometryError(f"eye must be 'left' or 'right', got {self.eye!r}")

    def canthi(self) -> tuple[tuple, tuple]:
        """(nasal, temporal) in pixel coordinates."""
        lo, hi = (self.cx - self.a, self.cy), (self.cx + self.a, self.cy)
        # subject's right eye sits on the image left: temporal corner has smaller x
        return (hi, lo) if self.eye == "right" else (lo, hi)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthEyeParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise KeyError(f"unknown synth parameters: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def lens_mask(p: SynthEyeParams, xx=None, yy=None) -> np.ndarray:
    """Boolean visible-sclera region (before the iris is painted) on pixel centers."""
    if xx is None:
        yy, xx = np.mgrid[0:p.height, 0:p.width].astype(np.float64)
    t = 1.0 - ((xx - p.cx) / p.a) ** 2
    h = p.aperture * p.b
    inside = ((xx - p.cx) / p.a) ** 2 + ((yy - p.cy) / p.b) ** 2 <= 1.0
    return inside & (t >= 0) & (yy >= p.cy - h * t) & (yy <= p.cy + h * t)


def sclera_truth(p: SynthEyeParams) -> np.ndarray:
    """Ground-truth sclera: the lens minus the iris disk."""
    yy, xx = np.mgrid[0:p.height, 0:p.width].astype(np.float64)
    iris = (xx - p.cx - p.iris_dx) ** 2 + (yy - p.cy - p.iris_dy) ** 2 <= p.iris_r ** 2
    return lens_mask(p, xx, yy) & ~iris


def _check_geometry(p: SynthEyeParams):
    for x, y in p.canthi():
        if not (0 <= x <= p.width - 1 and 0 <= y <= p.height - 1):
            raise GeometryError(f"canthus ({x:.2f}, {y:.2f}) falls outside the "
                                f"{p.width}x{p.height} image")


def render_eye(canvas: np.ndarray, p: SynthEyeParams, ox: float = 0.0, oy: float = 0.0):
    """Paint the eye of ``p`` onto a float RGB canvas, offset by ``(ox, oy)``."""
    h, w = canvas.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xx -= ox
    yy -= oy
    lens = lens_mask(p, xx, yy)
    d2 = (xx - p.cx - p.iris_dx) ** 2 + (yy - p.cy - p.iris_dy) ** 2
    canvas[lens] = p.sclera
    canvas[lens & (d2 <= p.iris_r ** 2)] = p.iris
    canvas[lens & (d2 <= p.pupil_r ** 2)] = p.pupil


def _finish(canvas: np.ndarray, gradient: float, noise: float, rng) -> np.ndarray:
    w = canvas.shape[1]
    ramp = 1.0 + gradient * (np.arange(w) / max(w - 1, 1) - 0.5)
    canvas *= ramp[None, :, None]
    if noise > 0:
        canvas += rng.normal(0.0, noise, canvas.shape)
    return np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)


def synth_eye(p: SynthEyeParams = SynthEyeParams(), seed: int = 0,
              image_id: str = "eye") -> tuple[np.ndarray, Annotation]:
    _check_geometry(p)
    rng = np.random.default_rng(seed)
    canvas = np.empty((p.height, p.width, 3), dtype=np.float64)
    canvas[:] = p.skin
    render_eye(canvas, p)
    img = _finish(canvas, p.gradient, p.noise, rng)
    nasal, temporal = p.canthi()
    return img, Annotation(image_id, {p.eye: EyeTruth(nasal, temporal)})


def jitter_params(base: SynthEyeParams, rng) -> SynthEyeParams:
    """Random variation around ``base`` that keeps the canthi inside the image."""
    a = base.a * rng.uniform(0.9, 1.05)
    cx = base.cx + rng.uniform(-1, 1) * min(4.0, max(0.0, base.width / 2 - a - 2))
    cy = base.cy + rng.uniform(-3, 3)
    return replace(
        base,
        cx=float(cx), cy=float(cy), a=float(a),
        b=float(base.b * rng.uniform(0.9, 1.1)),
        aperture=float(np.clip(base.aperture * rng.uniform(0.9, 1.05), 0.05, 1.0)),
        iris_dx=float(base.iris_dx + rng.uniform(-6, 6)),
        iris_dy=float(base.iris_dy + rng.uniform(-2, 2)),
        gradient=float(base.gradient * rng.uniform(-1, 1)),
    )


def synth_eye_batch(n: int, base: SynthEyeParams = SynthEyeParams(), seed: int = 42):
    """``n`` jittered eyes; image ``i`` is ``synth_eye(params_i, seed_i)``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        p = jitter_params(base, rng)
        s = int(rng.integers(0, 2 ** 31))
        out.append(synth_eye(p, s, image_id=f"eye_{i:04d}") + (p,))
    return out


@dataclass(frozen=True)
class SynthFaceParams:
    width: int = 640
    height: int = 480
    face_w: float = 220.0
    eye_scale: float = 0.12  # eye half-width as a fraction of face width
    socket: float = 0.3      # darkening of the eye sockets
    noise: float = 4.0
    jitter: float = 40.0     # max horizontal face-center offset


def synth_face(p: SynthFaceParams = SynthFaceParams(), seed: int = 0,
               image_id: str = "face") -> tuple[np.ndarray, Annotation]:
    """A frontal cartoon face with two planted eyes.

    The shading pattern (dark sockets and brows over a lighter cheek band)
    is what Haar cascades key on, so the bundled models find the face and
    both eyes.
    """
    rng = np.random.default_rng(seed)
    W, H = p.width, p.height
    canvas = np.empty((H, W, 3), dtype=np.float64)
    canvas[:] = (90, 100, 110)
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    fcx = W / 2 + rng.uniform(-1, 1) * p.jitter
    fcy = H / 2 + rng.uniform(-1, 1) * p.jitter / 2
    fw, fh = p.face_w, p.face_w * 1.3
    face = ((xx - fcx) / (fw / 2)) ** 2 + ((yy - fcy) / (fh / 2)) ** 2 <= 1
    shade = 1 - 0.25 * ((xx - fcx) / (fw / 2)) ** 2
    canvas[face] = np.array(SKIN, dtype=np.float64)[None] * shade[face][:, None]
    canvas[face & (yy < fcy - fh * 0.36)] = (50, 35, 25)

    a = fw * p.eye_scale
    ey = fcy - fh * 0.08
    eyes, regions = {}, {}
    for side, sgn in (("right", -1), ("left", 1)):
        cx = fcx + sgn * fw * 0.22
        sock = np.exp(-(((xx - cx) / (a * 1.3)) ** 2 + ((yy - ey + a * 0.2) / (a * 0.8)) ** 2))
        canvas *= (1 - p.socket * sock)[..., None]
        ep = SynthEyeParams(width=W, height=H, cx=cx, cy=ey, a=a, b=a * 0.5, aperture=0.95,
                            iris_r=a * 0.26, pupil_r=a * 0.12, eye=side,
                            iris_dx=rng.uniform(-0.1, 0.1) * a)
        brow = (np.abs(yy - (ey - a * 0.95)) < a * 0.12) & (np.abs(xx - cx) < a * 1.1)
        canvas[brow] = (60, 40, 30)
        render_eye(canvas, ep)
        nasal, temporal = ep.canthi()
        eyes[side] = EyeTruth(nasal, temporal)
        # the shaded socket square the eye pattern is drawn in
        regions[side] = Rect(int(round(cx - 1.3 * a)), int(round(ey - 1.5 * a)),
                             int(round(2.6 * a)), int(round(2.6 * a)))
    nose = (np.abs(xx - fcx) < fw * 0.05) & (yy > ey + fh * 0.12) & (yy < fcy + fh * 0.12)
    canvas[nose] *= 0.8
    nostrils = ((xx - fcx) / (fw * 0.09)) ** 2 + ((yy - fcy - fh * 0.13) / (fw * 0.03)) ** 2 <= 1
    canvas[nostrils] *= 0.7
    mouth = ((xx - fcx) / (fw * 0.17)) ** 2 + ((yy - fcy - fh * 0.27) / (fw * 0.035)) ** 2 <= 1
    canvas[mouth] = (150, 70, 70)
    img = _finish(canvas, 0.0, p.noise, rng)
    face_rect = Rect(int(round(fcx - fw / 2)), int(round(fcy - fh / 2)), int(round(fw)), int(round(fh)))
    return img, Annotation(image_id, eyes, face_rect, regions)
