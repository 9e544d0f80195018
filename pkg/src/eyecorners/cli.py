"""Command-line front end: ``detect``, ``eval`` and ``synth``.

Stdout carries JSON only; diagnostics go to stderr. Exit status is 0 on
success, 1 on infrastructure errors (unreadable input, model or directory)
and 2 when ``detect`` finds no corners in some image.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import EyeCornerError
from .evaluate import (IMAGE_EXTENSIONS, benchmark, load_annotations, resolve_image,
                       write_annotations)
from .image import draw_annotations
from .imageio import read_image, write_image
from .pipeline import FrameResult, PipelineConfig, process_eye_crop, process_frame
from .synth import SynthEyeParams, SynthFaceParams, jitter_params, synth_eye, synth_face

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

# (flag, config key, argparse kwargs); absent flags leave the key unset so a
# --config file value is not clobbered by a default
MODULE_FLAGS = [
    ("--clahe-tiles", "clahe_tiles", dict(metavar="NxM", help="tile grid, columns x rows")),
    ("--clahe-clip", "clahe_clip", dict(type=float)),
    ("--no-clahe", "no_clahe", dict(action="store_const", const=True)),
    ("--face-model", "face_model", dict(metavar="PATH")),
    ("--eye-model", "eye_model", dict(metavar="PATH")),
    ("--scale-factor", "scale_factor", dict(type=float)),
    ("--min-neighbors", "min_neighbors", dict(type=int)),
    ("--min-size", "min_size", dict(type=int, help="smallest face window in pixels")),
    ("--max-size", "max_size", dict(type=int)),
    ("--eye-min-frac", "eye_min_frac", dict(type=float)),
    ("--eye-max-frac", "eye_max_frac", dict(type=float)),
    ("--eye-pad", "eye_pad", dict(type=float)),
    ("--sclera-mode", "sclera_mode", dict(choices=["auto", "color", "gray"])),
    ("--sclera-thresh", "sclera_thresh", dict(metavar="auto|T")),
    ("--se-scale", "se_scale", dict(type=float)),
    ("--harris-k", "harris_k", dict(type=float)),
    ("--harris-radius", "harris_radius", dict(type=int)),
    ("--nms-radius", "nms_radius", dict(type=int)),
    ("--max-candidates", "max_candidates", dict(type=int)),
    ("--rel-thresh", "rel_thresh", dict(type=float)),
    ("--error-norm", "error_norm", dict(choices=["eye-diagonal", "pixels"])),
    ("--input", "input", dict(choices=["auto", "frame", "eye"])),
]


class CliError(Exception):
    pass


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment, dashes equal underscores."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"config line {n}: expected key=value, got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def format_config(cfg: PipelineConfig) -> str:
    lines = []
    for k, v in cfg.to_mapping().items():
        if isinstance(v, tuple):
            v = "x".join(str(x) for x in v)
        lines.append(f"{k} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def build_config(args) -> PipelineConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as e:
            raise CliError(f"cannot read config {args.config}: {e}") from None
    for _, key, _ in MODULE_FLAGS:
        if hasattr(args, key):
            values[key] = getattr(args, key)
    try:
        return PipelineConfig.from_mapping(values)
    except (KeyError, ValueError, TypeError) as e:
        raise CliError(f"bad configuration: {e}") from None


def _add_shared(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="FILE", help="flat key=value file; flags take precedence")
    p.add_argument("--jobs", type=int, default=1, help="images processed in parallel")
    p.add_argument("--dump-stages", metavar="DIR", help="write intermediate masks and contours")
    p.add_argument("--annotate", metavar="DIR", help="write overlay images with detections")
    for flag, key, kw in MODULE_FLAGS:
        p.add_argument(flag, dest=key, default=argparse.SUPPRESS, **kw)


def _list_inputs(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_EXTENSIONS))
        else:
            out.append(p)
    return out


def _pt(p):
    return None if p is None else [int(p[0]), int(p[1])]


def _rect(r):
    return None if r is None else [int(v) for v in r]


def frame_json(path: str, res, timings: bool = True) -> dict:
    eyes = {}
    for side in ("left", "right"):
        e = res.eyes.get(side)
        if e is None:
            eyes[side] = None
            continue
        c = e.corners
        eyes[side] = {
            "rect": _rect(e.rect),
            "nasal": _pt(c.nasal) if c else None,
            "temporal": _pt(c.temporal) if c else None,
            "degenerate": bool(c.degenerate) if c else None,
            "candidates": [[k.x, k.y, k.response] for k in e.candidates],
            "failure": e.failure,
        }
    return {
        "path": path,
        "face": _rect(res.face),
        "eyes": eyes,
        "timings": {k: res.timings[k] for k in sorted(res.timings)} if timings else None,
        "failure": res.failure(),
    }


def _write_stages(out_dir: Path, stem: str, stages: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, arr in sorted(stages.items()):
        a = np.asarray(arr)
        if a.dtype == bool:
            a = a.astype(np.uint8) * 255
        write_image(out_dir / f"{stem}_{name}.png", a.astype(np.uint8))


def _write_overlay(out_dir: Path, stem: str, img, res):
    out_dir.mkdir(parents=True, exist_ok=True)
    rgb = img if img.ndim == 3 else np.repeat(img[..., None], 3, axis=2)
    rects = [r for r in [res.face] + [e.rect for e in res.eyes.values()] if r is not None]
    points = [p for e in res.eyes.values() if e.corners is not None for p in e.corners.points()]
    write_image(out_dir / f"{stem}_annotated.png", draw_annotations(rgb, rects, points))


def cmd_detect(args) -> int:
    cfg = build_config(args)
    try:
        models = None if cfg.input == "eye" else cfg.models()
    except (OSError, EyeCornerError) as e:
        raise CliError(f"cannot load cascade model: {e}") from None
    paths = _list_inputs(args.inputs)
    images = []
    for p in paths:
        try:
            images.append(read_image(p))
        except (OSError, EyeCornerError) as e:
            raise CliError(f"cannot read {p}: {e}") from None

    def run(i):
        stages = {} if args.dump_stages else None
        img = images[i]
        try:
            if cfg.input == "eye":
                return process_eye_crop(img, args.eye_side, cfg, stages)
            return process_frame(img, cfg, models, stages)
        except EyeCornerError as e:
            return FrameResult(stages=stages or {}, error=f"{type(e).__name__}: {e}")

    idx = range(len(paths))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(run, idx))
    else:
        results = [run(i) for i in idx]

    out = []
    for p, img, res in zip(paths, images, results):
        if args.dump_stages:
            _write_stages(Path(args.dump_stages), p.stem, res.stages)
        if args.annotate:
            _write_overlay(Path(args.annotate), p.stem, img, res)
        out.append(frame_json(str(p), res, timings=not args.no_timings))
    failures = sum(1 for r in results if not r.ok)
    print(json.dumps({"images": out, "failures": failures}, indent=2 if args.pretty else None))
    if failures:
        for entry in out:
            if entry["failure"]:
                print(f"{entry['path']}: {entry['failure']}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = build_config(args)
    try:
        anns = load_annotations(args.annotations)
    except OSError as e:
        raise CliError(f"cannot read annotations: {e}") from None
    except EyeCornerError as e:
        raise CliError(f"bad annotations: {e}") from None
    items = []
    for a in anns:
        try:
            items.append((a.image_id, resolve_image(args.image_dir, a.image_id)))
        except FileNotFoundError:
            # recorded as a failure by the benchmark
            items.append((a.image_id, Path(args.image_dir) / a.image_id))

    def on_result(image_id, img, res):
        stem = Path(image_id).stem
        if args.dump_stages:
            _write_stages(Path(args.dump_stages), stem, res.stages)
        if args.annotate:
            _write_overlay(Path(args.annotate), stem, img, res)

    hook = on_result if (args.dump_stages or args.annotate) else None
    try:
        report = benchmark(items, anns, cfg, oracle=args.oracle, jobs=args.jobs, on_result=hook)
    except (OSError, EyeCornerError) as e:
        raise CliError(str(e)) from None
    print(report.to_json(indent=2 if args.pretty else None))
    print(f"frames={report.frames} failures={report.failures} fps={report.fps:.2f} "
          f"percent_error={report.percent_error}", file=sys.stderr)
    return EXIT_OK


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise CliError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip().replace("-", "_")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise CliError(f"cannot write to {out_dir}: {e}") from None
    params = _parse_params(args.param)
    rng = np.random.default_rng(args.seed)
    anns, names = [], []
    try:
        if args.kind == "eye":
            base = SynthEyeParams.from_dict(params)
        else:
            base = SynthFaceParams(**params)
    except (KeyError, TypeError, ValueError) as e:
        raise CliError(f"bad synth parameters: {e}") from None
    for i in range(args.count):
        seed = int(rng.integers(0, 2 ** 31))
        name = f"{args.kind}_{i:04d}.png"
        try:
            if args.kind == "eye":
                img, ann = synth_eye(jitter_params(base, rng) if args.jitter else base, seed, name)
            else:
                img, ann = synth_face(base, seed, name)
        except EyeCornerError as e:
            raise CliError(f"cannot render image {i}: {e}") from None
        write_image(out_dir / name, img)
        anns.append(ann)
        names.append(name)
    csv_path = out_dir / "annotations.csv"
    write_annotations(csv_path, anns, with_face=args.kind == "face")
    print(json.dumps({"count": args.count, "kind": args.kind, "seed": args.seed,
                      "annotations": str(csv_path), "images": names}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eyecorners", description="Eye corner localization")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="locate eye corners in images")
    d.add_argument("inputs", nargs="+", help="image files or directories")
    d.add_argument("--eye-side", choices=["left", "right"], default="right",
                   help="side of the eye when --input eye")
    d.add_argument("--no-timings", action="store_true", help="omit per-stage timings")
    d.add_argument("--pretty", action="store_true")
    _add_shared(d)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="score detections against annotations")
    e.add_argument("image_dir")
    e.add_argument("annotations")
    e.add_argument("--oracle", action="store_true", help="use the annotations as detections")
    e.add_argument("--pretty", action="store_true")
    _add_shared(e)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write synthetic images and ground truth")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, metavar="DIR")
    s.add_argument("--kind", choices=["eye", "face"], default="eye")
    s.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="override a base generator parameter (repeatable)")
    s.add_argument("--no-jitter", dest="jitter", action="store_false",
                   help="render every eye with the base parameters")
    s.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
