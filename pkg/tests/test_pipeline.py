import numpy as np
import pytest

from eyecorners.pipeline import PipelineConfig, process_eye_crop, process_frame
from eyecorners.synth import SynthEyeParams, synth_eye, synth_face


def test_config_defaults_and_round_trip():
    cfg = PipelineConfig()
    assert cfg.clahe_tiles == (8, 8) and cfg.harris_k == 0.04 and cfg.sclera_thresh == "auto"
    assert PipelineConfig.from_mapping(cfg.to_mapping()) == cfg


def test_config_converts_strings():
    cfg = PipelineConfig.from_mapping({"clahe_tiles": "4x6", "no_clahe": "yes", "max_size": "none",
                                       "sclera_thresh": "120", "harris_radius": "2"})
    assert cfg.clahe_tiles == (4, 6) and cfg.no_clahe is True and cfg.max_size is None
    assert cfg.sclera_thresh == 120 and cfg.harris_radius == 2


@pytest.mark.parametrize("kw", [dict(harris_k=0.5), dict(sclera_mode="hsv"), dict(sclera_thresh=300),
                                dict(clahe_clip=0.5), dict(scale_factor=1.0), dict(rel_thresh=2.0),
                                dict(eye_min_frac=0.5, eye_max_frac=0.4), dict(error_norm="x"),
                                dict(input="video"), dict(no_clahe="maybe")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PipelineConfig(**kw)


def test_unknown_key():
    with pytest.raises(KeyError):
        PipelineConfig.from_mapping({"harris_kk": 0.1})


def test_eye_crop_corners_near_truth():
    img, ann = synth_eye(SynthEyeParams(), seed=0)
    stages = {}
    res = process_eye_crop(img, "right", stages=stages)
    c = res.eyes["right"].corners
    t = ann.eyes["right"]
    assert res.ok and res.failure() is None
    assert np.hypot(*np.subtract(c.nasal, t.nasal)) <= 3
    assert np.hypot(*np.subtract(c.temporal, t.temporal)) <= 3
    assert {"right_saturation", "right_raw_mask", "right_opened_mask", "right_contour",
            "right_overlay"} <= set(stages)
    assert {"gray", "clahe", "sclera", "harris", "prune"} <= set(res.timings)


def test_gray_eye_crop():
    img, ann = synth_eye(SynthEyeParams(), seed=1)
    gray = img.mean(axis=2).astype(np.uint8)
    res = process_eye_crop(gray, "right")
    assert res.ok


def test_blank_frame_fails_cleanly():
    res = process_frame(np.zeros((120, 160, 3), np.uint8))
    assert not res.ok and res.face is None and res.failure() == "no face detected"


def test_face_frame_end_to_end():
    img, ann = synth_face(seed=0)
    res = process_frame(img)
    assert res.face is not None and set(res.eyes) == {"left", "right"}
    for side, e in res.eyes.items():
        t = ann.eyes[side]
        assert np.hypot(*np.subtract(e.corners.nasal, t.nasal)) <= 4
        assert np.hypot(*np.subtract(e.corners.temporal, t.temporal)) <= 4


def test_no_clahe_and_padding_run():
    img, _ = synth_face(seed=1)
    assert process_frame(img, PipelineConfig(no_clahe=True, eye_pad=0.1)).face is not None
