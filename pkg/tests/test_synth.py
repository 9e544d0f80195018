import numpy as np
import pytest

from eyecorners.errors import GeometryError
from eyecorners.synth import (SCLERA, SynthEyeParams, SynthFaceParams, lens_mask, sclera_truth,
                              synth_eye, synth_eye_batch, synth_face)


def test_same_seed_same_image():
    p = SynthEyeParams()
    a, ann_a = synth_eye(p, seed=5)
    b, ann_b = synth_eye(p, seed=5)
    assert np.array_equal(a, b) and ann_a == ann_b
    assert not np.array_equal(a, synth_eye(p, seed=6)[0])


def test_batch_is_deterministic():
    a = synth_eye_batch(5, seed=3)
    b = synth_eye_batch(5, seed=3)
    for (ia, na, pa), (ib, nb, pb) in zip(a, b):
        assert np.array_equal(ia, ib) and na == nb and pa == pb
    assert [n.image_id for _, n, _ in a] == [f"eye_{i:04d}" for i in range(5)]


def test_full_aperture_canthi_at_ellipse_extremes():
    p = SynthEyeParams(aperture=1.0, noise=0.0, gradient=0.0)
    img, ann = synth_eye(p)
    t = ann.eyes["right"]
    assert t.nasal == (p.cx + p.a, p.cy) and t.temporal == (p.cx - p.a, p.cy)
    # the rendered lens reaches exactly those pixels and no further
    cols = np.flatnonzero(lens_mask(p).any(axis=0))
    assert cols.min() == p.cx - p.a and cols.max() == p.cx + p.a
    for x, y in (t.nasal, t.temporal):
        assert tuple(img[int(y), int(x)]) == SCLERA


def test_left_eye_mirrors_assignment():
    ann = synth_eye(SynthEyeParams(eye="left"))[1]
    t = ann.eyes["left"]
    assert t.temporal[0] > t.nasal[0]


def test_noise_free_render_uses_palette():
    p = SynthEyeParams(noise=0.0, gradient=0.0)
    img, _ = synth_eye(p)
    assert set(map(tuple, img.reshape(-1, 3))) <= {p.skin, p.sclera, p.iris, p.pupil}
    assert ((img == SCLERA).all(axis=2) == sclera_truth(p)).all()


@pytest.mark.parametrize("kw", [dict(aperture=0.0), dict(aperture=1.5), dict(a=-1.0), dict(eye="both"),
                                dict(noise=-1.0)])
def test_invalid_params(kw):
    with pytest.raises(GeometryError):
        SynthEyeParams(**kw)


def test_canthi_outside_image():
    with pytest.raises(GeometryError):
        synth_eye(SynthEyeParams(a=60.0))


def test_params_dict_round_trip():
    p = SynthEyeParams(a=30.0, eye="left")
    assert SynthEyeParams.from_dict(p.as_dict()) == p
    with pytest.raises(KeyError):
        SynthEyeParams.from_dict({"colour": 1})


def test_batch_truth_inside_images():
    for img, ann, p in synth_eye_batch(50, seed=9):
        ann.check_bounds(img.shape[1], img.shape[0])


def test_face_frame():
    img, ann = synth_face(SynthFaceParams(), seed=1)
    assert img.shape == (480, 640, 3) and img.dtype == np.uint8
    assert set(ann.eyes) == {"left", "right"}
    ann.check_bounds(640, 480)
    # subject's right eye sits on the image left
    assert ann.eyes["right"].nasal[0] < ann.eyes["left"].nasal[0]
    for side, r in ann.eye_rects.items():
        t = ann.eyes[side]
        for x, y in (t.nasal, t.temporal):
            assert r.x <= x < r.x2 and r.y <= y < r.y2
    assert np.array_equal(img, synth_face(SynthFaceParams(), seed=1)[0])
