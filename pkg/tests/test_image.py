import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from eyecorners.errors import ImageTooSmall, OutOfBounds
from eyecorners.image import (POINT_COLOR, Rect, crop, draw_annotations, integral, rect_sum,
                              saturation_plane, sobel, to_grayscale)

from oracles import naive_sum

rgb_images = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12), st.just(3)))


def px(rgb):
    return np.array(rgb, dtype=np.uint8).reshape(1, 1, 3)


@pytest.mark.parametrize("rgb,expected", [((0, 0, 0), 0), ((255, 255, 255), 255), ((100, 150, 200), 141)])
def test_grayscale_examples(rgb, expected):
    assert to_grayscale(px(rgb))[0, 0] == expected


def test_grayscale_matches_float_formula_away_from_ties():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
    f = img.astype(float) @ np.array([0.299, 0.587, 0.114])
    frac = f - np.floor(f)
    safe = np.abs(frac - 0.5) > 1e-6
    assert np.array_equal(to_grayscale(img)[safe], np.floor(f + 0.5)[safe])


@pytest.mark.parametrize("rgb,expected", [((128, 128, 128), 0), ((255, 0, 0), 255), ((200, 100, 100), 128), ((0, 0, 0), 0)])
def test_saturation_examples(rgb, expected):
    assert saturation_plane(px(rgb))[0, 0] == expected


@settings(max_examples=50, deadline=None)
@given(rgb_images)
def test_planes_stay_in_byte_range(img):
    for out in (to_grayscale(img), saturation_plane(img)):
        assert out.dtype == np.uint8 and out.shape == img.shape[:2]


def test_integral_examples():
    assert rect_sum(integral(np.ones((4, 4), np.uint8)), Rect(0, 0, 4, 4)) == 16
    assert rect_sum(integral(np.full((1, 1), 201, np.uint8)), Rect(0, 0, 1, 1)) == 201


def test_integral_against_naive_sums():
    rng = np.random.default_rng(1)
    for _ in range(100):
        img = rng.integers(0, 256, (8, 8), dtype=np.uint8)
        t = integral(img)
        assert (t[0] == 0).all() and (t[:, 0] == 0).all()
        assert (np.diff(t, axis=0) >= 0).all() and (np.diff(t, axis=1) >= 0).all()
        for _ in range(100):
            x, y = rng.integers(0, 8, 2)
            w, h = rng.integers(1, 9 - x), rng.integers(1, 9 - y)
            assert rect_sum(t, Rect(x, y, w, h)) == naive_sum(img, x, y, w, h)


def test_integral_exhaustive_small():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    t, t2 = integral(img), integral(img, squared=True)
    for y in range(3):
        for x in range(4):
            for h in range(1, 4 - y):
                for w in range(1, 5 - x):
                    assert rect_sum(t, Rect(x, y, w, h)) == naive_sum(img, x, y, w, h)
                    sq = sum(int(v) ** 2 for v in img[y:y + h, x:x + w].ravel())
                    assert rect_sum(t2, Rect(x, y, w, h)) == sq


def test_sobel_constant_is_zero():
    g = sobel(np.full((6, 7), 77, np.uint8))
    assert not g.ix.any() and not g.iy.any()


def test_sobel_ramp_gain():
    img = (4 * np.tile(np.arange(11), (11, 1))).astype(np.uint8)
    g = sobel(img)
    assert (g.ix[1:-1, 1:-1] == 32).all()
    assert (g.iy == 0).all()
    assert np.allclose(sobel(img, normalize=True).ix[1:-1, 1:-1], 4.0)


def test_sobel_step_edge():
    img = np.zeros((10, 10), np.uint8)
    img[:, 5:] = 255
    g = sobel(img)
    assert (g.iy[1:-1] == 0).all()
    row = g.ix[5]
    assert set(np.flatnonzero(row == row.max())) == {4, 5}


def test_sobel_translation_equivariant():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (20, 20), dtype=np.uint8)
    a = sobel(img[2:16, 3:17])
    b = sobel(img[3:17, 5:19])  # shifted by (dx, dy) = (2, 1)
    assert np.array_equal(a.ix[2:-1, 3:-1], b.ix[1:-2, 1:-3])
    assert np.array_equal(a.iy[2:-1, 3:-1], b.iy[1:-2, 1:-3])


def test_sobel_too_small():
    with pytest.raises(ImageTooSmall):
        sobel(np.zeros((2, 5), np.uint8))


def test_crop_examples():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (9, 12, 3), dtype=np.uint8)
    assert np.array_equal(crop(img, Rect(0, 0, 12, 9)), img)
    assert np.array_equal(crop(img, Rect(0, 0, 1, 1))[0, 0], img[0, 0])
    for _ in range(50):
        x, y = rng.integers(0, 12), rng.integers(0, 9)
        w, h = rng.integers(1, 13 - x), rng.integers(1, 10 - y)
        c = crop(img, Rect(x, y, w, h))
        assert c.shape == (h, w, 3)
        for j in range(h):
            for i in range(w):
                assert tuple(c[j, i]) == tuple(img[y + j, x + i])
    with pytest.raises(OutOfBounds):
        crop(img, Rect(5, 5, 8, 2))


def test_crop_is_a_copy():
    img = np.zeros((4, 4), np.uint8)
    c = crop(img, Rect(0, 0, 2, 2))
    c[0, 0] = 9
    assert img[0, 0] == 0


def test_draw_empty_is_copy():
    img = np.full((8, 8, 3), 40, np.uint8)
    out = draw_annotations(img)
    assert np.array_equal(out, img) and out is not img


def test_draw_point_is_local():
    img = np.full((12, 12, 3), 40, np.uint8)
    out = draw_annotations(img, points=[(5, 5)], arm=2)
    changed = set(zip(*np.nonzero((out != img).any(axis=2))))
    cross = {(5, x) for x in range(3, 8)} | {(y, 5) for y in range(3, 8)}
    assert changed == cross
    assert tuple(out[5, 5]) == POINT_COLOR
    assert (img == 40).all()


def test_draw_rects_change_exactly_perimeters():
    img = np.zeros((20, 20, 3), np.uint8)
    rects = [Rect(1, 1, 5, 4), Rect(10, 8, 6, 7)]
    out = draw_annotations(img, rects=rects)
    changed = set(zip(*np.nonzero((out != img).any(axis=2))))
    expected = set()
    for r in rects:
        for y in range(r.y, r.y2):
            for x in range(r.x, r.x2):
                if y in (r.y, r.y2 - 1) or x in (r.x, r.x2 - 1):
                    expected.add((y, x))
    assert changed == expected
    assert len(changed) == 2 * (5 + 4) - 4 + 2 * (6 + 7) - 4


def test_draw_out_of_bounds():
    img = np.zeros((5, 5, 3), np.uint8)
    with pytest.raises(OutOfBounds):
        draw_annotations(img, points=[(7, 1)])
    with pytest.raises(OutOfBounds):
        draw_annotations(img, rects=[Rect(3, 3, 4, 1)])


def test_rect_helpers():
    r = Rect(2, 3, 4, 5)
    assert (r.x2, r.y2, r.area()) == (6, 8, 20)
    assert r.translate(1, -1) == Rect(3, 2, 4, 5)
    assert r.iou(r) == 1.0 and r.iou(Rect(20, 20, 1, 1)) == 0.0
