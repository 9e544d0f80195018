import numpy as np
import pytest

from eyecorners.errors import ParseError
from eyecorners.imageio import encode_pnm, read_image, write_image


def test_pgm_header_and_body():
    img = np.arange(6, dtype=np.uint8).reshape(2, 3)
    raw = encode_pnm(img)
    assert raw == b"P5 3 2 255\n" + bytes(range(6))


@pytest.mark.parametrize("suffix", [".png", ".pgm", ".ppm"])
def test_round_trip(tmp_path, suffix):
    rng = np.random.default_rng(0)
    shape = (7, 5) if suffix == ".pgm" else (7, 5, 3)
    img = rng.integers(0, 256, shape, dtype=np.uint8)
    p = tmp_path / f"img{suffix}"
    write_image(p, img)
    assert np.array_equal(read_image(p), img)


def test_gray_png_round_trip(tmp_path):
    img = np.random.default_rng(1).integers(0, 256, (4, 9), dtype=np.uint8)
    write_image(tmp_path / "g.png", img)
    out = read_image(tmp_path / "g.png")
    assert out.shape == (4, 9) and np.array_equal(out, img)


def test_bool_written_as_0_255(tmp_path):
    m = np.array([[True, False]])
    write_image(tmp_path / "m.pgm", m)
    assert read_image(tmp_path / "m.pgm").tolist() == [[255, 0]]


def test_pnm_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\x02")
    assert read_image(p).tolist() == [[1, 2]]


@pytest.mark.parametrize("raw", [b"P5 2 2 255\n\x00", b"P2 1 1 255\n0", b"P5 1 1 65535\n\x00\x00", b"P5 1"])
def test_bad_pnm(tmp_path, raw):
    p = tmp_path / "bad.pgm"
    p.write_bytes(raw)
    with pytest.raises(ParseError):
        read_image(p)


def test_png_bytes_are_stable(tmp_path):
    img = np.random.default_rng(2).integers(0, 256, (16, 16, 3), dtype=np.uint8)
    write_image(tmp_path / "a.png", img)
    write_image(tmp_path / "b.png", img)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
