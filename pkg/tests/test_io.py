import struct

import numpy as np
import pytest

from tile_ensemble.errors import InvalidInputError
from tile_ensemble.io import read_image, read_png, read_rawf32, write_image, write_png, write_rawf32


def test_rawf32_layout(tmp_path):
    data = np.arange(2 * 3 * 3, dtype=np.float32).reshape(2, 3, 3)
    path = tmp_path / "a.rawf32"
    write_rawf32(path, data)
    blob = path.read_bytes()
    assert blob[:4] == b"RAWF"
    assert struct.unpack("<III", blob[4:16]) == (2, 3, 3)
    # channel-planar: first the 6 samples of channel 0
    first = np.frombuffer(blob[16 : 16 + 24], dtype="<f4")
    np.testing.assert_array_equal(first, data[:, :, 0].ravel())
    assert len(blob) == 16 + data.size * 4


def test_rawf32_round_trip_is_lossless(tmp_path, rng):
    data = rng.random((17, 9, 3)).astype(np.float32)
    write_rawf32(tmp_path / "x.rawf32", data)
    np.testing.assert_array_equal(read_rawf32(tmp_path / "x.rawf32"), data)


def test_rawf32_rejects_garbage(tmp_path):
    (tmp_path / "bad.rawf32").write_bytes(b"NOPE" + b"\0" * 12)
    with pytest.raises(InvalidInputError):
        read_rawf32(tmp_path / "bad.rawf32")
    (tmp_path / "short.rawf32").write_bytes(struct.pack("<4sIII", b"RAWF", 2, 2, 1) + b"\0" * 4)
    with pytest.raises(InvalidInputError):
        read_rawf32(tmp_path / "short.rawf32")


@pytest.mark.parametrize("bits", [8, 16])
def test_png_round_trip(tmp_path, rng, bits):
    peak = 2**bits - 1
    data = np.round(rng.random((20, 30, 3)) * peak) / peak
    write_png(tmp_path / "x.png", data, bits=bits)
    np.testing.assert_array_equal(read_png(tmp_path / "x.png"), data)


def test_png_keeps_rgb_order(tmp_path):
    data = np.zeros((2, 2, 3))
    data[..., 0] = 1.0
    write_png(tmp_path / "red.png", data)
    np.testing.assert_array_equal(read_png(tmp_path / "red.png")[0, 0], [1.0, 0.0, 0.0])


def test_gray_png(tmp_path):
    data = np.linspace(0, 1, 16).reshape(4, 4, 1)
    write_image(tmp_path / "g.png", data)
    img = read_image(tmp_path / "g.png")
    assert img.shape == (4, 4, 1)
    assert np.max(np.abs(img.data - data)) <= 0.5 / 255


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_image(tmp_path / "nope.png")
