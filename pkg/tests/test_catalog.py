"""Adapter catalog storage, composite indexing, and the binary format."""

import numpy as np
import pytest

from tokroute.catalog import AdapterCatalog, LoraPair, random_catalog
from tokroute.errors import FormatError, ShapeError


def make_catalog(num_adapters=3, num_modalities=2, d=8, r=2, seed=0):
    return random_catalog(num_adapters, num_modalities, d, r,
                          rng=np.random.default_rng(seed))


def test_lora_pair_validates_shapes():
    a = np.zeros((8, 2), np.float32)
    b = np.zeros((2, 8), np.float32)
    pair = LoraPair(a, b)
    assert pair.d == 8 and pair.r == 2
    with pytest.raises(ShapeError):
        LoraPair(a, np.zeros((3, 8), np.float32))
    with pytest.raises(ShapeError):
        LoraPair(a, np.zeros((2, 9), np.float32))


def test_composite_index_layout():
    cat = make_catalog(num_adapters=4, num_modalities=3)
    # index runs modality-fastest
    assert cat.composite_index(0, 0) == 0
    assert cat.composite_index(0, 2) == 2
    assert cat.composite_index(1, 0) == 3
    assert cat.composite_index(3, 2) == 11
    with pytest.raises(IndexError):
        cat.composite_index(4, 0)
    with pytest.raises(IndexError):
        cat.composite_index(0, 3)
    with pytest.raises(IndexError):
        cat.composite_index(-1, 0)


def test_set_and_get_pair_round_trip():
    cat = AdapterCatalog(2, 2, d=4, r=2)
    rng = np.random.default_rng(5)
    pair = LoraPair(rng.normal(size=(4, 2)).astype(np.float32),
                    rng.normal(size=(2, 4)).astype(np.float32))
    cat.set_pair(1, 0, pair)
    got = cat.get_pair(1, 0)
    assert np.array_equal(got.A, pair.A)
    assert np.array_equal(got.B, pair.B)
    a, b = cat.factors(cat.composite_index(1, 0))
    assert np.array_equal(a, pair.A)
    assert np.array_equal(b, pair.B)


def test_save_load_round_trip(tmp_path):
    cat = make_catalog(num_adapters=3, num_modalities=2, d=16, r=4)
    path = tmp_path / "catalog.bin"
    cat.save(path)
    back = AdapterCatalog.load(path)
    assert back.num_adapters == 3 and back.num_modalities == 2
    assert back.d == 16 and back.r == 4
    for c in range(back.num_entries):
        a0, b0 = cat.factors(c)
        a1, b1 = back.factors(c)
        assert np.array_equal(a0, a1)
        assert np.array_equal(b0, b1)


def test_format_is_little_endian_float32(tmp_path):
    cat = make_catalog(num_adapters=1, num_modalities=1, d=2, r=1)
    path = tmp_path / "one.bin"
    cat.save(path)
    raw = path.read_bytes()
    assert raw[:4] == b"PTRT"
    header = np.frombuffer(raw[4:24], dtype="<u4")
    assert list(header) == [1, 1, 1, 2, 1]
    payload = np.frombuffer(raw[24:], dtype="<f4")
    a, b = cat.factors(0)
    np.testing.assert_array_equal(payload[:2], a.ravel())
    np.testing.assert_array_equal(payload[2:], b.ravel())


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    cat = make_catalog()
    cat.save(path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        AdapterCatalog.load(path)
    assert "offset 0" in str(err.value)


def test_load_rejects_unknown_version(tmp_path):
    path = tmp_path / "ver.bin"
    make_catalog().save(path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        AdapterCatalog.load(path)
    assert "offset 4" in str(err.value)


def test_load_rejects_truncated_header(tmp_path):
    path = tmp_path / "trunc.bin"
    path.write_bytes(b"PTRT\x01\x00")
    with pytest.raises(FormatError):
        AdapterCatalog.load(path)


def test_load_rejects_truncated_payload(tmp_path):
    path = tmp_path / "short.bin"
    make_catalog().save(path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        AdapterCatalog.load(path)


def test_load_rejects_zero_dimension(tmp_path):
    path = tmp_path / "dims.bin"
    make_catalog().save(path)
    raw = bytearray(path.read_bytes())
    raw[16:20] = (0).to_bytes(4, "little")  # d = 0
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        AdapterCatalog.load(path)
    assert "offset 8" in str(err.value)
