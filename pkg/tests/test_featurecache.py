import numpy as np
import pytest

from elghp import featurecache
from elghp.featurecache import CacheError


def test_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    records = [("a_0.pgm", rng.integers(0, 4000, 9216).astype(np.uint32)),
               ("ünï_1.pgm", np.array([0, 2**32 - 1], dtype=np.uint32))]
    path = tmp_path / "cache.bin"
    featurecache.write_cache(path, records)
    back = featurecache.read_cache(path)
    assert [n for n, _ in back] == [n for n, _ in records]
    for (_, a), (_, b) in zip(back, records):
        assert np.array_equal(a, b)


def test_byte_layout():
    raw = featurecache.dumps([("ab", np.array([1, 258], dtype=np.uint32))])
    assert raw == bytes.fromhex("00000002" "6162" "00000002" "00000001" "00000102")


@pytest.mark.parametrize("raw", [b"\x00\x00", b"\x00\x00\x00\x05ab", bytes.fromhex("00000001" "61" "00000002" "00000001")])
def test_truncated(raw):
    with pytest.raises(CacheError):
        featurecache.loads(raw)
