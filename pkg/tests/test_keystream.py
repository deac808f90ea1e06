from fractions import Fraction as Q

import pytest

from rcstego.keystream import OffsetStream, StegoKey, offset

KEY = StegoKey(bytes(range(32)))

# frozen vectors for the pinned construction:
# HMAC-SHA256(key, 8-byte BE counter), leading ceil(r/8) bytes BE, >> to r bits
VECTORS_R128 = {
    0: 211413974852188888532654330019437523780,
    1: 260792852388323710725674349183264688182,
    2: 331200189422938781326141095782532033794,
    7: 293857471582719359215798209652473121796,
}


def test_pinned_vectors_r128():
    stream = OffsetStream(KEY)
    for t, k in VECTORS_R128.items():
        assert stream.offset(t) == Q(k, 2**128)


def test_pinned_vector_unaligned_resolution():
    assert OffsetStream(KEY, resolution=13).offset(0) == Q(5089, 2**13)


def test_pinned_vector_single_byte_key():
    assert OffsetStream(StegoKey(b"k"), resolution=8).offset(0) == Q(235, 256)


def test_deterministic():
    stream = OffsetStream(KEY)
    assert stream.offset(42) == stream.offset(42)
    assert stream.offset(42) == OffsetStream(StegoKey(bytes(range(32)))).offset(42)


def test_consecutive_offsets_distinct():
    stream = OffsetStream(KEY)
    seen = {stream.offset(t) for t in range(10_000)}
    assert len(seen) == 10_000


def test_mean_is_near_half():
    stream = OffsetStream(KEY)
    mean = sum(float(stream.offset(t)) for t in range(100_000)) / 100_000
    assert 0.49 <= mean <= 0.51


def test_random_access_order_independent():
    stream = OffsetStream(KEY)
    forward = [stream.offset(t) for t in range(200)]
    backward = [stream.offset(t) for t in reversed(range(200))]
    assert forward == backward[::-1]


def test_range_and_grid():
    stream = OffsetStream(KEY, resolution=16)
    for t in range(100):
        o = stream.offset(t)
        assert 0 <= o < 1
        assert (o * 2**16).denominator == 1  # lies on the dyadic grid


def test_key_separates_streams():
    a = OffsetStream(StegoKey(b"a" * 32))
    b = OffsetStream(StegoKey(b"b" * 32))
    assert a.offset(0) != b.offset(0)


def test_module_function_delegates():
    stream = OffsetStream(KEY)
    assert offset(stream, 3) == stream.offset(3)


def test_validation():
    with pytest.raises(ValueError):
        StegoKey(b"")
    with pytest.raises(ValueError):
        OffsetStream(KEY, resolution=0)
    with pytest.raises(ValueError):
        OffsetStream(KEY, resolution=257)
    with pytest.raises(ValueError):
        OffsetStream(KEY).offset(-1)


def test_from_hex_and_security_parameter():
    key = StegoKey.from_hex("00ff")
    assert key.key_bytes == b"\x00\xff"
    assert key.security_parameter() == 2
