import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from rcstego.codec_rrc import (
    AmbiguousStegotext,
    InvalidStegotext,
    MaxStepsExceeded,
    MessageOutOfRange,
    embed_rrc,
    embed_rrc_traced,
    extract_rrc,
    rotate,
    rotate_inverse,
)
from rcstego.errors import CodecError
from rcstego.exact import HALF, Interval, decimal_to_bits, unit_interval
from rcstego.fixtures import mixed_table_provider, uniform_binary_provider
from rcstego.keystream import OffsetStream, StegoKey
from rcstego.provider import NgramModel, NgramProvider, TableProvider

KEY = StegoKey(bytes(range(32)))


def rng_key(rng):
    return StegoKey(rng.randbytes(32))


class TestRotation:
    def test_zero_offset_is_identity(self):
        iv = Interval(Q(3), Q(13))
        assert rotate(Q(5), iv, Q(0)) == 5
        assert rotate_inverse(Q(5), iv, Q(0)) == 5

    def test_forward_example(self):
        assert rotate(Q(7), Interval(Q(0), Q(10)), Q(1, 2)) == 2

    def test_inverse_example(self):
        assert rotate_inverse(Q(2), Interval(Q(0), Q(10)), Q(1, 2)) == 7

    @given(
        st.fractions(min_value=-50, max_value=50),
        st.fractions(min_value=Q(1, 100), max_value=50),
        st.fractions(min_value=0, max_value=Q(999, 1000)),
        st.fractions(min_value=0, max_value=Q(999, 1000)),
    )
    def test_inverse_composition(self, lo, width, u, o):
        iv = Interval(lo, lo + width)
        d = iv.lo + iv.width() * u
        assert rotate_inverse(rotate(d, iv, o), iv, o) == d
        assert rotate(rotate_inverse(d, iv, o), iv, o) == d

    @given(
        st.fractions(min_value=-50, max_value=50),
        st.fractions(min_value=Q(1, 100), max_value=50),
        st.fractions(min_value=0, max_value=Q(999, 1000)),
        st.fractions(min_value=0, max_value=Q(999, 1000)),
    )
    def test_result_stays_in_interval(self, lo, width, u, o):
        iv = Interval(lo, lo + width)
        d = iv.lo + iv.width() * u
        assert rotate(d, iv, o) in iv

    def test_preconditions(self):
        iv = Interval(Q(0), Q(1))
        with pytest.raises(ValueError):
            rotate(Q(2), iv, Q(0))
        with pytest.raises(ValueError):
            rotate(Q(1, 2), iv, Q(1))
        with pytest.raises(ValueError):
            rotate_inverse(Q(1, 2), iv, Q(-1, 2))


class TestRoundTrip:
    @pytest.mark.parametrize("length", [1, 2, 8, 16, 64])
    def test_mixed_table(self, length):
        prov = mixed_table_provider()
        rng = random.Random(length)
        for _ in range(30):
            key = rng_key(rng)
            bits = decimal_to_bits(rng.randrange(2**length), length)
            assert extract_rrc(prov, (), key, length, embed_rrc(prov, (), key, length, bits)) == bits

    def test_ngram_provider(self):
        model = NgramModel.train("the quick brown fox jumps over the lazy dog. " * 3, order=1, k=1)
        prov = NgramProvider(model)
        ctx = model.encode_text("the")
        rng = random.Random(99)
        for _ in range(20):
            key = rng_key(rng)
            bits = decimal_to_bits(rng.randrange(2**32), 32)
            assert extract_rrc(prov, ctx, key, 32, embed_rrc(prov, ctx, key, 32, bits)) == bits

    def test_custom_resolution_roundtrip(self):
        prov = mixed_table_provider()
        stream = OffsetStream(KEY, resolution=64)
        bits = "1011001110001111"
        tokens = embed_rrc(prov, (), stream, 16, bits)
        assert extract_rrc(prov, (), stream, 16, tokens) == bits

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 20).flatmap(lambda l: st.tuples(st.just(l), st.integers(0, 2**l - 1), st.binary(min_size=8, max_size=16))))
    def test_roundtrip_property(self, triple):
        length, d, key_bytes = triple
        prov = mixed_table_provider()
        key = StegoKey(key_bytes)
        bits = decimal_to_bits(d, length)
        assert extract_rrc(prov, (), key, length, embed_rrc(prov, (), key, length, bits)) == bits


class TestBehavior:
    def test_binary_uniform_token_budget(self):
        # one bit of entropy per step: l=16 needs at most 16 tokens; the mean
        # sits near 14.4 because the midpoint test fires early with prob ~1/width
        prov = uniform_binary_provider()
        rng = random.Random(7)
        counts = []
        for _ in range(300):
            key = rng_key(rng)
            bits = decimal_to_bits(rng.randrange(2**16), 16)
            counts.append(len(embed_rrc(prov, (), key, 16, bits)))
        assert max(counts) <= 16
        assert 14.0 <= sum(counts) / len(counts) <= 16.0

    def test_termination_predicate_on_trace(self):
        # whenever an interval reaches width <= 1, the midpoint predicate holds
        prov = mixed_table_provider()
        rng = random.Random(13)
        for _ in range(50):
            key = rng_key(rng)
            bits = decimal_to_bits(rng.randrange(2**12), 12)
            _, trace = embed_rrc_traced(prov, (), key, 12, bits)
            for rec in trace.steps:
                if rec.after.width() <= 1:
                    assert -HALF < rec.after.midpoint() - rec.rotated <= HALF
            last = trace.steps[-1]
            assert -HALF < last.after.midpoint() - last.rotated <= HALF

    def test_trace_structure(self):
        prov = mixed_table_provider()
        tokens, trace = embed_rrc_traced(prov, (), KEY, 16, "0100111011111011")
        assert len(trace) == len(tokens)
        iv = unit_interval(16)
        for t, rec in enumerate(trace.steps):
            assert rec.offset_index == t
            assert rec.before == iv
            assert rec.delta == iv.width()
            assert rec.rotated in rec.after
            assert rec.after.lo >= rec.before.lo and rec.after.hi <= rec.before.hi
            iv = rec.after

    def test_interval_shrinkage_law(self):
        # width after t steps == 2**l * product of chosen-token probabilities
        prov = mixed_table_provider()
        _, trace = embed_rrc_traced(prov, (), KEY, 24, decimal_to_bits(11184810, 24))
        product = Q(1)
        for rec in trace.steps:
            product *= rec.probs[rec.token_index]
            assert rec.after.width() == Q(2**24) * product

    def test_zero_entropy_provider_exceeds_step_cap(self):
        one_token = TableProvider([((0,), ["1"])], cycle=True)
        with pytest.raises(MaxStepsExceeded):
            embed_rrc(one_token, (), KEY, 32, "0" * 32)

    def test_empty_stegotext_rejected(self):
        with pytest.raises(InvalidStegotext):
            extract_rrc(mixed_table_provider(), (), KEY, 8, [])

    def test_message_length_validated(self):
        with pytest.raises(ValueError):
            embed_rrc(mixed_table_provider(), (), KEY, 8, "01")

    def test_wrong_key_mismatches(self):
        prov = mixed_table_provider()
        bits = "1100101001011100"
        tokens = embed_rrc(prov, (), KEY, 16, bits)
        rng = random.Random(5)
        matches = 0
        out_of_range = 0
        for _ in range(100):
            wrong = OffsetStream(rng_key(rng))
            try:
                matches += extract_rrc(prov, (), wrong, 16, tokens) == bits
            except MessageOutOfRange:
                out_of_range += 1
            except AmbiguousStegotext:
                pass
        assert matches == 0  # chance of a hit is ~100 * 2**-16
        assert out_of_range > 0  # empty candidate sets do occur and are diagnosed

    def test_wrong_provider_is_codec_or_support_error(self):
        tokens = embed_rrc(mixed_table_provider(), (), KEY, 16, "0011010111110000")
        other = uniform_binary_provider()
        try:
            got = extract_rrc(other, (), KEY, 16, tokens)
        except Exception as e:
            assert isinstance(e, CodecError) or "support" in str(e)
        else:
            assert got != "0011010111110000"
