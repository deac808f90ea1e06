import math
from fractions import Fraction as Q

import pytest
from hypothesis import given, strategies as st

from rcstego.exact import (
    AllZero,
    DistributionStep,
    Interval,
    OutOfRange,
    Overflow,
    bits_to_decimal,
    decimal_to_bits,
    locate,
    narrow,
    normalize,
    rescale,
    round_half_down,
    subinterval,
    unit_interval,
)


def weights(draw_ints):
    return st.lists(st.integers(0, 100), min_size=1, max_size=12).filter(lambda w: sum(w) > 0)


steps = st.lists(st.integers(0, 100), min_size=1, max_size=12).filter(
    lambda w: sum(w) > 0
).map(normalize)

intervals = st.tuples(
    st.fractions(min_value=-100, max_value=100),
    st.fractions(min_value=Q(1, 1000), max_value=100),
).map(lambda t: Interval(t[0], t[0] + t[1]))


class TestNormalize:
    def test_symmetric(self):
        step = normalize(["0.5", "0.5"])
        assert step.probs == (Q(1, 2), Q(1, 2))
        assert step.cum == (0, Q(1, 2), 1)

    def test_skewed_top4(self):
        step = normalize(["0.65", "0.20", "0.10", "0.05"])
        assert step.cum == (0, Q(13, 20), Q(17, 20), Q(19, 20), 1)

    def test_renormalizes_by_exact_sum(self):
        # oracle: each weight divided by the exact total
        raw = ["0.3", "0.3", "0.3"]
        total = sum(Q(x) for x in raw)
        step = normalize(raw)
        assert step.probs == tuple(Q(x) / total for x in raw)
        assert step.probs == (Q(1, 3), Q(1, 3), Q(1, 3))

    def test_prunes_zeros_with_their_tokens(self):
        step = normalize(["0.5", "0", "0.5"], tokens=[5, 6, 7])
        assert step.tokens == (5, 7)
        assert step.probs == (Q(1, 2), Q(1, 2))

    def test_all_zero(self):
        with pytest.raises(AllZero):
            normalize(["0", "0"])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            normalize(["-0.1", "1"])

    @given(steps)
    def test_invariants(self, step):
        assert sum(step.probs) == 1
        assert step.cum[0] == 0 and step.cum[-1] == 1
        assert all(a < b for a, b in zip(step.cum, step.cum[1:]))
        assert all(p > 0 for p in step.probs)


class TestRescaleLocate:
    def test_top4_on_16bit_interval(self):
        step = rescale(normalize(["0.65", "0.20", "0.10", "0.05"]), unit_interval(16))
        assert step.scaled[0] == 0
        assert step.scaled[1] == Q(212992, 5)  # 42598.4
        assert step.scaled[-1] == 65536

    def test_symmetric_width2(self):
        step = rescale(normalize(["0.5", "0.5"]), Interval(Q(10), Q(12)))
        assert step.scaled == (10, 11, 12)

    def test_identity_interval(self):
        step = rescale(normalize(["0.25", "0.75"]), Interval(Q(0), Q(1)))
        assert step.scaled == (0, Q(1, 4), 1)

    def test_locate_in_dominant_subinterval(self):
        step = rescale(normalize(["0.65", "0.20", "0.10", "0.05"]), unit_interval(16))
        assert locate(step, Q(20219)) == 0

    def test_locate_halfopen_boundary(self):
        step = rescale(normalize(["0.5", "0.5"]), Interval(Q(0), Q(1)))
        assert locate(step, Q(1, 2)) == 1

    def test_locate_out_of_range(self):
        step = rescale(normalize(["0.5", "0.5"]), Interval(Q(0), Q(1)))
        with pytest.raises(OutOfRange):
            locate(step, Q(1))
        with pytest.raises(OutOfRange):
            locate(step, Q(-1, 10))

    def test_locate_requires_scaled(self):
        with pytest.raises(ValueError):
            locate(normalize(["1"]), Q(0))

    @given(steps, intervals, st.fractions(min_value=0, max_value=Q(999, 1000)))
    def test_locate_agrees_with_linear_scan(self, step, iv, u):
        d = iv.lo + iv.width() * u
        scaled = rescale(step, iv)
        i = locate(scaled, d)
        scan = [j for j in range(len(step.probs))
                if scaled.scaled[j] <= d < scaled.scaled[j + 1]]
        assert scan == [i]

    @given(steps, intervals)
    def test_subinterval_widths_are_exact_shares(self, step, iv):
        # algebraic core: widths sum to the full width and split it as probs
        scaled = rescale(step, iv)
        widths = [b - a for a, b in zip(scaled.scaled, scaled.scaled[1:])]
        assert sum(widths) == iv.width()
        assert tuple(w / iv.width() for w in widths) == step.probs
        assert scaled.scaled[0] == iv.lo and scaled.scaled[-1] == iv.hi

    @given(steps, intervals, st.fractions(min_value=0, max_value=Q(999, 1000)))
    def test_narrow_matches_rescale_locate(self, step, iv, u):
        d = iv.lo + iv.width() * u
        i, sub = narrow(step, iv, d)
        assert i == locate(rescale(step, iv), d)
        assert sub == subinterval(step, iv, i)
        assert d in sub


class TestInterval:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Interval(Q(1), Q(1))

    def test_contains_halfopen(self):
        iv = Interval(Q(0), Q(2))
        assert Q(0) in iv and Q(2) not in iv

    def test_width_midpoint(self):
        iv = Interval(Q(3), Q(8))
        assert iv.width() == 5 and iv.midpoint() == Q(11, 2)


class TestRounding:
    @pytest.mark.parametrize(
        "x,expected",
        [(Q(5, 2), 2), (Q(24999, 10000), 2), (Q(25001, 10000), 3), (Q(7, 2), 3), (Q(0), 0)],
    )
    def test_examples(self, x, expected):
        assert round_half_down(x) == expected

    @given(st.integers(0, 10**9))
    def test_exact_halves_round_down(self, n):
        assert round_half_down(n + Q(1, 2)) == n

    @given(st.fractions(min_value=0, max_value=10**6))
    def test_nearest_integer(self, x):
        r = round_half_down(x)
        assert abs(x - r) <= Q(1, 2)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            round_half_down(Q(-1, 2))


class TestBits:
    def test_16bit_message(self):
        assert bits_to_decimal("0100111011111011") == 20219
        assert decimal_to_bits(20219, 16) == "0100111011111011"

    def test_zero(self):
        assert bits_to_decimal("0" * 12) == 0
        assert decimal_to_bits(0, 12) == "0" * 12

    def test_exhaustive_8bit_roundtrip(self):
        for d in range(256):
            assert bits_to_decimal(decimal_to_bits(d, 8)) == d

    @given(st.integers(1, 64).flatmap(lambda l: st.tuples(st.just(l), st.integers(0, 2**l - 1))))
    def test_roundtrip(self, pair):
        l, d = pair
        bits = decimal_to_bits(d, l)
        assert len(bits) == l
        assert bits_to_decimal(bits) == d

    def test_overflow(self):
        with pytest.raises(Overflow):
            decimal_to_bits(256, 8)

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            bits_to_decimal("01x0")
