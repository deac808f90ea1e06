"""Exact rational arithmetic for interval coding.

Every probability, interval endpoint and rotated message value in this
package is a ``fractions.Fraction``: arithmetic never rounds, equality and
ordering compare by cross-multiplication, and values are canonically
reduced. ``ExactNumber`` is an alias so signatures read like the domain.

All values here are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import StegoError

ExactNumber = Fraction

HALF = Fraction(1, 2)

RawProb = "str | int | Fraction"


class AllZero(StegoError, ValueError):
    """Every raw probability was zero."""


class OutOfRange(StegoError, ValueError):
    """Point to locate lies outside the rescaled interval."""


class Overflow(StegoError, ValueError):
    """Integer does not fit in the requested bit length."""


@dataclass(frozen=True)
class Interval:
    """Half-open exact range [lo, hi) with lo < hi."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x: Fraction) -> bool:
        return self.lo <= x < self.hi


def unit_interval(bits: int) -> Interval:
    """The initial interval [0, 2**bits) for a bits-long message."""
    return Interval(Fraction(0), Fraction(2**bits))


@dataclass(frozen=True)
class DistributionStep:
    """One generative step: token ids, exact probabilities, cumulative scale.

    ``probs`` sum to exactly 1 and are all positive (zero entries are pruned
    together with their token ids before construction). ``cum`` has length
    ``len(tokens) + 1``, starts at 0, ends at 1 and is strictly increasing.
    ``scaled`` is populated by :func:`rescale` and maps ``cum`` onto a
    concrete interval.
    """

    tokens: tuple[int, ...]
    probs: tuple[Fraction, ...]
    cum: tuple[Fraction, ...]
    scaled: tuple[Fraction, ...] | None = None

    def support_size(self) -> int:
        return len(self.tokens)


def normalize(raw_probs: Sequence[RawProb], tokens: Sequence[int] | None = None) -> DistributionStep:
    """Build a DistributionStep from raw nonnegative weights.

    Weights may arrive as decimal strings (the cross-boundary format),
    integers or Fractions. Zero-weight entries are pruned together with
    their token ids; the rest are divided by their exact sum, so the result
    sums to exactly 1 regardless of what the weights summed to.
    """
    if tokens is None:
        tokens = range(len(raw_probs))
    if len(tokens) != len(raw_probs):
        raise ValueError("tokens and raw_probs must have equal length")
    kept_tokens: list[int] = []
    kept: list[Fraction] = []
    for tok, raw in zip(tokens, raw_probs):
        p = Fraction(raw)
        if p < 0:
            raise ValueError(f"negative probability {raw!r} for token {tok}")
        if p > 0:
            kept_tokens.append(int(tok))
            kept.append(p)
    if not kept:
        raise AllZero("all probabilities are zero")
    total = sum(kept)
    probs = tuple(p / total for p in kept)
    cum = [Fraction(0)]
    for p in probs:
        cum.append(cum[-1] + p)
    return DistributionStep(tuple(kept_tokens), probs, tuple(cum))


def rescale(step: DistributionStep, iv: Interval) -> DistributionStep:
    """Map the cumulative scale onto ``iv``: scaled[i] = lo + width * cum[i].

    Sub-interval i then has width exactly ``iv.width() * probs[i]``, with
    scaled[0] == iv.lo and scaled[-1] == iv.hi.
    """
    delta = iv.width()
    scaled = tuple(iv.lo + delta * c for c in step.cum)
    return DistributionStep(step.tokens, step.probs, step.cum, scaled)


def locate(step: DistributionStep, d: Fraction) -> int:
    """Index i of the sub-interval [scaled[i], scaled[i+1]) containing d."""
    if step.scaled is None:
        raise ValueError("locate requires a rescaled step")
    scaled = step.scaled
    if not scaled[0] <= d < scaled[-1]:
        raise OutOfRange(f"{d} outside [{scaled[0]}, {scaled[-1]})")
    return bisect_right(scaled, d) - 1


def narrow(step: DistributionStep, iv: Interval, d: Fraction) -> tuple[int, Interval]:
    """Locate d within iv and return (index, selected sub-interval).

    Equivalent to ``rescale`` + ``locate`` + reading off the sub-interval,
    but does a single exact division into unit space instead of scaling the
    whole cumulative vector, which matters once interval endpoints carry
    thousands of bits.
    """
    if d not in iv:
        raise OutOfRange(f"{d} outside [{iv.lo}, {iv.hi})")
    u = (d - iv.lo) / iv.width()
    i = bisect_right(step.cum, u) - 1
    if i >= len(step.probs):  # u == 1 cannot happen for d < hi, but guard anyway
        i = len(step.probs) - 1
    return i, subinterval(step, iv, i)


def subinterval(step: DistributionStep, iv: Interval, i: int) -> Interval:
    """The i-th sub-interval of iv under the step's cumulative scale."""
    delta = iv.width()
    return Interval(iv.lo + delta * step.cum[i], iv.lo + delta * step.cum[i + 1])


def round_half_down(x: Fraction) -> int:
    """Nearest integer to x >= 0; exact halves round toward the smaller integer."""
    if x < 0:
        raise ValueError("round_half_down requires x >= 0")
    return math.ceil(x - HALF)


def bits_to_decimal(bits: str) -> int:
    """Big-endian integer value of a bit-string ('' -> 0)."""
    if any(c not in "01" for c in bits):
        raise ValueError(f"not a bit-string: {bits!r}")
    return int(bits, 2) if bits else 0


def decimal_to_bits(d: int, length: int) -> str:
    """Big-endian bit-string of d, left-padded with zeros to exactly ``length`` bits."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    if d >= (1 << length):
        raise Overflow(f"{d} does not fit in {length} bits")
    return format(d, f"0{length}b") if length else ""
