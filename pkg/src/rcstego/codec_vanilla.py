"""Vanilla range-coding steganography.

The message is decimalized to d and the interval [0, 2**l) is narrowed to
the sub-interval containing d at every step, emitting the corresponding
token, until the interval midpoint rounds to d exactly. Extraction replays
the narrowing along the received tokens and rounds the final midpoint.

Kept as a working baseline: with an integer-uniform message the induced
token-selection probability generally differs from the model probability
(see metrics.analyze_vanilla_distortion), so this codec is not
distribution-preserving. No security hardening is attempted here.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import CodecError
from .exact import (
    HALF,
    Interval,
    bits_to_decimal,
    decimal_to_bits,
    narrow,
    round_half_down,
    subinterval,
    unit_interval,
)
from .provider import Context, Provider, step_index_of

MAX_STEP_FACTOR = 64  # a near-zero-entropy provider may never terminate


class MaxStepsExceeded(CodecError):
    """Step cap hit; the provider's entropy is too low to terminate."""


class InvalidStegotext(CodecError):
    """Stegotext cannot be decoded at all (e.g. empty token list)."""


def embed_vanilla(provider: Provider, ctx: Context, length: int, message: str) -> list[int]:
    """Embed an l-bit message, returning the emitted token ids."""
    if len(message) != length:
        raise ValueError(f"message has {len(message)} bits, expected {length}")
    d = Fraction(bits_to_decimal(message))
    iv = unit_interval(length)
    ctx = tuple(ctx)
    out: list[int] = []
    max_steps = MAX_STEP_FACTOR * length
    while round_half_down(iv.midpoint()) != d:
        if len(out) >= max_steps:
            raise MaxStepsExceeded(f"no termination after {max_steps} steps")
        step = provider.next_distribution(ctx)
        i, iv = narrow(step, iv, d)
        out.append(step.tokens[i])
        ctx = ctx + (step.tokens[i],)
    return out


def extract_vanilla(provider: Provider, ctx: Context, length: int, tokens: list[int]) -> str:
    """Recover the l-bit message from tokens produced by embed_vanilla."""
    iv = unit_interval(length)
    ctx = tuple(ctx)
    for tok in tokens:
        step = provider.next_distribution(ctx)
        i = step_index_of(step, tok)
        iv = subinterval(step, iv, i)
        ctx = ctx + (tok,)
    return decimal_to_bits(round_half_down(iv.midpoint()), length)


def replay_intervals(provider: Provider, ctx: Context, length: int, tokens: list[int]) -> list[Interval]:
    """Successive narrowed intervals along a token sequence (for analysis)."""
    iv = unit_interval(length)
    ctx = tuple(ctx)
    out = []
    for tok in tokens:
        step = provider.next_distribution(ctx)
        iv = subinterval(step, iv, step_index_of(step, tok))
        out.append(iv)
        ctx = ctx + (tok,)
    return out
