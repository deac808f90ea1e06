"""Rotation range-coding steganography.

Like the vanilla codec this narrows an exact interval to the sub-interval
containing the message value, but before each selection the value is
rotated by a fresh keyed offset:

    d' = L + (d - L + o*delta) mod delta

which makes the selection point uniform over the current interval, so each
token is chosen with exactly its model probability (zero per-step KL), and
no randomness is ever reused across steps.

Extraction replays the interval narrowing along the received tokens, then
inverts the rotations back-to-front. The inverse rotation is a rotation of
a circle, so the receiver's width-1 uncertainty window around the final
midpoint is pulled back as a *set*: fragments that straddle the interval
boundary wrap around it. Collecting the integers left in the final set
recovers the message; pulling back only the midpoint (and rounding) would
silently mis-extract whenever a fragment wraps.

The embedder's stop rule makes this exact: it stops only when (a) the new
interval's midpoint is within (-0.5, 0.5] of the rotated value, and (b) a
decode simulation over the tokens emitted so far recovers exactly the
embedded message. Without (b), distinct messages can collide into
byte-identical stegotext; with it, extraction is unique by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .codec_vanilla import MAX_STEP_FACTOR, InvalidStegotext, MaxStepsExceeded
from .errors import CodecError
from .exact import (
    HALF,
    Interval,
    bits_to_decimal,
    decimal_to_bits,
    narrow,
    subinterval,
    unit_interval,
)
from .keystream import OffsetStream, StegoKey
from .provider import Context, Provider, step_index_of


class MessageOutOfRange(CodecError):
    """No valid message value is consistent with the stegotext.

    Signals a key or provider mismatch between sender and receiver.
    """


class AmbiguousStegotext(CodecError):
    """More than one message value is consistent with the stegotext.

    Cannot occur for stegotext produced by embed_rrc with matching key and
    provider; signals a mismatch.
    """


@dataclass(frozen=True)
class StepRecord:
    """One step of a session, as needed to replay and invert it."""

    before: Interval  # interval entering the step
    delta: Fraction  # before.width()
    token_index: int  # chosen index within the step's pruned support
    offset_index: int  # step number t, the keystream counter
    after: Interval  # selected sub-interval
    probs: tuple[Fraction, ...]  # the step's distribution
    rotated: Fraction | None = None  # d after rotation; known on the embed side only


@dataclass
class SessionTrace:
    steps: list[StepRecord]

    def __len__(self) -> int:
        return len(self.steps)


def _as_stream(key: StegoKey | OffsetStream) -> OffsetStream:
    return key if isinstance(key, OffsetStream) else OffsetStream(key)


def rotate(d_prev: Fraction, iv_prev: Interval, o: Fraction) -> Fraction:
    """Keyed modular shift of d_prev within iv_prev; result stays inside."""
    if d_prev not in iv_prev:
        raise ValueError(f"{d_prev} outside {iv_prev}")
    if not 0 <= o < 1:
        raise ValueError(f"offset {o} outside [0, 1)")
    delta = iv_prev.width()
    return iv_prev.lo + (d_prev - iv_prev.lo + o * delta) % delta


def rotate_inverse(m: Fraction, iv_prev: Interval, o: Fraction) -> Fraction:
    """Exact inverse of rotate on the same interval and offset."""
    if m not in iv_prev:
        raise ValueError(f"{m} outside {iv_prev}")
    if not 0 <= o < 1:
        raise ValueError(f"offset {o} outside [0, 1)")
    delta = iv_prev.width()
    return iv_prev.lo + (m - iv_prev.lo - o * delta) % delta


def _pullback_fragments(
    stream: OffsetStream, steps: list[StepRecord], final: Interval
) -> list[tuple[Fraction, Fraction]]:
    """Invert all rotations applied to the final uncertainty window.

    The window [mid - 1/2, mid + 1/2) intersected with the final interval is
    carried back through each step's inverse rotation on the circle of that
    step's entry interval; a fragment crossing the circle's cut splits in two.
    Fragment widths are preserved, so the total measure never exceeds 1.
    """
    mid = final.midpoint()
    frags = [(max(final.lo, mid - HALF), min(final.hi, mid + HALF))]
    for rec in reversed(steps):
        lo, delta = rec.before.lo, rec.delta
        shift = stream.offset(rec.offset_index) * delta
        out = []
        for a, b in frags:
            w = b - a
            a2 = lo + (a - lo - shift) % delta
            if a2 + w <= lo + delta:
                out.append((a2, a2 + w))
            else:
                out.append((a2, lo + delta))
                out.append((lo, a2 + w - delta))
        frags = out
    return frags


def _integer_candidates(frags: list[tuple[Fraction, Fraction]]) -> list[int]:
    cands = set()
    for a, b in frags:
        n = math.ceil(a)
        while n < b:
            cands.add(n)
            n += 1
    return sorted(cands)


def embed_rrc_traced(
    provider: Provider,
    ctx: Context,
    key: StegoKey | OffsetStream,
    length: int,
    message: str,
) -> tuple[list[int], SessionTrace]:
    if len(message) != length:
        raise ValueError(f"message has {len(message)} bits, expected {length}")
    if length < 1:
        raise ValueError("length must be >= 1")
    stream = _as_stream(key)
    m_int = bits_to_decimal(message)
    d = Fraction(m_int)
    iv = unit_interval(length)
    ctx = tuple(ctx)
    out: list[int] = []
    steps: list[StepRecord] = []
    max_steps = MAX_STEP_FACTOR * length
    t = 0
    while True:
        if t >= max_steps:
            raise MaxStepsExceeded(f"no termination after {max_steps} steps")
        dist = provider.next_distribution(ctx)
        before = iv
        d = rotate(d, before, stream.offset(t))
        i, iv = narrow(dist, before, d)
        steps.append(
            StepRecord(before, before.width(), i, t, iv, dist.probs, rotated=d)
        )
        out.append(dist.tokens[i])
        ctx = ctx + (dist.tokens[i],)
        t += 1
        if -HALF < iv.midpoint() - d <= HALF:
            if _integer_candidates(_pullback_fragments(stream, steps, iv)) == [m_int]:
                break
    return out, SessionTrace(steps)


def embed_rrc(
    provider: Provider, ctx: Context, key: StegoKey | OffsetStream, length: int, message: str
) -> list[int]:
    """Embed an l-bit message under the shared key; returns emitted token ids."""
    tokens, _ = embed_rrc_traced(provider, ctx, key, length, message)
    return tokens


def extract_rrc_traced(
    provider: Provider,
    ctx: Context,
    key: StegoKey | OffsetStream,
    length: int,
    tokens: list[int],
) -> tuple[str, SessionTrace]:
    if not tokens:
        raise InvalidStegotext("empty stegotext")
    stream = _as_stream(key)
    iv = unit_interval(length)
    ctx = tuple(ctx)
    steps: list[StepRecord] = []
    for t, tok in enumerate(tokens):
        dist = provider.next_distribution(ctx)
        i = step_index_of(dist, tok)
        before = iv
        iv = subinterval(dist, before, i)
        steps.append(StepRecord(before, before.width(), i, t, iv, dist.probs))
        ctx = ctx + (tok,)
    cands = _integer_candidates(_pullback_fragments(stream, steps, iv))
    if not cands:
        raise MessageOutOfRange("no message value is consistent with this stegotext")
    if len(cands) > 1:
        raise AmbiguousStegotext(f"{len(cands)} message values are consistent")
    return decimal_to_bits(cands[0], length), SessionTrace(steps)


def extract_rrc(
    provider: Provider, ctx: Context, key: StegoKey | OffsetStream, length: int, tokens: list[int]
) -> str:
    """Recover the l-bit message from tokens produced by embed_rrc."""
    bits, _ = extract_rrc_traced(provider, ctx, key, length, tokens)
    return bits
