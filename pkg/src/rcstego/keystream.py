"""Keyed offset stream: deterministic o(t) ~ U(0,1) as exact dyadic rationals.

The construction is pinned byte-for-byte because sender and receiver (and
independent implementations) must agree on every offset:

    counter = 8-byte big-endian unsigned step index t
    mac     = HMAC-SHA256(key_bytes, counter)
    k       = int.from_bytes(mac[:ceil(r/8)], 'big') >> (8*ceil(r/8) - r)
    o(t)    = k / 2**r

with r the resolution (default 128, at most 256). Offsets are a pure
function of (key, t): any query order — forward for embedding, reverse for
extraction — yields identical values.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass
from fractions import Fraction

DEFAULT_RESOLUTION = 128
_MAX_RESOLUTION = 256  # one SHA-256 digest


@dataclass(frozen=True)
class StegoKey:
    """Shared symmetric key; its byte length is the security parameter."""

    key_bytes: bytes

    def __post_init__(self) -> None:
        if not self.key_bytes:
            raise ValueError("key must be non-empty")

    @classmethod
    def from_hex(cls, s: str) -> "StegoKey":
        return cls(bytes.fromhex(s))

    def security_parameter(self) -> int:
        return len(self.key_bytes)


@dataclass(frozen=True)
class OffsetStream:
    """Counter-mode keyed PRF producing the per-step rotation offsets."""

    key: StegoKey
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self) -> None:
        if not 1 <= self.resolution <= _MAX_RESOLUTION:
            raise ValueError(f"resolution must be in [1, {_MAX_RESOLUTION}]")

    def offset(self, t: int) -> Fraction:
        """The offset at step t, in [0, 1), on the 2**-resolution grid."""
        if t < 0:
            raise ValueError("step index must be nonnegative")
        mac = hmac.new(self.key.key_bytes, struct.pack(">Q", t), hashlib.sha256).digest()
        nbytes = (self.resolution + 7) // 8
        k = int.from_bytes(mac[:nbytes], "big") >> (8 * nbytes - self.resolution)
        return Fraction(k, 1 << self.resolution)


def offset(stream: OffsetStream, t: int) -> Fraction:
    return stream.offset(t)
