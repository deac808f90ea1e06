"""Small deterministic fixtures shared by tests, docs and the CLI demos."""

from __future__ import annotations

from .exact import DistributionStep, normalize
from .provider import TableProvider

# Low-entropy 4-token demo distribution: one dominant continuation.
DEMO_TOKEN_TEXT = {0: "coli", 1: "doco", 2: "sterol", 3: "bacteria"}
DEMO_PROBS = ("0.65", "0.20", "0.10", "0.05")


def demo_step() -> DistributionStep:
    return normalize(DEMO_PROBS, tuple(DEMO_TOKEN_TEXT))


def uniform_binary_provider() -> TableProvider:
    """Two equiprobable tokens forever: exactly 1 bit of entropy per step."""
    return TableProvider([((0, 1), ("0.5", "0.5"))], cycle=True)


def mixed_table_provider() -> TableProvider:
    """A fixed cycle of skewed, binary and non-dyadic steps."""
    return TableProvider(
        [
            ((0, 1, 2, 3), DEMO_PROBS),
            ((0, 1), ("0.3", "0.7")),
            ((0, 1, 2), ("1", "1", "1")),  # exact thirds after normalization
        ],
        cycle=True,
    )
