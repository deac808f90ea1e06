"""Measurement harness: entropy, per-step KL, induced-distribution distortion
of the vanilla codec, and a bench matrix over message lengths.

Entropy, capacity and utilization are descriptive and reported in floating
point; KL and distortion back exactness claims and are kept as exact
rationals (a nonzero KL anywhere is a bug detector, not a measurement).
"""

from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import codec_rrc, codec_vanilla
from .errors import StegoError
from .exact import DistributionStep, Interval, rescale, unit_interval
from .keystream import DEFAULT_RESOLUTION, OffsetStream, StegoKey
from .provider import Context, Provider, step_index_of


def step_entropy(step: DistributionStep) -> float:
    """Shannon entropy of the step in bits (reporting only)."""
    return -sum(float(p) * math.log2(float(p)) for p in step.probs)


def rrc_step_kl(
    step: DistributionStep | Sequence[Fraction],
    interval: Interval,
    widths: Sequence[Fraction],
):
    """Divergence between model probs and the sub-interval-width/delta measure.

    Exactly Fraction(0) when the widths are exactly ``delta * p_i`` — which
    the exact-arithmetic invariants guarantee for every honest step — and a
    positive float otherwise. Any nonzero return is a bug detector.
    """
    probs = step.probs if isinstance(step, DistributionStep) else tuple(step)
    if len(widths) != len(probs):
        raise ValueError("widths and probs must have equal length")
    delta = interval.width()
    induced = tuple(Fraction(w) / delta for w in widths)
    if induced == probs:
        return Fraction(0)
    kl = 0.0
    for p, q in zip(probs, induced):
        if q == 0:
            return math.inf
        kl += float(p) * math.log2(float(p) / float(q))
    return kl


def trace_step_kls(trace: codec_rrc.SessionTrace) -> list:
    """Per-step KL for a traced session, via the same arithmetic the codec uses."""
    out = []
    for rec in trace.steps:
        cum = [Fraction(0)]
        for p in rec.probs:
            cum.append(cum[-1] + p)
        edges = [rec.before.lo + rec.delta * c for c in cum]
        widths = [edges[i + 1] - edges[i] for i in range(len(rec.probs))]
        out.append(rrc_step_kl(rec.probs, rec.before, widths))
    return out


@dataclass(frozen=True)
class DistortionRow:
    token: int
    model_prob: Fraction
    induced_prob: Fraction
    diff: Fraction


def analyze_vanilla_distortion(step: DistributionStep, iv: Interval, length: int) -> list[DistortionRow]:
    """Exact induced token probabilities under an integer-uniform message.

    With d uniform over the 2**l integers of iv = [0, 2**l), token i is
    selected with probability (number of integers in its sub-interval)/2**l,
    which generally differs from the model probability.
    """
    if iv != unit_interval(length):
        raise ValueError(f"interval must be [0, 2**{length})")
    scaled = rescale(step, iv).scaled
    total = 1 << length
    rows = []
    for i, tok in enumerate(step.tokens):
        count = math.ceil(scaled[i + 1]) - math.ceil(scaled[i])
        induced = Fraction(count, total)
        rows.append(DistortionRow(tok, step.probs[i], induced, induced - step.probs[i]))
    return rows


@dataclass
class SessionReport:
    """Raw and derived measurements for one embed session."""

    tokens_emitted: int
    message_bits: int
    per_step_entropy: list[float]
    capacity: float  # bits per token
    utilization: float | None  # percent of mean entropy; None when entropy is 0
    elapsed: float  # embed wall-clock seconds
    kl_per_step: list = field(default_factory=list)

    @classmethod
    def build(cls, message_bits, tokens_emitted, per_step_entropy, elapsed, kl_per_step=()):
        capacity = message_bits / tokens_emitted if tokens_emitted else math.nan
        mean_h = statistics.fmean(per_step_entropy) if per_step_entropy else 0.0
        utilization = (capacity / mean_h * 100.0) if mean_h > 0 else None
        return cls(
            tokens_emitted,
            message_bits,
            list(per_step_entropy),
            capacity,
            utilization,
            elapsed,
            list(kl_per_step),
        )

    def to_json(self) -> dict:
        return {
            "tokens_emitted": self.tokens_emitted,
            "message_bits": self.message_bits,
            "per_step_entropy": self.per_step_entropy,
            "capacity": self.capacity,
            "utilization": self.utilization,
            "elapsed": self.elapsed,
            "kl_per_step": [0 if k == 0 else float(k) for k in self.kl_per_step],
        }


def replay_entropies(provider: Provider, ctx: Context, tokens: Sequence[int]) -> list[float]:
    """Per-step entropies along an existing token sequence."""
    ctx = tuple(ctx)
    out = []
    for tok in tokens:
        step = provider.next_distribution(ctx)
        step_index_of(step, tok)  # assert support, same as extraction would
        out.append(step_entropy(step))
        ctx = ctx + (tok,)
    return out


def run_embed_session(
    provider: Provider,
    ctx: Context,
    codec: str,
    length: int,
    message: str,
    key: StegoKey | OffsetStream | None = None,
    compute_kl: bool = False,
) -> tuple[list[int], SessionReport]:
    """Embed once and measure it. Speed covers the embed call only.

    ``compute_kl`` materializes every sub-interval width of every step
    (O(vocab) exact multiplies per step), so it is off for bulk runs.
    """
    if codec == "rrc":
        if key is None:
            raise ValueError("rrc needs a key")
        t0 = time.perf_counter()
        tokens, trace = codec_rrc.embed_rrc_traced(provider, ctx, key, length, message)
        elapsed = time.perf_counter() - t0
        entropies = [step_entropy_from_probs(rec.probs) for rec in trace.steps]
        kls = trace_step_kls(trace) if compute_kl else []
    elif codec == "vanilla":
        if key is not None:
            raise ValueError("vanilla takes no key")
        t0 = time.perf_counter()
        tokens = codec_vanilla.embed_vanilla(provider, ctx, length, message)
        elapsed = time.perf_counter() - t0
        entropies = replay_entropies(provider, ctx, tokens)
        kls = []
    else:
        raise ValueError(f"unknown codec {codec!r}")
    return tokens, SessionReport.build(length, len(tokens), entropies, elapsed, kls)


def step_entropy_from_probs(probs: Sequence[Fraction]) -> float:
    return -sum(float(p) * math.log2(float(p)) for p in probs)


@dataclass
class BenchRecord:
    """Aggregates over the trials of one message length."""

    length: int
    trials: int
    failures: int
    mean_capacity: float
    median_capacity: float
    mean_utilization: float
    mean_speed: float  # bits per second, embed wall-clock
    mean_runtime: float  # embed seconds
    mean_tokens: float

    def to_json(self) -> dict:
        return self.__dict__.copy()


def bench(
    provider: Provider,
    ctx: Context,
    codec: str,
    lengths: Sequence[int],
    trials: int,
    *,
    seed: int,
    key_bytes: int = 32,
    resolution: int = DEFAULT_RESOLUTION,
) -> list[BenchRecord]:
    """Run the bench matrix: ``trials`` seeded sessions per message length.

    Each trial embeds a fresh random message under a fresh random key and
    verifies extraction; per-trial codec errors are counted as failures
    rather than aborting the matrix. Trials run in a deterministic order,
    so the aggregation is reproducible from the seed.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = random.Random(seed)
    records = []
    for length in lengths:
        caps, utils, speeds, runtimes, ntokens = [], [], [], [], []
        failures = 0
        for _ in range(trials):
            key = OffsetStream(StegoKey(rng.randbytes(key_bytes)), resolution)
            message = format(rng.getrandbits(length), f"0{length}b")
            try:
                tokens, report = run_embed_session(
                    provider, ctx, codec, length, message,
                    key=key if codec == "rrc" else None,
                )
                if codec == "rrc":
                    back = codec_rrc.extract_rrc(provider, ctx, key, length, tokens)
                else:
                    back = codec_vanilla.extract_vanilla(provider, ctx, length, tokens)
                if back != message:
                    failures += 1
                    continue
            except StegoError:
                failures += 1
                continue
            caps.append(report.capacity)
            if report.utilization is not None:
                utils.append(report.utilization)
            speeds.append(length / report.elapsed if report.elapsed > 0 else math.inf)
            runtimes.append(report.elapsed)
            ntokens.append(len(tokens))
        ok = trials - failures
        records.append(
            BenchRecord(
                length=length,
                trials=trials,
                failures=failures,
                mean_capacity=statistics.fmean(caps) if caps else math.nan,
                median_capacity=statistics.median(caps) if caps else math.nan,
                mean_utilization=statistics.fmean(utils) if utils else math.nan,
                mean_speed=statistics.fmean(speeds) if speeds else math.nan,
                mean_runtime=statistics.fmean(runtimes) if runtimes else math.nan,
                mean_tokens=statistics.fmean(ntokens) if ntokens else math.nan,
            )
        )
    return records
