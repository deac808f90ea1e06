"""Next-token distribution providers.

A provider stands in for the language model: given a context (prompt plus
tokens generated so far, as opaque integer ids) it returns a normalized
DistributionStep, deterministically — identical (provider, context) must
yield identical output, byte-exact. Three kinds exist:

* ``TableProvider`` — a scripted fixture, indexed by step number.
* ``NgramProvider`` — a trained character/word n-gram model with add-k
  smoothing; the desk-scale stand-in for a neural model.
* ``RemoteProvider`` — a client for the line-delimited JSON wire protocol
  (see docs/protocol.md), behind which a real model process can sit.

Probabilities cross process boundaries as decimal strings, never as binary
floats; in-process providers hand exact rationals straight to
:func:`rcstego.exact.normalize`.
"""

from __future__ import annotations

import json
import socket
import subprocess
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ProviderError
from .exact import AllZero, DistributionStep, normalize

Context = tuple[int, ...]

PROTOCOL_VERSION = 1


class ProviderExhausted(ProviderError):
    """Table fixture is shorter than the requested number of steps."""


class RemoteUnavailable(ProviderError):
    """Remote endpoint cannot be reached or closed the stream."""


class NonDeterministicResponse(ProviderError):
    """Remote returned different bytes for a repeated probe."""


class TokenNotInSupport(ProviderError):
    """Received token is not in the step's pruned support.

    During extraction this signals stegotext corruption or a provider
    mismatch; extraction must abort with this diagnostic.
    """


class EmptyCorpus(ProviderError):
    """Training corpus has no usable tokens."""


def step_index_of(step: DistributionStep, token_id: int) -> int:
    """Index of token_id within the step's support."""
    try:
        return step.tokens.index(token_id)
    except ValueError:
        raise TokenNotInSupport(f"token {token_id} not in support") from None


def token_index_of(provider: "Provider", ctx: Context, token_id: int) -> int:
    return step_index_of(provider.next_distribution(ctx), token_id)


class Provider:
    """Base interface; providers are read-only after construction."""

    def next_distribution(self, ctx: Context) -> DistributionStep:
        raise NotImplementedError

    def detokenize(self, tokens: Iterable[int]) -> str:
        raise ProviderError(f"{type(self).__name__} has no surface-text mapping")

    def close(self) -> None:
        pass


class TableProvider(Provider):
    """Scripted distributions, indexed by how far the context has grown."""

    def __init__(
        self,
        steps: Sequence[tuple[Sequence[int], Sequence[object]]],
        prompt: Context = (),
        cycle: bool = False,
    ):
        if not steps:
            raise ValueError("need at least one step")
        self.steps = tuple(normalize(probs, tokens) for tokens, probs in steps)
        self.prompt = tuple(prompt)
        self.cycle = cycle

    def next_distribution(self, ctx: Context) -> DistributionStep:
        i = len(ctx) - len(self.prompt)
        if i < 0:
            raise ProviderError("context shorter than the fixture prompt")
        if self.cycle:
            i %= len(self.steps)
        elif i >= len(self.steps):
            raise ProviderExhausted(f"fixture has {len(self.steps)} steps, step {i} requested")
        return self.steps[i]


# ---------------------------------------------------------------------------
# n-gram model

_NGRAM_MAGIC = "rcstego-ngram 1"


@dataclass
class NgramModel:
    """Count tables for P(token | previous ``order`` tokens), add-k smoothed.

    ``order`` is the number of conditioning tokens. Token ids are assigned
    by sorting the vocabulary, so retraining on the same corpus reproduces
    the model file byte for byte. Probabilities are never materialized:
    the provider emits exact (count + k) weights and lets normalization
    divide by the exact total, giving (count+k)/(total+k|V|) precisely.
    """

    order: int
    k: Fraction
    k_repr: str
    mode: str  # "char" or "word"
    vocab: tuple[str, ...]
    counts: dict[tuple[int, ...], dict[int, int]]
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}

    @classmethod
    def train(cls, text: str, order: int, k: object = 1, mode: str = "char") -> "NgramModel":
        if order < 1:
            raise ValueError("order must be >= 1")
        if mode not in ("char", "word"):
            raise ValueError("mode must be 'char' or 'word'")
        k_repr = str(k)
        kq = Fraction(k_repr)
        if kq < 0:
            raise ValueError("smoothing k must be >= 0")
        units = list(text) if mode == "char" else text.split()
        if not units:
            raise EmptyCorpus("corpus has no tokens")
        vocab = tuple(sorted(set(units)))
        ids = {tok: i for i, tok in enumerate(vocab)}
        seq = [ids[u] for u in units]
        counts: dict[tuple[int, ...], dict[int, int]] = {}
        for i in range(order, len(seq)):
            ctx = tuple(seq[i - order : i])
            slot = counts.setdefault(ctx, {})
            slot[seq[i]] = slot.get(seq[i], 0) + 1
        return cls(order, kq, k_repr, mode, vocab, counts)

    def encode_text(self, text: str) -> Context:
        units = list(text) if self.mode == "char" else text.split()
        try:
            return tuple(self._ids[u] for u in units)
        except KeyError as e:
            raise ProviderError(f"token {e.args[0]!r} not in model vocabulary") from None

    def decode_tokens(self, tokens: Iterable[int]) -> str:
        sep = "" if self.mode == "char" else " "
        return sep.join(self.vocab[t] for t in tokens)

    def save(self, path: str | Path) -> None:
        lines = [_NGRAM_MAGIC, f"order {self.order}", f"smoothing {self.k_repr}",
                 f"mode {self.mode}", f"vocab {len(self.vocab)}"]
        for i, tok in enumerate(self.vocab):
            lines.append(f"{i} {json.dumps(tok)}")
        lines.append(f"contexts {len(self.counts)}")
        for ctx in sorted(self.counts):
            pairs = " ".join(f"{t}:{c}" for t, c in sorted(self.counts[ctx].items()))
            lines.append(" ".join(map(str, ctx)) + "\t" + pairs)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        try:
            if lines[0] != _NGRAM_MAGIC:
                raise ProviderError(f"not an n-gram model file: {lines[0]!r}")
            order = int(lines[1].split()[1])
            k_repr = lines[2].split()[1]
            mode = lines[3].split()[1]
            nvocab = int(lines[4].split()[1])
            vocab = []
            for line in lines[5 : 5 + nvocab]:
                _, _, enc = line.partition(" ")
                vocab.append(json.loads(enc))
            pos = 5 + nvocab
            nctx = int(lines[pos].split()[1])
            counts: dict[tuple[int, ...], dict[int, int]] = {}
            for line in lines[pos + 1 : pos + 1 + nctx]:
                ctx_part, _, pairs = line.partition("\t")
                ctx = tuple(int(x) for x in ctx_part.split())
                counts[ctx] = {
                    int(t): int(c) for t, c in (p.split(":") for p in pairs.split())
                }
        except (IndexError, ValueError) as e:
            raise ProviderError(f"malformed n-gram model file: {e}") from e
        return cls(order, Fraction(k_repr), k_repr, mode, tuple(vocab), counts)


class NgramProvider(Provider):
    def __init__(self, model: NgramModel):
        self.model = model
        self._cache: dict[tuple[int, ...], DistributionStep] = {}

    def next_distribution(self, ctx: Context) -> DistributionStep:
        m = self.model
        if len(ctx) < m.order:
            raise ProviderError(f"context needs at least {m.order} token(s), got {len(ctx)}")
        tail = tuple(ctx[-m.order :])
        step = self._cache.get(tail)
        if step is None:
            seen = m.counts.get(tail, {})
            if m.k == 0:
                if not seen:
                    raise ProviderError(f"context {tail} never seen and smoothing is 0")
                tokens = sorted(seen)
                weights = [Fraction(seen[t]) for t in tokens]
            else:
                tokens = list(range(len(m.vocab)))
                weights = [Fraction(seen.get(t, 0)) + m.k for t in tokens]
            try:
                step = normalize(weights, tokens)
            except AllZero as e:  # unreachable given the guards above
                raise ProviderError(str(e)) from e
            self._cache[tail] = step
        return step

    def detokenize(self, tokens: Iterable[int]) -> str:
        return self.model.decode_tokens(tokens)


def train_ngram(
    corpus_path: str | Path,
    order: int,
    k: object,
    out_path: str | Path,
    mode: str = "char",
) -> "ProviderDescriptor":
    """Train on a text corpus, write the model file, return its descriptor."""
    text = Path(corpus_path).read_text(encoding="utf-8")
    model = NgramModel.train(text, order, k, mode)
    model.save(out_path)
    return ProviderDescriptor("ngram", {"model_path": str(out_path)})


# ---------------------------------------------------------------------------
# remote provider (wire protocol client)


class _Channel:
    """One line-delimited JSON request/response pair at a time."""

    def __init__(self, rfile, wfile, closers=()):
        self._rfile = rfile
        self._wfile = wfile
        self._closers = list(closers)

    def request_bytes(self, obj: dict) -> bytes:
        data = json.dumps(obj, separators=(",", ":")).encode() + b"\n"
        try:
            self._wfile.write(data)
            self._wfile.flush()
            line = self._rfile.readline()
        except (OSError, ValueError, BrokenPipeError) as e:
            raise RemoteUnavailable(f"remote i/o failed: {e}") from e
        if not line:
            raise RemoteUnavailable("remote closed the stream")
        return line

    def request(self, obj: dict) -> dict:
        line = self.request_bytes(obj)
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as e:
            raise RemoteUnavailable(f"malformed response frame: {e}") from e
        if resp.get("v") != PROTOCOL_VERSION:
            raise RemoteUnavailable(f"protocol version mismatch: {resp.get('v')!r}")
        if not resp.get("ok"):
            raise ProviderError(f"remote error: {resp.get('error', 'unknown')}")
        return resp

    def close(self) -> None:
        for c in self._closers:
            try:
                c()
            except Exception:
                pass


class RemoteProvider(Provider):
    """Client for a distribution server speaking the wire protocol.

    ``verify_determinism`` re-sends every request and compares the raw
    response bytes; a mismatch raises NonDeterministicResponse. It doubles
    the inference cost, so it is off by default and meant for probing a
    bridge before trusting it with a session.
    """

    def __init__(self, channel: _Channel, session: str | None = None, verify_determinism: bool = False):
        self._chan = channel
        self.session = session or uuid.uuid4().hex
        self.verify_determinism = verify_determinism

    @classmethod
    def connect_tcp(cls, host: str, port: int, **kw) -> "RemoteProvider":
        try:
            sock = socket.create_connection((host, port))
        except OSError as e:
            raise RemoteUnavailable(f"cannot connect to {host}:{port}: {e}") from e
        chan = _Channel(sock.makefile("rb"), sock.makefile("wb"), closers=[sock.close])
        return cls(chan, **kw)

    @classmethod
    def spawn_stdio(cls, cmd: Sequence[str], **kw) -> "RemoteProvider":
        try:
            proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as e:
            raise RemoteUnavailable(f"cannot spawn {cmd!r}: {e}") from e
        chan = _Channel(proc.stdout, proc.stdin, closers=[proc.terminate])
        return cls(chan, **kw)

    def _roundtrip(self, req: dict) -> dict:
        if self.verify_determinism:
            first = self._chan.request_bytes(req)
            second = self._chan.request_bytes(req)
            if first != second:
                raise NonDeterministicResponse("repeated probe returned different bytes")
            resp = json.loads(first)
            if resp.get("v") != PROTOCOL_VERSION:
                raise RemoteUnavailable(f"protocol version mismatch: {resp.get('v')!r}")
            if not resp.get("ok"):
                raise ProviderError(f"remote error: {resp.get('error', 'unknown')}")
            return resp
        return self._chan.request(req)

    def next_distribution(self, ctx: Context) -> DistributionStep:
        resp = self._roundtrip(
            {"v": PROTOCOL_VERSION, "op": "next", "session": self.session, "context": list(ctx)}
        )
        return normalize(resp["probs"], resp["tokens"])

    def ping(self) -> bool:
        return bool(self._chan.request({"v": PROTOCOL_VERSION, "op": "ping"}).get("pong"))

    def detokenize(self, tokens: Iterable[int]) -> str:
        resp = self._chan.request(
            {"v": PROTOCOL_VERSION, "op": "detokenize", "tokens": list(tokens)}
        )
        return resp["text"]

    def close(self) -> None:
        self._chan.close()

    def __enter__(self) -> "RemoteProvider":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class ProviderDescriptor:
    """Serializable recipe that fully determines a provider's behavior."""

    kind: str
    params: dict

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_json(cls, obj: dict) -> "ProviderDescriptor":
        return cls(obj["kind"], dict(obj.get("params", {})))


def load_table_file(path: str | Path) -> TableProvider:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = [(s["tokens"], s["probs"]) for s in obj["steps"]]
    return TableProvider(steps, tuple(obj.get("prompt", ())), bool(obj.get("cycle", False)))


def build_provider(desc: ProviderDescriptor) -> Provider:
    if desc.kind == "table":
        if "path" in desc.params:
            return load_table_file(desc.params["path"])
        steps = [(s["tokens"], s["probs"]) for s in desc.params["steps"]]
        return TableProvider(
            steps, tuple(desc.params.get("prompt", ())), bool(desc.params.get("cycle", False))
        )
    if desc.kind == "ngram":
        return NgramProvider(NgramModel.load(desc.params["model_path"]))
    if desc.kind == "remote":
        verify = bool(desc.params.get("verify_determinism", False))
        if desc.params.get("transport") == "tcp":
            return RemoteProvider.connect_tcp(
                desc.params["host"], int(desc.params["port"]), verify_determinism=verify
            )
        if desc.params.get("transport") == "stdio":
            return RemoteProvider.spawn_stdio(desc.params["cmd"], verify_determinism=verify)
        raise ProviderError(f"unknown remote transport {desc.params.get('transport')!r}")
    raise ProviderError(f"unknown provider kind {desc.kind!r}")
