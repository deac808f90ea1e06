"""A small pinned causal language model.

No pretrained weights are assumed: the model is a tiny character-level
transformer whose parameters come from a fixed seed, which pins its
behavior completely. It is a real autoregressive LM runtime (torch forward
passes over a growing context); what it says is gibberish, but its
next-token distributions are exactly what the protocol needs to serve.
"""

from __future__ import annotations

import math

import torch
from torch import nn

ALPHABET = "abcdefghijklmnopqrstuvwxyz .,;:!?'-0123456789"

MAX_CONTEXT = 1024


class _Block(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ln1 = nn.LayerNorm(dim)
        self.ln2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim))

    def forward(self, x):
        n = x.shape[1]
        mask = torch.triu(torch.full((n, n), float("-inf")), diagonal=1)
        h = self.ln1(x)
        a, _ = self.attn(h, h, h, attn_mask=mask, need_weights=False)
        x = x + a
        return x + self.mlp(self.ln2(x))


class TinyCausalLM(nn.Module):
    def __init__(self, seed: int = 0, dim: int = 32, heads: int = 2, layers: int = 2,
                 alphabet: str = ALPHABET):
        super().__init__()
        self.alphabet = alphabet
        vocab = len(alphabet)
        torch.manual_seed(seed)
        self.tok_emb = nn.Embedding(vocab, dim)
        self.pos_emb = nn.Embedding(MAX_CONTEXT, dim)
        self.blocks = nn.ModuleList(_Block(dim, heads) for _ in range(layers))
        self.ln = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, vocab)
        self.eval()

    @torch.no_grad()
    def next_token_probs(self, context: list[int]) -> list[float]:
        """Softmax over the full vocabulary given the context token ids."""
        if not context:
            raise ValueError("context must be non-empty")
        if len(context) > MAX_CONTEXT:
            raise ValueError(f"context longer than {MAX_CONTEXT}")
        vocab = len(self.alphabet)
        if any(not 0 <= t < vocab for t in context):
            raise ValueError("context token id out of range")
        ids = torch.tensor([context], dtype=torch.long)
        x = self.tok_emb(ids) + self.pos_emb(torch.arange(ids.shape[1])).unsqueeze(0)
        for block in self.blocks:
            x = block(x)
        logits = self.head(self.ln(x))[0, -1].double()
        return torch.softmax(logits, dim=0).tolist()

    def encode(self, text: str) -> list[int]:
        try:
            return [self.alphabet.index(c) for c in text]
        except ValueError:
            raise ValueError(f"character not in alphabet: {text!r}") from None

    def decode(self, tokens: list[int]) -> str:
        return "".join(self.alphabet[t] for t in tokens)

    def perplexity_sanity(self) -> float:
        """Entropy (bits) of the distribution after a one-token context."""
        probs = self.next_token_probs([0])
        return -sum(p * math.log2(p) for p in probs if p > 0)
