"""Dissimilarity functions scoring candidate tokens against earlier groups.

Each function returns a vocabulary-indexed penalty vector. Sign
convention: hamming, n-gram, and embedding penalties are <= 0 (more
similarity, lower score once multiplied by a non-negative strength);
the cumulative function instead returns a dissimilarity reward in (0, 1].

Hamming and embedding penalties compare only the tokens the previous
groups emitted at the current time step; cumulative and n-gram penalties
use the full prefix history. All functions are pure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import BadN, BadTemperature, LengthMismatch
from .scorers import EmbeddingTable


@dataclass(frozen=True)
class GroupTrace:
    """The committed prefixes of one group's beams, one tuple per beam.

    A beam that finished keeps its frozen prefix (ending in EOS); it emits
    nothing at later steps, which :meth:`tokens_at` reflects by length.
    """

    prefixes: tuple[tuple[int, ...], ...]

    def tokens_at(self, t: int) -> list[int]:
        """Tokens this group emitted at time step ``t`` (1-based).

        A beam contributes only if it actually extended at ``t``; beams
        frozen at an earlier step are too short to appear.
        """
        return [p[t - 1] for p in self.prefixes if len(p) >= t]


def hamming_penalty(prev_tokens, vocab_size: int) -> np.ndarray:
    """-1 per earlier selection of each token at the current time step.

    ``prev_tokens`` is the multiset of tokens chosen by previous groups at
    this step; unused tokens get 0. An empty multiset yields zeros.
    """
    delta = np.zeros(vocab_size)
    for tok in prev_tokens:
        delta[tok] -= 1.0
    return delta


def cumulative_penalty(
    trace: GroupTrace,
    current_prefix: tuple[int, ...],
    temperature: float,
    vocab_size: int,
) -> np.ndarray:
    """Time-aligned word-overlap reward exp(-matches / temperature).

    For candidate token v at step t = len(current_prefix) + 1, matches
    counts, over every beam of the earlier group and every step tau <= t,
    the positions where that beam's token equals the candidate sequence's
    token (the committed prefix for tau < t, v itself at tau = t). More
    overlap means a smaller reward; values stay in (0, 1].
    """
    if not temperature > 0:
        raise BadTemperature(f"temperature must be > 0, got {temperature}")
    t = len(current_prefix) + 1
    base = 0
    for beam in trace.prefixes:
        upto = min(len(beam), t - 1)
        for tau in range(upto):
            if beam[tau] == current_prefix[tau]:
                base += 1
    matches = np.full(vocab_size, float(base))
    for tok in trace.tokens_at(t):
        matches[tok] += 1.0
    return np.exp(-matches / temperature)


def ngram_penalty(
    traces: list[GroupTrace],
    current_prefix: tuple[int, ...],
    n: int,
    vocab_size: int,
) -> np.ndarray:
    """-1 per earlier occurrence of the n-gram each candidate would close.

    The candidate n-gram is the last n-1 tokens of ``current_prefix``
    followed by the candidate token; occurrences are counted over all
    alignments of all previous-group prefixes. Until the prefix is long
    enough to form an n-gram the vector is zero.
    """
    if n < 1:
        raise BadN(f"n must be >= 1, got {n}")
    delta = np.zeros(vocab_size)
    if len(current_prefix) < n - 1:
        return delta
    stem = tuple(current_prefix[len(current_prefix) - (n - 1):])
    grams = Counter()
    for trace in traces:
        for beam in trace.prefixes:
            for i in range(len(beam) - n + 1):
                grams[beam[i : i + n]] += 1
    for gram, count in grams.items():
        if gram[:-1] == stem:
            delta[gram[-1]] -= count
    return delta


def embedding_penalty(
    prev_tokens,
    table: EmbeddingTable,
    vocab_size: int,
) -> np.ndarray:
    """Soft hamming: -sum of cosine similarities to earlier selections.

    Pairs where either token has no embedding (or a zero-norm vector)
    contribute 0. With a one-hot identity table this reduces exactly to
    the hamming penalty.
    """
    unit = table.unit_matrix
    pulled = np.zeros(table.dim)
    for tok in prev_tokens:
        pulled += unit[tok]
    return -(unit @ pulled)


def aggregate_penalty(per_group: list[np.ndarray], vocab_size: int) -> np.ndarray:
    """Element-wise sum of per-group penalty vectors; zeros when empty."""
    total = np.zeros(vocab_size)
    for delta in per_group:
        if len(delta) != vocab_size:
            raise LengthMismatch(
                f"penalty length {len(delta)} != vocab size {vocab_size}"
            )
        total += delta
    return total
