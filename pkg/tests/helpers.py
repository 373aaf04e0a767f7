"""Shared test machinery: deterministic random scorers and language
models, plus a recursive brute-force enumeration oracle kept independent
of the library's search code."""

from __future__ import annotations

import math
import random

import numpy as np

from divseq import TableScorer, build_vocab, train_ngram_lm
from divseq.core import BOS_ID, EOS_ID, UNK_ID


def random_row(rng: random.Random, size: int, generable: list[int]) -> np.ndarray:
    """Random normalized log-prob row supported on ``generable`` ids."""
    probs = np.zeros(size)
    for tok in generable:
        probs[tok] = rng.random() + 1e-3
    probs /= probs.sum()
    with np.errstate(divide="ignore"):
        return np.log(probs)


def random_table_scorer(
    rng: random.Random,
    n_words: int = 5,
    depth: int = 3,
    generable: list[int] | None = None,
) -> TableScorer:
    """TableScorer with random rows stored for every prefix up to ``depth``.

    Deeper prefixes hit the uniform fallback row, which deliberately
    produces score ties that exercise the documented tie-breaking.
    """
    vocab = build_vocab([f"t{i}" for i in range(n_words)])
    size = vocab.size
    if generable is None:
        generable = [i for i in range(size) if i != BOS_ID]
    extendable = [t for t in generable if t != EOS_ID]
    rows = {}

    def fill(prefix: tuple[int, ...], remaining: int):
        rows[((), prefix)] = random_row(rng, size, generable)
        if remaining == 0:
            return
        for tok in extendable:
            fill(prefix + (tok,), remaining - 1)

    fill((), depth)
    return TableScorer(vocab, rows)


def scorer_suite(count: int = 100, seed: int = 0) -> list[TableScorer]:
    """The shared random-scorer population used by the acceptance tests."""
    rng = random.Random(seed)
    return [
        random_table_scorer(rng, n_words=rng.randint(2, 5), depth=3)
        for _ in range(count)
    ]


def brute_force_topk(scorer, ctx, max_len: int, k: int | None = None):
    """Enumerate all complete sequences and rank them.

    A sequence is complete when it ends in EOS or reaches ``max_len``.
    Zero-probability tokens are never taken. Ranking is by summed
    log-probability descending with lexicographic token-id tie-break.
    Returns (tokens, logprob) pairs.
    """
    size = scorer.vocab.size
    complete: list[tuple[tuple[int, ...], float]] = []

    def walk(prefix: tuple[int, ...], total: float):
        row = scorer.log_probs(ctx, prefix)
        for tok in range(size):
            lp = float(row[tok])
            if math.isinf(lp):
                continue
            seq = prefix + (tok,)
            if tok == EOS_ID or len(seq) == max_len:
                complete.append((seq, total + lp))
            else:
                walk(seq, total + lp)

    walk((), 0.0)
    complete.sort(key=lambda item: (-item[1], item[0]))
    return complete if k is None else complete[:k]


def random_corpus(
    rng: random.Random,
    n_words: int = 10,
    lines: int = 30,
    min_len: int = 3,
    max_len: int = 8,
) -> tuple[list[str], list[str]]:
    words = [f"w{i}" for i in range(n_words)]
    corpus = [
        " ".join(rng.choice(words) for _ in range(rng.randint(min_len, max_len)))
        for _ in range(lines)
    ]
    return words, corpus


def random_lm(rng: random.Random, order: int = 2, add_k: float = 0.0, **kwargs):
    words, corpus = random_corpus(rng, **kwargs)
    return train_ngram_lm(corpus, order, add_k, build_vocab(words))


def bimodal_lm(seed: int):
    """Bigram model with two disjoint-support modes, mode A 10% likelier.

    Each mode is a shared stem, then one of several equally likely branch
    words, then a shared suffix. Mode A lines are counted 11 times each
    and mode B lines 10 times, so every mode-A sequence is exactly 1.1x
    as probable as its mode-B twin.

    Returns (lm, mode_a_words, mode_b_words).
    """
    rng = random.Random(seed)
    branches = rng.randint(4, 6)
    stem_len = rng.randint(1, 2)
    suffix_len = rng.randint(0, 2)

    def mode(tag: str):
        stem = [f"{tag}_s{i}" for i in range(stem_len)]
        mids = [f"{tag}_m{i}" for i in range(branches)]
        suffix = [f"{tag}_x{i}" for i in range(suffix_len)]
        lines = [" ".join(stem + [mid] + suffix) for mid in mids]
        return lines, stem + mids + suffix

    a_lines, a_words = mode("a")
    b_lines, b_words = mode("b")
    corpus = a_lines * 11 + b_lines * 10
    lm = train_ngram_lm(corpus, 2, 0.0, build_vocab(a_words + b_words))
    return lm, set(a_words), set(b_words)
