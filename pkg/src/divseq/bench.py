"""Wall-time comparison of the decoders across backends.

Runs repeated single-thread decodes of one synthetic n-gram LM and times
classical beam search against the grouped hamming-diversity search at the
same total width. Each timing takes the best of three batches after a
warm-up pass (the LM row cache is hot for every timed run, so both
methods score identical row sets).
"""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass

from . import _backend
from .core import BOS_ID, DecodeConfig, EMPTY_CONTEXT, build_vocab
from .scorers import NGramLM
from .search import beam_search, diverse_beam_search


def synthetic_lm(vocab_size: int = 200, seed: int = 0) -> NGramLM:
    """A dense endless bigram model built straight from count tables.

    Every word follows every word with a random positive count and no
    sequence-end events exist, so decodes always run the full length
    limit. That pins the workload: beam search and the grouped search
    score the same rows step for step, and the timing compares
    algorithmic overhead rather than output-length dynamics.
    """
    rng = random.Random(seed)
    vocab = build_vocab([f"w{i}" for i in range(vocab_size)])
    words = list(range(3, vocab.size))
    bigrams = {}
    unigrams: dict[int, int] = {w: 0 for w in words}
    for ctx in [BOS_ID] + words:
        bucket = {w: rng.randint(1, 20) for w in words}
        bigrams[(ctx,)] = bucket
        for w, c in bucket.items():
            unigrams[w] += c
    return NGramLM(vocab, 2, 0.0, {1: {(): unigrams}, 2: bigrams})


@dataclass(frozen=True)
class BenchResult:
    backend: str
    method: str
    beam_width: int
    num_groups: int
    decodes: int
    seconds: float

    @property
    def ms_per_decode(self) -> float:
        return 1000.0 * self.seconds / self.decodes


def time_decodes(fn, decodes: int, repeats: int = 3, warmup: int = 5) -> float:
    """Best-of-``repeats`` total seconds for ``decodes`` calls of ``fn``."""
    for _ in range(warmup):
        fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(decodes):
            fn()
        best = min(best, time.perf_counter() - start)
    return best


def run_pair(lm, beam_width: int, num_groups: int, max_len: int,
             decodes: int, backend: str) -> tuple[BenchResult, BenchResult]:
    """Time (bs, dbs) on one backend; returns the two results."""
    bs_cfg = DecodeConfig(beam_width=beam_width, max_len=max_len, method="bs")
    dbs_cfg = DecodeConfig(
        beam_width=beam_width,
        num_groups=num_groups,
        diversity_strength=0.5,
        max_len=max_len,
        method="dbs",
        diversity="hamming",
    )
    previous = os.environ.get("DIVSEQ_BACKEND")
    os.environ["DIVSEQ_BACKEND"] = backend
    try:
        bs_s = time_decodes(lambda: beam_search(lm, EMPTY_CONTEXT, bs_cfg), decodes)
        dbs_s = time_decodes(
            lambda: diverse_beam_search(lm, EMPTY_CONTEXT, dbs_cfg), decodes
        )
    finally:
        if previous is None:
            del os.environ["DIVSEQ_BACKEND"]
        else:
            os.environ["DIVSEQ_BACKEND"] = previous
    return (
        BenchResult(backend, "bs", beam_width, 1, decodes, bs_s),
        BenchResult(backend, "dbs", beam_width, num_groups, decodes, dbs_s),
    )


def run_benchmark(beam_width: int = 20, num_groups: int = 20, max_len: int = 12,
                  decodes: int = 200, vocab_size: int = 200, seed: int = 0,
                  backend: str = "both") -> list[BenchResult]:
    lm = synthetic_lm(vocab_size=vocab_size, seed=seed)
    if backend == "both":
        backends = ["python"]
        if _backend.native_available():
            backends.insert(0, "native")
    else:
        backends = [backend]
    results = []
    for name in backends:
        results.extend(run_pair(lm, beam_width, num_groups, max_len, decodes, name))
    return results


def format_table(results: list[BenchResult]) -> str:
    lines = [
        f"{'backend':<8} {'method':<6} {'B':>3} {'G':>3} {'decodes':>8} "
        f"{'total_s':>9} {'ms/decode':>10} {'dbs/bs':>7}"
    ]
    by_backend: dict[str, dict[str, BenchResult]] = {}
    for r in results:
        by_backend.setdefault(r.backend, {})[r.method] = r
    for r in results:
        pair = by_backend[r.backend]
        ratio = ""
        if r.method == "dbs" and "bs" in pair:
            ratio = f"{r.seconds / pair['bs'].seconds:.2f}x"
        lines.append(
            f"{r.backend:<8} {r.method:<6} {r.beam_width:>3} {r.num_groups:>3} "
            f"{r.decodes:>8} {r.seconds:>9.3f} {r.ms_per_decode:>10.3f} {ratio:>7}"
        )
    if "native" in by_backend and "python" in by_backend:
        for method in ("bs", "dbs"):
            native = by_backend["native"].get(method)
            pure = by_backend["python"].get(method)
            if native and pure:
                lines.append(
                    f"native speedup on {method}: "
                    f"{pure.seconds / native.seconds:.2f}x"
                )
    return "\n".join(lines)
