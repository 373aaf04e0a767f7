"""Diverse decoding for sequence models.

Grouped beam search that trades a little per-group width for spread over
the model's modes, alongside classical beam search, two published
diversification baselines, an exhaustive oracle, n-gram language-model
scorers, and list-quality metrics. A compiled kernel accelerates the
search inner loop when available; see :mod:`divseq._backend`.
"""

from ._backend import active_backend, native_available
from .core import (
    BOS_ID,
    BOS_TOKEN,
    EOS_ID,
    EOS_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    DecodeConfig,
    DecodeContext,
    EMPTY_CONTEXT,
    GroupedRankedList,
    Hypothesis,
    Vocab,
    build_vocab,
    validate_config,
)
from .diversity import (
    GroupTrace,
    aggregate_penalty,
    cumulative_penalty,
    embedding_penalty,
    hamming_penalty,
    ngram_penalty,
)
from .metrics import distinct_n, oracle_at_k, sentence_bleu
from .scorers import (
    EmbeddingTable,
    NGramLM,
    Scorer,
    TableScorer,
    load_embeddings,
    train_ngram_lm,
)
from .search import (
    BeamState,
    ScoredHypothesis,
    beam_search,
    beam_step,
    decode_li2016,
    decode_mmi,
    diverse_beam_search,
    exhaustive_topk,
    initial_state,
)

__version__ = "0.1.0"
