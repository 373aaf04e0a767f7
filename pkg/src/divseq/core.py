"""Shared domain types: vocabulary, hypotheses, and decode configuration.

Scores are natural-log probabilities (nats) throughout. Token ids 0, 1, 2
are permanently reserved for BOS, EOS, and UNK so that serialized models
and decode outputs are bit-stable across builds.

All types here are immutable after construction and safe to share across
concurrent decode jobs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    BadN,
    BadTemperature,
    ConfigError,
    DuplicateToken,
    EmptyTokenList,
    InvalidTokenId,
    NegativeStrength,
    NonDivisibleBeam,
    ZeroLength,
)

BOS_ID = 0
EOS_ID = 1
UNK_ID = 2

BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
UNK_TOKEN = "<unk>"

RESERVED_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)

METHODS = ("bs", "dbs", "li2016", "mmi", "exhaustive")
DIVERSITY_FUNCTIONS = ("hamming", "cumulative", "ngram", "embedding")


class Vocab:
    """Bidirectional token <-> id map with fixed reserved ids.

    Ids are contiguous in ``[0, size)`` with BOS/EOS/UNK at 0/1/2 and the
    remaining tokens numbered in the order they were supplied.
    """

    __slots__ = ("tokens", "_index")

    def __init__(self, tokens: tuple[str, ...]):
        self.tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id(self, token: str) -> int:
        """Return the id for ``token``; raises KeyError for unknown tokens."""
        return self._index[token]

    def lookup(self, token_id: int) -> str:
        """Return the token string for ``token_id``."""
        if not 0 <= token_id < len(self.tokens):
            raise InvalidTokenId(f"token id {token_id} outside [0, {len(self.tokens)})")
        return self.tokens[token_id]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    def __repr__(self) -> str:
        return f"Vocab(size={self.size})"

    def encode(self, words: list[str] | tuple[str, ...]) -> tuple[int, ...]:
        """Map word strings to ids, substituting UNK for out-of-vocab words."""
        idx = self._index
        return tuple(idx.get(w, UNK_ID) for w in words)

    def decode(self, ids) -> list[str]:
        """Map ids back to token strings."""
        return [self.lookup(i) for i in ids]


def build_vocab(tokens: list[str] | tuple[str, ...]) -> Vocab:
    """Build a vocabulary from word strings, prepending the reserved tokens.

    Ids 0..2 are BOS/EOS/UNK; input tokens get ids 3.. in input order.
    Duplicates (including collisions with the reserved strings) are rejected.
    """
    if not tokens:
        raise EmptyTokenList("vocabulary needs at least one token")
    seen = set(RESERVED_TOKENS)
    for t in tokens:
        if t in seen:
            raise DuplicateToken(f"duplicate token {t!r}")
        seen.add(t)
    return Vocab(RESERVED_TOKENS + tuple(tokens))


@dataclass(frozen=True)
class Hypothesis:
    """A decoded token-id sequence with its summed model log-probability.

    ``logprob`` is the pure model score: the sum of the per-token
    log-probabilities that produced the sequence, never including any
    diversity or rank adjustments. ``finished`` is true exactly when the
    sequence ends with EOS; no token may follow EOS.
    """

    tokens: tuple[int, ...]
    logprob: float
    finished: bool = False

    def __post_init__(self):
        ends_eos = bool(self.tokens) and self.tokens[-1] == EOS_ID
        if self.finished != ends_eos:
            raise ValueError("finished flag must match a trailing EOS")
        if EOS_ID in self.tokens[:-1]:
            raise ValueError("no token may follow EOS")

    def __len__(self) -> int:
        return len(self.tokens)

    def words(self, vocab: Vocab) -> list[str]:
        """Token strings excluding the trailing EOS, for metric computation."""
        toks = self.tokens[:-1] if self.finished else self.tokens
        return [vocab.tokens[i] for i in toks]


@dataclass(frozen=True)
class DecodeContext:
    """Conditioning input for one decode; empty for unconditioned models."""

    tokens: tuple[int, ...] = ()


EMPTY_CONTEXT = DecodeContext()


@dataclass(frozen=True)
class DecodeConfig:
    """Knobs for one decode job.

    ``beam_width`` (B) must be an exact multiple of ``num_groups`` (G); the
    per-group width B/G is exposed as :attr:`group_width` after validation.
    ``diversity_strength`` is the multiplier on the dissimilarity term,
    ``rank_penalty`` the intra-sibling rank strength, ``mmi_weight`` the
    unconditioned-model weight, and ``cumulative_temp`` the temperature of
    the cumulative diversity function.
    """

    beam_width: int
    num_groups: int = 1
    diversity_strength: float = 0.0
    rank_penalty: float = 0.0
    mmi_weight: float = 0.0
    cumulative_temp: float = 1.0
    diversity_ngram: int = 2
    max_len: int = 20
    method: str = "bs"
    diversity: str = "hamming"
    length_normalize: bool = False

    @property
    def group_width(self) -> int:
        """Per-group beam width; meaningful only for validated configs."""
        return self.beam_width // self.num_groups


def validate_config(cfg: DecodeConfig) -> DecodeConfig:
    """Check all config invariants; returns the config when they hold.

    Group count must divide beam width exactly (G = B is allowed and gives
    width-1 groups). Strengths must be non-negative, the cumulative
    temperature strictly positive, and the decode length at least one.
    """
    if cfg.beam_width < 1:
        raise ConfigError(f"beam width must be >= 1, got {cfg.beam_width}")
    if not 1 <= cfg.num_groups <= cfg.beam_width:
        raise NonDivisibleBeam(
            f"group count {cfg.num_groups} outside [1, {cfg.beam_width}]"
        )
    if cfg.beam_width % cfg.num_groups != 0:
        raise NonDivisibleBeam(
            f"beam width {cfg.beam_width} not divisible by {cfg.num_groups} groups"
        )
    for name in ("diversity_strength", "rank_penalty", "mmi_weight"):
        value = getattr(cfg, name)
        if value < 0 or math.isnan(value):
            raise NegativeStrength(f"{name} must be >= 0, got {value}")
    if not cfg.cumulative_temp > 0:
        raise BadTemperature(f"cumulative_temp must be > 0, got {cfg.cumulative_temp}")
    if cfg.diversity_ngram < 1:
        raise BadN(f"diversity n-gram size must be >= 1, got {cfg.diversity_ngram}")
    if cfg.max_len < 1:
        raise ZeroLength(f"max_len must be >= 1, got {cfg.max_len}")
    if cfg.method not in METHODS:
        raise ConfigError(f"unknown method {cfg.method!r}; expected one of {METHODS}")
    if cfg.diversity not in DIVERSITY_FUNCTIONS:
        raise ConfigError(
            f"unknown diversity function {cfg.diversity!r}; "
            f"expected one of {DIVERSITY_FUNCTIONS}"
        )
    return cfg


@dataclass(frozen=True)
class GroupedRankedList:
    """Decode output: G groups of hypotheses, each internally ranked.

    Groups keep the order produced by the search (log-probability
    descending within each group). ``flattened`` merges all groups into a
    single ranking by pure log-probability, breaking ties by group index
    then within-group rank so output order is deterministic.
    """

    groups: tuple[tuple[Hypothesis, ...], ...]

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups)

    def flattened(self) -> list[Hypothesis]:
        order = sorted(
            (
                (-h.logprob, g_idx, rank)
                for g_idx, group in enumerate(self.groups)
                for rank, h in enumerate(group)
            ),
        )
        return [self.groups[g][r] for _, g, r in order]
