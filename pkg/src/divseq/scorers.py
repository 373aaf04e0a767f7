"""Token-level log-probability models and embedding ingestion.

A scorer maps (conditioning context, decoded prefix) to a length-|V|
vector of natural-log probabilities over the next token. Every row
exponentiates and sums to 1 within 1e-6, and the BOS entry is always
-inf: BOS can never be generated.

Two reference scorers are provided: :class:`TableScorer` (an explicit
lookup table, meant for exact tests) and :class:`NGramLM` (an add-k
smoothed count model with backoff-on-unseen-context, the stand-in
generative model for desk-scale experiments). Trained models are
immutable and safe to score from many decode jobs at once.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .core import BOS_ID, EOS_ID, DecodeContext, Vocab
from .errors import (
    BadOrder,
    CorruptPayload,
    EmptyCorpus,
    EmptyFile,
    FormatVersionMismatch,
    InconsistentDimension,
    InvalidTokenId,
    NonNumericComponent,
    PrefixAfterEOS,
    VocabMismatch,
)

NEG_INF = float("-inf")

LM_MAGIC = b"DIVSEQLM"
LM_FORMAT_VERSION = 1


class Scorer:
    """Base class fixing the scoring contract and its input validation."""

    vocab: Vocab

    def log_probs(self, ctx: DecodeContext, prefix: tuple[int, ...]) -> np.ndarray:
        """Log-probability row over the next token given ``prefix``.

        The prefix holds previously generated ids only; it may not contain
        EOS (nothing follows end-of-sequence). The returned array is shared
        and read-only: callers must copy before mutating.
        """
        size = self.vocab.size
        for t in prefix:
            if not 0 <= t < size:
                raise InvalidTokenId(f"token id {t} outside [0, {size})")
            if t == EOS_ID:
                raise PrefixAfterEOS("prefix continues past EOS")
        return self._row(ctx, prefix)

    def _row(self, ctx: DecodeContext, prefix: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError


def _frozen(row: np.ndarray) -> np.ndarray:
    row = np.ascontiguousarray(row, dtype=np.float64)
    row.flags.writeable = False
    return row


def uniform_row(size: int) -> np.ndarray:
    """Uniform distribution over all tokens except BOS."""
    row = np.full(size, np.log(1.0 / (size - 1)))
    row[BOS_ID] = NEG_INF
    return _frozen(row)


class TableScorer(Scorer):
    """Explicit (context, prefix) -> log-prob row map with a uniform fallback.

    Stored rows must be normalized within 1e-9; lookups that miss fall back
    to the uniform row so decodes of any depth are well defined.
    """

    def __init__(
        self,
        vocab: Vocab,
        rows: dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray],
    ):
        self.vocab = vocab
        self._uniform = uniform_row(vocab.size)
        self._rows = {}
        for key, row in rows.items():
            row = np.asarray(row, dtype=np.float64)
            if row.shape != (vocab.size,):
                raise ValueError(f"row for {key} has shape {row.shape}")
            total = np.exp(row[np.isfinite(row)]).sum()
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"row for {key} sums to {total}, not 1")
            self._rows[key] = _frozen(row)

    def _row(self, ctx: DecodeContext, prefix: tuple[int, ...]) -> np.ndarray:
        return self._rows.get((ctx.tokens, tuple(prefix)), self._uniform)


def _padded_history(order: int, history: tuple[int, ...]) -> tuple[int, ...]:
    """Last (order-1) tokens of the BOS-padded history."""
    need = order - 1
    if need == 0:
        return ()
    if len(history) >= need:
        return tuple(history[-need:])
    return (BOS_ID,) * (need - len(history)) + tuple(history)


class NGramLM(Scorer):
    """Count-based n-gram model with add-k smoothing.

    Conditionals are ``(count(ctx, w) + k) / (count(ctx) + k * (|V| - 1))``
    over all tokens except BOS. A context never observed in training backs
    off to the next shorter context, bottoming out at the add-k-smoothed
    unigram distribution. With k = 0 this reproduces exact MLE ratios on
    observed contexts.

    ``counts`` maps each table order o in 1..order to
    ``{context_ids: {token_id: count}}`` where contexts have length o-1.

    Rows are dense, cached per context, and returned read-only; the cache
    only ever fills in values that are pure functions of immutable state,
    so concurrent scoring from many decode jobs is safe (a rare race
    recomputes the same row).
    """

    def __init__(
        self,
        vocab: Vocab,
        order: int,
        add_k: float,
        counts: dict[int, dict[tuple[int, ...], dict[int, int]]],
    ):
        if order < 1:
            raise BadOrder(f"order must be >= 1, got {order}")
        if add_k < 0:
            raise ValueError(f"add_k must be >= 0, got {add_k}")
        self.vocab = vocab
        self.order = order
        self.add_k = add_k
        self.counts = counts
        self._totals = {
            o: {ctx: sum(tok.values()) for ctx, tok in table.items()}
            for o, table in counts.items()
        }
        self._row_cache: dict[tuple[int, ...], np.ndarray] = {}

    def _row(self, ctx: DecodeContext, prefix: tuple[int, ...]) -> np.ndarray:
        history = _padded_history(self.order, ctx.tokens + tuple(prefix))
        row = self._row_cache.get(history)
        if row is None:
            row = self._build_row(history)
            self._row_cache[history] = row
        return row

    def _build_row(self, history: tuple[int, ...]) -> np.ndarray:
        order = self.order
        context = history
        while order > 1 and self._totals[order].get(context, 0) == 0:
            order -= 1
            context = context[len(context) - (order - 1):]
        total = self._totals[order].get(context, 0)
        size = self.vocab.size
        k = self.add_k
        numer = np.full(size, k)
        for tok, c in self.counts[order].get(context, {}).items():
            numer[tok] += c
        numer[BOS_ID] = 0.0
        denom = total + k * (size - 1)
        with np.errstate(divide="ignore"):
            row = np.log(numer / denom)
        return _frozen(row)

    def ngram_count(self) -> int:
        """Number of distinct (context, token) events in the top-order table."""
        return sum(len(tok) for tok in self.counts[self.order].values())

    def to_bytes(self) -> bytes:
        """Serialize to the versioned, CRC-checked binary format.

        Identical models serialize to identical bytes: tables are written
        in sorted context order with sorted token entries.
        """
        out = bytearray()
        out += LM_MAGIC
        out += struct.pack("<H", LM_FORMAT_VERSION)
        out += struct.pack("<I", self.vocab.size)
        for token in self.vocab.tokens:
            raw = token.encode("utf-8")
            out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<I", self.order)
        out += struct.pack("<d", self.add_k)
        out += struct.pack("<I", self.order)
        for o in range(1, self.order + 1):
            table = self.counts[o]
            out += struct.pack("<I", len(table))
            for context in sorted(table):
                out += struct.pack(f"<{o - 1}I", *context)
                entries = table[context]
                out += struct.pack("<I", len(entries))
                for tok in sorted(entries):
                    out += struct.pack("<IQ", tok, entries[tok])
        out += struct.pack("<I", zlib.crc32(bytes(out)))
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, expected_vocab: Vocab | None = None) -> "NGramLM":
        """Inverse of :meth:`to_bytes`; checks magic, version, and CRC.

        When ``expected_vocab`` is given, the embedded vocabulary must
        match it exactly.
        """
        if len(data) < len(LM_MAGIC) + 2 + 4:
            raise CorruptPayload("payload shorter than header")
        if data[: len(LM_MAGIC)] != LM_MAGIC:
            raise CorruptPayload("bad magic")
        stored_crc = struct.unpack("<I", data[-4:])[0]
        if zlib.crc32(data[:-4]) != stored_crc:
            raise CorruptPayload("checksum failure")
        reader = _Reader(data[:-4], offset=len(LM_MAGIC))
        version = reader.u16()
        if version != LM_FORMAT_VERSION:
            raise FormatVersionMismatch(
                f"format version {version}, supported {LM_FORMAT_VERSION}"
            )
        vocab_size = reader.u32()
        tokens = tuple(reader.string() for _ in range(vocab_size))
        vocab = Vocab(tokens)
        if expected_vocab is not None and tokens != expected_vocab.tokens:
            raise VocabMismatch("model vocabulary differs from expected vocabulary")
        order = reader.u32()
        add_k = reader.f64()
        n_tables = reader.u32()
        counts: dict[int, dict[tuple[int, ...], dict[int, int]]] = {}
        for o in range(1, n_tables + 1):
            table: dict[tuple[int, ...], dict[int, int]] = {}
            for _ in range(reader.u32()):
                context = tuple(reader.u32() for _ in range(o - 1))
                entries = {}
                for _ in range(reader.u32()):
                    tok = reader.u32()
                    entries[tok] = reader.u64()
                table[context] = entries
            counts[o] = table
        if not reader.done():
            raise CorruptPayload("trailing bytes after count tables")
        return cls(vocab, order, add_k, counts)


class _Reader:
    """Bounds-checked little-endian struct reader."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptPayload("truncated payload")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def string(self) -> str:
        return self._take(self.u16()).decode("utf-8")

    def done(self) -> bool:
        return self.pos == len(self.data)


def train_ngram_lm(
    corpus: list[str],
    order: int,
    add_k: float,
    vocab: Vocab,
) -> NGramLM:
    """Count n-gram events from whitespace-tokenized lines.

    Each line is implicitly wrapped in BOS padding and a trailing EOS.
    Tables for every order from 1 to ``order`` are counted (the shorter
    ones feed backoff). Words outside the vocabulary are counted as UNK.
    """
    if order < 1:
        raise BadOrder(f"order must be >= 1, got {order}")
    if not corpus:
        raise EmptyCorpus("corpus contains no lines")
    counts: dict[int, dict[tuple[int, ...], dict[int, int]]] = {
        o: {} for o in range(1, order + 1)
    }
    for line in corpus:
        ids = list(vocab.encode(line.split())) + [EOS_ID]
        for o in range(1, order + 1):
            seq = [BOS_ID] * (o - 1) + ids
            table = counts[o]
            for i in range(o - 1, len(seq)):
                context = tuple(seq[i - o + 1 : i])
                bucket = table.setdefault(context, {})
                tok = seq[i]
                bucket[tok] = bucket.get(tok, 0) + 1
    return NGramLM(vocab, order, add_k, counts)


class EmbeddingTable:
    """Token id -> real vector map for soft (cosine) diversity penalties.

    ``unit_matrix`` holds each vector scaled to unit norm, with all-zero
    rows for missing tokens and zero-norm vectors, so cosine similarities
    against absent entries contribute exactly 0.
    """

    def __init__(self, dim: int, vectors: dict[int, np.ndarray], vocab_size: int):
        self.dim = dim
        self.vectors = vectors
        self.vocab_size = vocab_size
        self._unit: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self.vectors

    @property
    def unit_matrix(self) -> np.ndarray:
        if self._unit is None:
            mat = np.zeros((self.vocab_size, self.dim))
            for tok, vec in self.vectors.items():
                norm = np.linalg.norm(vec)
                if norm > 0:
                    mat[tok] = vec / norm
            mat.flags.writeable = False
            self._unit = mat
        return self._unit


def load_embeddings(text: str, vocab: Vocab) -> tuple[EmbeddingTable, int]:
    """Parse word2vec-style text: one ``token v1 v2 ... vd`` row per line.

    Rows whose token is not in ``vocab`` are skipped; the skip count is
    returned alongside the table. All rows must share one dimension.
    """
    vectors: dict[int, np.ndarray] = {}
    dim = None
    skipped = 0
    saw_row = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        saw_row = True
        token, components = parts[0], parts[1:]
        if dim is None:
            dim = len(components)
        if len(components) != dim or dim == 0:
            raise InconsistentDimension(
                f"line {line_no}: expected {dim} components, got {len(components)}"
            )
        try:
            vec = np.array([float(c) for c in components])
        except ValueError as exc:
            raise NonNumericComponent(f"line {line_no}: {exc}") from exc
        if token in vocab:
            vectors[vocab.id(token)] = vec
        else:
            skipped += 1
    if not saw_row:
        raise EmptyFile("embedding file contains no rows")
    return EmbeddingTable(dim, vectors, vocab.size), skipped
