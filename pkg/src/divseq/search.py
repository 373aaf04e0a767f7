"""Decoders: beam search, grouped diverse beam search, two published
diversification baselines, and an exhaustive oracle.

All decoders share one selection rule: candidates are ranked by a
selection score and ties are broken by (score descending, parent
hypothesis index ascending, token id ascending), making every decode
deterministic. Stored hypothesis scores are always pure model
log-probabilities; diversity, rank, and MMI terms adjust selection only.
Tokens with probability zero (-inf rows) are never extended.

A finished hypothesis is frozen: it keeps competing for its slots at its
final score, but emits no token and contributes nothing to diversity
penalties at later steps. Decoding stops when every hypothesis is
finished or the length limit is reached.

The grouped search steps groups strictly in order within each time step;
group 1 is never penalized, so its output equals a plain beam search of
the per-group width and the full search can only improve on it.

One decode is sequential (groups at a time step depend on earlier ones);
independent decodes may run in parallel against shared immutable models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import (
    EOS_ID,
    DecodeConfig,
    DecodeContext,
    GroupedRankedList,
    Hypothesis,
    validate_config,
)
from .diversity import (
    GroupTrace,
    aggregate_penalty,
    cumulative_penalty,
    embedding_penalty,
    ngram_penalty,
)
from .errors import (
    ConfigError,
    EmptyState,
    RowLengthMismatch,
    SearchSpaceTooLarge,
    VocabMismatch,
)
from .scorers import EmbeddingTable, Scorer

NEG_INF = float("-inf")

EXHAUSTIVE_GUARD = 10**7


@dataclass(frozen=True)
class BeamState:
    """Hypotheses held after ``t`` steps, sorted by logprob descending."""

    t: int
    hypotheses: tuple[Hypothesis, ...]


def initial_state() -> BeamState:
    """Search root: a single live hypothesis with no tokens and score 0."""
    return BeamState(t=0, hypotheses=(Hypothesis((), 0.0, False),))


@dataclass(frozen=True)
class ScoredHypothesis:
    """A hypothesis plus the modified objective it was ranked by."""

    hypothesis: Hypothesis
    objective: float


class _Group:
    """Mutable per-group search state: parallel slot lists."""

    __slots__ = ("prefixes", "thetas", "finished")

    def __init__(self):
        self.prefixes: list[tuple[int, ...]] = [()]
        self.thetas: list[float] = [0.0]
        self.finished: list[bool] = [False]

    def all_finished(self) -> bool:
        return all(self.finished)

    def hypotheses(self) -> tuple[Hypothesis, ...]:
        return tuple(
            Hypothesis(p, th, fin)
            for p, th, fin in zip(self.prefixes, self.thetas, self.finished)
        )


def _select_step(prefixes, thetas, finished, rows, delta, strength, limit,
                 accumulate=False):
    """One selection step over a group's candidate pool.

    ``rows`` holds one log-prob vector per slot (None for finished
    slots). ``delta`` is None, one shared penalty vector, or one vector
    per live slot; the selection score of extending slot i with token v
    is ``(theta[i] + rows[i][v]) + strength * delta[v]``. Finished slots
    compete unchanged at their frozen score. With ``accumulate`` the
    penalized score becomes the new stored score (used by MMI); otherwise
    stored scores stay pure.

    Returns parallel lists (prefixes, scores, finished, parents, tokens)
    for the surviving slots, sorted by stored score descending with ties
    kept in selection order. ``tokens`` is -1 for carried-over slots.
    """
    n = len(thetas)
    if n == 0:
        raise EmptyState("beam step on an empty state")
    live = [i for i in range(n) if not finished[i]]
    candidates = [(-thetas[i], i, -1) for i in range(n) if finished[i]]

    if live:
        size = len(rows[live[0]])
        base = np.empty((len(live), size))
        for j, i in enumerate(live):
            base[j] = rows[i]
        scores = base + np.array([thetas[i] for i in live])[:, None]
        if delta is not None and strength != 0.0:
            pen = strength * (
                delta if isinstance(delta, np.ndarray) else np.vstack(delta)
            )
            # An infinite penalty against a zero-probability token would
            # produce NaN here; the mask below overwrites those cells.
            with np.errstate(invalid="ignore"):
                scores = scores + pen
        scores[np.isneginf(base)] = NEG_INF
        flat = scores.ravel()
        finite = flat > NEG_INF
        n_finite = int(finite.sum())
        take = min(limit, n_finite)
        if take:
            if n_finite <= limit:
                idx = np.flatnonzero(finite)
            else:
                kth = np.partition(flat, flat.size - take)[flat.size - take]
                idx = np.flatnonzero(flat >= kth)
            idx = idx[np.lexsort((idx, -flat[idx]))][:take]
            for fi in idx:
                candidates.append((-flat[fi], live[int(fi) // size], int(fi) % size))

    chosen = sorted(candidates)[:limit]
    records = []
    for neg_score, parent, token in chosen:
        if token < 0:
            records.append((prefixes[parent], thetas[parent], True, parent, token))
        else:
            theta_new = thetas[parent] + float(rows[parent][token])
            stored = float(-neg_score) if accumulate else theta_new
            records.append(
                (prefixes[parent] + (token,), stored, token == EOS_ID, parent, token)
            )
    records.sort(key=lambda rec: -rec[1])
    out_prefixes = [r[0] for r in records]
    out_scores = [r[1] for r in records]
    out_finished = [r[2] for r in records]
    out_parents = [r[3] for r in records]
    out_tokens = [r[4] for r in records]
    return out_prefixes, out_scores, out_finished, out_parents, out_tokens


def beam_step(
    state: BeamState,
    rows: list[np.ndarray],
    width: int,
    penalty=None,
    strength: float = 0.0,
) -> BeamState:
    """Advance a beam state by one token.

    ``rows`` carries one log-prob vector per live hypothesis, in state
    order. Finished hypotheses carry over unchanged and compete for slots
    at their frozen score. ``penalty`` is an optional shared vector (or
    one per live hypothesis) added to selection scores scaled by
    ``strength``; stored scores always exclude it.
    """
    if not state.hypotheses:
        raise EmptyState("beam step on an empty state")
    live_count = sum(not h.finished for h in state.hypotheses)
    if len(rows) != live_count:
        raise RowLengthMismatch(
            f"{len(rows)} rows for {live_count} live hypotheses"
        )
    row_iter = iter(rows)
    per_slot = []
    for h in state.hypotheses:
        if h.finished:
            per_slot.append(None)
        else:
            row = np.asarray(next(row_iter), dtype=np.float64)
            per_slot.append(row)
    widths = {len(r) for r in per_slot if r is not None}
    if len(widths) > 1:
        raise RowLengthMismatch(f"rows of differing lengths: {sorted(widths)}")
    prefixes = [h.tokens for h in state.hypotheses]
    thetas = [h.logprob for h in state.hypotheses]
    finished = [h.finished for h in state.hypotheses]
    out_p, out_s, out_f, _, _ = _select_step(
        prefixes, thetas, finished, per_slot, penalty, strength, width
    )
    hyps = tuple(Hypothesis(p, s, f) for p, s, f in zip(out_p, out_s, out_f))
    return BeamState(t=state.t + 1, hypotheses=hyps)


def _gather_rows(model: Scorer, ctx: DecodeContext, group: _Group):
    return [
        None if fin else model.log_probs(ctx, prefix)
        for prefix, fin in zip(group.prefixes, group.finished)
    ]


def _group_penalty(kind, groups, g, t, group, cfg, embeddings, counts):
    """Aggregated dissimilarity for group ``g`` at time step ``t``.

    Earlier groups have already extended at ``t``; their traces include
    their step-``t`` tokens. Returns None for the first group, a shared
    vector for hamming/embedding, or one vector per live slot for the
    prefix-dependent functions.
    """
    if g == 0:
        return None
    size = counts.shape[0]
    if kind == "hamming":
        # Running per-step counts; integer-exact equal to summing
        # hamming_penalty over the earlier groups.
        return -counts
    if kind == "embedding":
        return aggregate_penalty(
            [
                embedding_penalty(
                    GroupTrace(tuple(groups[h].prefixes)).tokens_at(t),
                    embeddings,
                    size,
                )
                for h in range(g)
            ],
            size,
        )
    traces = [GroupTrace(tuple(groups[h].prefixes)) for h in range(g)]
    deltas = []
    for prefix, fin in zip(group.prefixes, group.finished):
        if fin:
            continue
        if kind == "ngram":
            deltas.append(ngram_penalty(traces, prefix, cfg.diversity_ngram, size))
        else:
            deltas.append(
                aggregate_penalty(
                    [
                        cumulative_penalty(tr, prefix, cfg.cumulative_temp, size)
                        for tr in traces
                    ],
                    size,
                )
            )
    return deltas


def _decode_grouped_pure(model, ctx, n_groups, group_width, strength, max_len,
                         kind, cfg, embeddings):
    """Reference grouped decode; one beam search when ``n_groups`` is 1."""
    size = model.vocab.size
    groups = [_Group() for _ in range(n_groups)]
    for t in range(1, max_len + 1):
        if all(g.all_finished() for g in groups):
            break
        counts = np.zeros(size)
        for g, group in enumerate(groups):
            if group.all_finished():
                continue
            rows = _gather_rows(model, ctx, group)
            delta = _group_penalty(
                kind, groups, g, t, group, cfg, embeddings, counts
            )
            out = _select_step(
                group.prefixes, group.thetas, group.finished,
                rows, delta, strength, group_width,
            )
            group.prefixes, group.thetas, group.finished, _, tokens = out
            for tok in tokens:
                if tok >= 0:
                    counts[tok] += 1.0
    return groups


def _decode_grouped_native(model, ctx, n_groups, group_width, strength, max_len):
    """Same decode as :func:`_decode_grouped_pure` on the compiled kernel.

    State lives in flat group-major arrays; per time step the live rows
    are gathered, then one kernel call steps every group (selection,
    hamming counts, and the stable re-sort all run in C). Only prefix
    bookkeeping stays in Python. Output is bit-identical to the pure
    path.
    """
    kernels = _backend.kernels()
    size = model.vocab.size
    capacity = n_groups * group_width

    prefixes: list[tuple[int, ...]] = [()] * n_groups
    theta = np.zeros(n_groups)
    fin = np.zeros(n_groups, dtype=np.uint8)
    offsets = np.arange(n_groups + 1, dtype=np.int32)

    out_theta = np.empty(capacity)
    out_parent = np.empty(capacity, dtype=np.int32)
    out_token = np.empty(capacity, dtype=np.int32)
    out_fin = np.empty(capacity, dtype=np.uint8)
    out_off = np.empty(n_groups + 1, dtype=np.int32)
    sel_score = np.empty(group_width)
    sel_parent = np.empty(group_width, dtype=np.int32)
    sel_token = np.empty(group_width, dtype=np.int32)
    counts = np.empty(size)
    rows = np.empty((capacity, size))

    for _ in range(max_len):
        live = np.flatnonzero(fin == 0)
        if live.size == 0:
            break
        row_of = np.full(len(prefixes), -1, dtype=np.int32)
        row_of[live] = np.arange(live.size, dtype=np.int32)
        for j, slot in enumerate(live):
            rows[j] = model.log_probs(ctx, prefixes[slot])
        counts[:] = 0.0
        kernels.grouped_step(
            theta, fin, offsets, rows[: live.size], row_of,
            strength, group_width, EOS_ID, counts,
            sel_score, sel_parent, sel_token,
            out_theta, out_parent, out_token, out_fin, out_off,
        )
        new_prefixes = []
        for g in range(n_groups):
            lo = int(offsets[g])
            for j in range(int(out_off[g]), int(out_off[g + 1])):
                parent = lo + int(out_parent[j])
                tok = int(out_token[j])
                if tok < 0:
                    new_prefixes.append(prefixes[parent])
                else:
                    new_prefixes.append(prefixes[parent] + (tok,))
        total = int(out_off[n_groups])
        prefixes = new_prefixes
        theta = out_theta[:total].copy()
        fin = out_fin[:total].copy()
        offsets = out_off.copy()

    groups = []
    for g in range(n_groups):
        lo, hi = int(offsets[g]), int(offsets[g + 1])
        group = _Group()
        group.prefixes = prefixes[lo:hi]
        group.thetas = [float(x) for x in theta[lo:hi]]
        group.finished = [bool(x) for x in fin[lo:hi]]
        groups.append(group)
    return groups


def _decode_grouped(model, ctx, n_groups, group_width, strength, max_len,
                    kind, cfg, embeddings):
    if _backend.native_enabled() and (n_groups == 1 or kind == "hamming"):
        return _decode_grouped_native(
            model, ctx, n_groups, group_width, strength, max_len
        )
    return _decode_grouped_pure(
        model, ctx, n_groups, group_width, strength, max_len, kind, cfg, embeddings
    )


def beam_search(model: Scorer, ctx: DecodeContext, cfg: DecodeConfig) -> list[Hypothesis]:
    """Plain width-B beam search; the group count is ignored.

    Returns the surviving hypotheses ranked by pure log-probability
    descending (normalized by length when the config asks for it).
    """
    validate_config(cfg)
    groups = _decode_grouped(
        model, ctx, 1, cfg.beam_width, 0.0, cfg.max_len, "hamming", cfg, None
    )
    return _ranked(list(groups[0].hypotheses()), cfg.length_normalize)


def _ranked(hyps: list[Hypothesis], length_normalize: bool) -> list[Hypothesis]:
    if length_normalize:
        return sorted(hyps, key=lambda h: -(h.logprob / max(1, len(h.tokens))))
    return hyps


def diverse_beam_search(
    model: Scorer,
    ctx: DecodeContext,
    cfg: DecodeConfig,
    embeddings: EmbeddingTable | None = None,
) -> GroupedRankedList:
    """Grouped beam search with dissimilarity-augmented selection.

    Each time step extends the groups in order; group g's selection
    scores are adjusted by the aggregated dissimilarity to groups 1..g-1
    (already extended this step) scaled by the diversity strength. With
    one group this is exactly :func:`beam_search`.
    """
    validate_config(cfg)
    if cfg.diversity == "embedding" and embeddings is None:
        raise ConfigError("embedding diversity requires an embedding table")
    groups = _decode_grouped(
        model,
        ctx,
        cfg.num_groups,
        cfg.group_width,
        cfg.diversity_strength,
        cfg.max_len,
        cfg.diversity,
        cfg,
        embeddings,
    )
    return GroupedRankedList(tuple(g.hypotheses() for g in groups))


def exhaustive_topk(model: Scorer, ctx: DecodeContext, max_len: int, k: int) -> list[Hypothesis]:
    """Enumerate every sequence up to ``max_len`` and keep the k best.

    Sequences terminate at EOS or at the length limit; zero-probability
    branches are never entered. Ties are broken by lexicographic token-id
    order. Refuses vocab**max_len beyond 10**7.
    """
    size = model.vocab.size
    if size**max_len > EXHAUSTIVE_GUARD:
        raise SearchSpaceTooLarge(
            f"{size}**{max_len} exceeds the {EXHAUSTIVE_GUARD} enumeration guard"
        )
    complete: list[tuple[float, tuple[int, ...]]] = []
    stack: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    while stack:
        prefix, theta = stack.pop()
        row = model.log_probs(ctx, prefix)
        for tok in range(size):
            lp = float(row[tok])
            if lp == NEG_INF:
                continue
            seq = prefix + (tok,)
            total = theta + lp
            if tok == EOS_ID or len(seq) == max_len:
                complete.append((total, seq))
            else:
                stack.append((seq, total))
    complete.sort(key=lambda item: (-item[0], item[1]))
    return [
        Hypothesis(seq, theta, seq[-1] == EOS_ID)
        for theta, seq in complete[:k]
    ]


def decode_li2016(model: Scorer, ctx: DecodeContext, cfg: DecodeConfig) -> list[Hypothesis]:
    """Beam search with an intra-sibling rank penalty on selection.

    Within each parent, continuations are ranked 1.. by descending token
    log-probability (ties by token id) and their selection scores reduced
    by rank_penalty * rank. Stored scores and the final ranking stay pure,
    so a zero penalty reproduces plain beam search exactly.
    """
    validate_config(cfg)
    group = _Group()
    size = model.vocab.size
    token_order = np.arange(size)
    for _ in range(cfg.max_len):
        if group.all_finished():
            break
        rows = _gather_rows(model, ctx, group)
        deltas = []
        for row, fin in zip(rows, group.finished):
            if fin:
                continue
            order = np.lexsort((token_order, -row))
            ranks = np.empty(size)
            ranks[order] = np.arange(1, size + 1)
            deltas.append(-ranks)
        out = _select_step(
            group.prefixes, group.thetas, group.finished,
            rows, deltas, cfg.rank_penalty, cfg.beam_width,
        )
        group.prefixes, group.thetas, group.finished = out[0], out[1], out[2]
    return _ranked(list(group.hypotheses()), cfg.length_normalize)


def decode_mmi(
    model: Scorer,
    u_model: Scorer,
    ctx: DecodeContext,
    cfg: DecodeConfig,
) -> list[ScoredHypothesis]:
    """Beam search under the objective log P(y|x) - w * log U(y).

    ``u_model`` is the unconditioned sequence model; it must share the
    vocabulary and is always scored against the empty context. The beam is
    managed and finally ranked by the modified objective, while each
    hypothesis also reports its pure log-probability.
    """
    if u_model.vocab != model.vocab:
        raise VocabMismatch("unconditioned model vocabulary differs")
    validate_config(cfg)
    empty = DecodeContext()
    group = _Group()
    objectives = [0.0]
    for _ in range(cfg.max_len):
        if group.all_finished():
            break
        # The group's stored scores are the modified objective; pure
        # log-probabilities ride along in parallel.
        pure = group.thetas
        rows = _gather_rows(model, ctx, group)
        deltas = []
        for prefix, fin in zip(group.prefixes, group.finished):
            if fin:
                continue
            deltas.append(-u_model.log_probs(empty, prefix))
        obj_state = list(objectives)
        out = _select_step(
            group.prefixes, obj_state, group.finished,
            rows, deltas, cfg.mmi_weight, cfg.beam_width, accumulate=True,
        )
        new_prefixes, new_objs, new_fin, parents, tokens = out
        new_pure = []
        for parent, tok in zip(parents, tokens):
            if tok < 0:
                new_pure.append(pure[parent])
            else:
                new_pure.append(pure[parent] + float(rows[parent][tok]))
        group.prefixes, group.thetas, group.finished = new_prefixes, new_pure, new_fin
        objectives = new_objs
    return [
        ScoredHypothesis(Hypothesis(p, th, fin), obj)
        for p, th, fin, obj in zip(
            group.prefixes, group.thetas, group.finished, objectives
        )
    ]
