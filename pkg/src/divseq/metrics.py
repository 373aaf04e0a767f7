"""List-quality metrics: sentence BLEU, top-k oracle, and distinct-n.

Metrics operate on plain token sequences (any hashable token type) and
are pure functions. Sequences are expected to carry words only: the
decode pipeline strips EOS before anything here is called, so BOS/EOS
never enter a count.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import BadN, EmptyCandidate, EmptyList, NoReferences


def _ngrams(seq, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def sentence_bleu(candidate, references, max_n: int = 4) -> float:
    """Sentence-level BLEU with a pinned smoothing scheme.

    Uniform-weight geometric mean of clipped n-gram precisions for
    n = 1..max_n, times the brevity penalty exp(1 - r/c) when the
    candidate is shorter than the closest reference length r (length ties
    resolve to the shorter reference). Orders with no candidate n-grams
    are dropped and the weights renormalized; orders with n-grams but
    zero matches are smoothed to (matches+1)/(total+1), except order 1,
    which is never smoothed: zero unigram overlap scores 0.
    """
    candidate = list(candidate)
    if not candidate:
        raise EmptyCandidate("candidate sequence is empty")
    references = [ref for ref in (list(r) for r in references) if ref]
    if not references:
        raise NoReferences("need at least one non-empty reference")

    log_precisions = []
    for n in range(1, max_n + 1):
        total = len(candidate) - n + 1
        if total <= 0:
            continue
        cand_counts = _ngrams(candidate, n)
        ref_counts = [_ngrams(ref, n) for ref in references]
        matches = 0
        for gram, count in cand_counts.items():
            best = max(rc.get(gram, 0) for rc in ref_counts)
            matches += min(count, best)
        if matches == 0:
            if n == 1:
                return 0.0
            precision = 1.0 / (total + 1)
        else:
            precision = matches / total
        log_precisions.append(math.log(precision))

    score = math.exp(sum(log_precisions) / len(log_precisions))
    c = len(candidate)
    r = min(sorted(len(ref) for ref in references), key=lambda L: abs(L - c))
    if c < r:
        score *= math.exp(1.0 - r / c)
    return score


def oracle_at_k(ranked, references, metric, k: int) -> float:
    """Best metric value over the top-k entries of a ranked list.

    ``ranked`` must already be in the decoder's final ranking; ``k``
    beyond the list length clamps to the whole list.
    """
    if not ranked:
        raise EmptyList("ranked list is empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return max(metric(entry, references) for entry in ranked[:k])


def distinct_n(sequences, n: int) -> float:
    """Distinct n-grams across a list, per word generated.

    The numerator is the number of unique n-grams over all sequences in
    the list; the denominator is the total token count, which biases the
    ratio against long outputs.
    """
    if not sequences:
        raise EmptyList("sequence list is empty")
    if n < 1:
        raise BadN(f"n must be >= 1, got {n}")
    grams = set()
    words = 0
    for seq in sequences:
        seq = list(seq)
        words += len(seq)
        for i in range(len(seq) - n + 1):
            grams.add(tuple(seq[i : i + n]))
    if words == 0:
        return 0.0
    return len(grams) / words


@dataclass(frozen=True)
class MetricReport:
    """Aggregated list-quality numbers for one decoding run.

    Oracle values are means over inputs of the best metric in the top-k;
    they are non-decreasing in k. Distinct ratios are per-input-list
    ratios averaged over inputs; mean_len averages word counts over every
    hypothesis; top1_logprob averages the rank-1 scores.
    """

    oracle: dict[int, float] | None
    distinct: dict[int, float]
    mean_len: float
    top1_logprob: float


def evaluate_lists(
    hyp_lists: list[list[list[str]]],
    logprob_lists: list[list[float]],
    ref_lists: list[list[list[str]]] | None,
    ks: list[int],
    max_distinct_n: int = 4,
) -> MetricReport:
    """Aggregate metrics over a batch of per-input hypothesis lists.

    ``hyp_lists[i]`` holds input i's hypotheses (word sequences, EOS
    already stripped) in final-ranking order. References may be omitted,
    in which case oracle columns are skipped. Empty hypotheses score 0
    BLEU rather than erroring.
    """
    if not hyp_lists:
        raise EmptyList("no inputs to evaluate")

    oracle = None
    if ref_lists is not None:
        def safe_bleu(hyp, refs):
            if not hyp:
                return 0.0
            return sentence_bleu(hyp, refs)

        oracle = {
            k: sum(
                oracle_at_k(hyps, refs, safe_bleu, k)
                for hyps, refs in zip(hyp_lists, ref_lists)
            ) / len(hyp_lists)
            for k in ks
        }

    distinct = {}
    for n in range(1, max_distinct_n + 1):
        distinct[n] = sum(distinct_n(hyps, n) for hyps in hyp_lists) / len(hyp_lists)

    total_hyps = sum(len(hyps) for hyps in hyp_lists)
    mean_len = (
        sum(len(h) for hyps in hyp_lists for h in hyps) / total_hyps
        if total_hyps
        else 0.0
    )
    top1 = sum(lps[0] for lps in logprob_lists) / len(logprob_lists)
    return MetricReport(oracle, distinct, mean_len, top1)


def report_header(ks: list[int], max_distinct_n: int = 4) -> str:
    """Tab-separated header for report rows."""
    cols = ["method", "B", "G", "lambda", "diversity"]
    cols += [f"oracle@{k}" for k in ks]
    cols += [f"distinct-{n}" for n in range(1, max_distinct_n + 1)]
    cols += ["mean_len", "top1_logprob"]
    return "\t".join(cols)


def report_row(
    report: MetricReport,
    ks: list[int],
    method: str,
    beam_width: int,
    num_groups: int,
    strength,
    diversity: str,
    max_distinct_n: int = 4,
) -> str:
    """One tab-separated report line matching :func:`report_header`."""
    cells = [method, str(beam_width), str(num_groups)]
    cells.append("-" if strength is None else f"{strength:g}")
    cells.append(diversity)
    for k in ks:
        cells.append("-" if report.oracle is None else f"{report.oracle[k]:.4f}")
    for n in range(1, max_distinct_n + 1):
        cells.append(f"{report.distinct[n]:.4f}")
    cells.append(f"{report.mean_len:.4f}")
    cells.append(f"{report.top1_logprob:.4f}")
    return "\t".join(cells)
