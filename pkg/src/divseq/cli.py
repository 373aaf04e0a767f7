"""Operator surface: train models, run decoders, evaluate, sweep, benchmark.

Exit codes: 0 success, 1 I/O or data-alignment failure, 2 bad flags or
invalid configuration. Config errors are raised before any output file is
created, and every command is deterministic: identical inputs and flags
produce byte-identical outputs.

Decode output is JSON Lines, one object per hypothesis in final-ranking
order, with fields v, input_id, method, group, rank_in_group, tokens
(space-joined words, EOS stripped), logprob (nats), plus objective for
MMI runs. Reference files for eval are JSON Lines of
``{"input_id": ..., "refs": ["w w w", ...]}``.

Batch decodes parallelize across input lines when DIVSEQ_THREADS is set
above 1; the writer keeps input order either way.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import bench as bench_mod
from .core import DecodeConfig, DecodeContext, build_vocab, validate_config
from .errors import ConfigError, DivseqError, InputMismatch
from .metrics import evaluate_lists, report_header, report_row
from .scorers import NGramLM, load_embeddings, train_ngram_lm
from .search import (
    beam_search,
    decode_li2016,
    decode_mmi,
    diverse_beam_search,
    exhaustive_topk,
)

JSONL_VERSION = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divseq")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lm", help="count an n-gram LM from a text corpus")
    p.add_argument("corpus", help="whitespace-tokenized text, one sequence per line")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--add-k", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decode", help="decode hypotheses for each input line")
    _add_decode_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="score a decode against references")
    p.add_argument("--hyp", required=True, help="decode JSONL")
    p.add_argument("--refs", required=True, help="reference JSONL")
    p.add_argument("--metric", choices=["bleu"], default="bleu")
    p.add_argument("-k", default="1,5,10,20", help="comma-separated oracle cutoffs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="grid-search diversity strength and group count")
    _add_decode_flags(p, sweep=True)
    p.add_argument("--lambda-grid", required=True, help="comma-separated strengths")
    p.add_argument("--G-grid", dest="g_grid", required=True,
                   help="comma-separated group counts")
    p.add_argument("--refs", default=None, help="optional reference JSONL")
    p.add_argument("-k", default="1,5,10,20")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="time the decoders on both backends")
    p.add_argument("-B", type=int, default=20)
    p.add_argument("-G", type=int, default=20)
    p.add_argument("-T", type=int, default=12)
    p.add_argument("--decodes", type=int, default=200)
    p.add_argument("--vocab-size", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["both", "native", "python"], default="both")
    return parser


def _add_decode_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--lm", required=True, help="LM file from train-lm")
    if not sweep:
        p.add_argument(
            "--method",
            choices=["bs", "dbs", "li2016", "mmi", "exhaustive"],
            default="bs",
        )
        p.add_argument("-G", type=int, default=1, help="number of diversity groups")
        p.add_argument("--gamma-li", dest="gamma_li", type=float, default=0.0)
        p.add_argument("--lambda-mmi", dest="lambda_mmi", type=float, default=0.0)
    p.add_argument("-B", type=int, required=True, help="total beam width")
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.0,
                   help="diversity strength")
    p.add_argument(
        "--diversity",
        choices=["hamming", "cumulative", "ngram", "embedding"],
        default="hamming",
    )
    p.add_argument("--Gamma", dest="gamma_temp", type=float, default=1.0,
                   help="cumulative-diversity temperature")
    p.add_argument("--div-n", dest="div_n", type=int, default=2,
                   help="n for the n-gram diversity function")
    p.add_argument("-T", type=int, default=20, help="maximum decode length")
    p.add_argument("--embeddings", default=None,
                   help="word2vec-format text, required for embedding diversity")
    p.add_argument("--input", default=None,
                   help="conditioning lines; omitted means one empty context")


def _config_from_args(args, method: str, num_groups: int,
                      lam: float) -> DecodeConfig:
    return validate_config(
        DecodeConfig(
            beam_width=args.B,
            num_groups=num_groups,
            diversity_strength=lam,
            rank_penalty=getattr(args, "gamma_li", 0.0),
            mmi_weight=getattr(args, "lambda_mmi", 0.0),
            cumulative_temp=args.gamma_temp,
            diversity_ngram=args.div_n,
            max_len=args.T,
            method=method,
            diversity=args.diversity,
        )
    )


def _read_inputs(path: str | None) -> list[str]:
    if path is None:
        return [""]
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _load_lm(path: str) -> NGramLM:
    with open(path, "rb") as fh:
        return NGramLM.from_bytes(fh.read())


def _load_embedding_table(args, lm):
    if args.diversity != "embedding":
        return None
    if not args.embeddings:
        raise ConfigError("--diversity embedding requires --embeddings")
    with open(args.embeddings, encoding="utf-8") as fh:
        table, skipped = load_embeddings(fh.read(), lm.vocab)
    if skipped:
        print(f"embeddings: skipped {skipped} out-of-vocab rows", file=sys.stderr)
    return table


def _thread_count() -> int:
    raw = os.environ.get("DIVSEQ_THREADS", "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ConfigError(f"DIVSEQ_THREADS must be >= 1, got {raw}")
    return count


def _decode_batch(decode_one, inputs: list[str]):
    threads = _thread_count()
    if threads == 1:
        return [decode_one(text) for text in inputs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(decode_one, inputs))


def _decode_entries(lm, cfg: DecodeConfig, text: str, embeddings):
    """Decode one input to (group, rank, hypothesis, objective) entries
    in final-ranking order."""
    ctx = DecodeContext(lm.vocab.encode(text.split()))
    method = cfg.method
    if method == "dbs":
        grouped = diverse_beam_search(lm, ctx, cfg, embeddings)
        keyed = sorted(
            (-h.logprob, g, r)
            for g, group in enumerate(grouped.groups)
            for r, h in enumerate(group)
        )
        return [
            (g + 1, r + 1, grouped.groups[g][r], None) for _, g, r in keyed
        ]
    if method == "bs":
        hyps = beam_search(lm, ctx, cfg)
    elif method == "li2016":
        hyps = decode_li2016(lm, ctx, cfg)
    elif method == "exhaustive":
        hyps = exhaustive_topk(lm, ctx, cfg.max_len, cfg.beam_width)
    else:
        scored = decode_mmi(lm, lm, ctx, cfg)
        return [
            (1, r + 1, s.hypothesis, s.objective) for r, s in enumerate(scored)
        ]
    return [(1, r + 1, h, None) for r, h in enumerate(hyps)]


def cmd_decode(args) -> int:
    cfg = _config_from_args(args, args.method, args.G, args.lambda_)
    lm = _load_lm(args.lm)
    embeddings = _load_embedding_table(args, lm)
    inputs = _read_inputs(args.input)

    # With a single group the grouped search is plain beam search, so the
    # emitted method says so and the outputs match bs byte for byte.
    method_label = "bs" if (cfg.method == "dbs" and cfg.num_groups == 1) else cfg.method

    def decode_one(text: str):
        return _decode_entries(lm, cfg, text, embeddings)

    results = _decode_batch(decode_one, inputs)
    with open(args.out, "w", encoding="utf-8") as out:
        for input_id, entries in enumerate(results):
            for group, rank, hyp, objective in entries:
                record = {
                    "v": JSONL_VERSION,
                    "input_id": input_id,
                    "method": method_label,
                    "group": group,
                    "rank_in_group": rank,
                    "tokens": " ".join(hyp.words(lm.vocab)),
                    "logprob": hyp.logprob,
                }
                if objective is not None:
                    record["objective"] = objective
                out.write(json.dumps(record) + "\n")
    return 0


def cmd_train_lm(args) -> int:
    if args.order < 1:
        raise ConfigError(f"--order must be >= 1, got {args.order}")
    if args.add_k < 0:
        raise ConfigError(f"--add-k must be >= 0, got {args.add_k}")
    with open(args.corpus, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    seen: dict[str, None] = {}
    for line in lines:
        for word in line.split():
            seen.setdefault(word)
    vocab = build_vocab(list(seen))
    lm = train_ngram_lm(lines, args.order, args.add_k, vocab)
    with open(args.out, "wb") as out:
        out.write(lm.to_bytes())
    print(f"vocab size: {vocab.size}")
    print(f"{args.order}-gram events: {lm.ngram_count()}")
    return 0


def _read_hyp_file(path: str):
    """Group decode JSONL by input id, keeping line order per input."""
    by_input: dict[int, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            by_input.setdefault(record["input_id"], []).append(record)
    return by_input


def _read_refs_file(path: str) -> dict[int, list[list[str]]]:
    refs: dict[int, list[list[str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            refs[record["input_id"]] = [r.split() for r in record["refs"]]
    return refs


def _parse_ks(raw: str) -> list[int]:
    try:
        ks = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad -k list {raw!r}") from exc
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"-k entries must be >= 1, got {raw!r}")
    return ks


def cmd_eval(args) -> int:
    ks = _parse_ks(args.k)
    by_input = _read_hyp_file(args.hyp)
    refs = _read_refs_file(args.refs)
    for input_id in by_input:
        if input_id not in refs:
            raise InputMismatch(f"input_id {input_id} missing from references")
    for input_id in refs:
        if input_id not in by_input:
            raise InputMismatch(f"input_id {input_id} missing from hypotheses")

    ids = sorted(by_input)
    hyp_lists = [[rec["tokens"].split() for rec in by_input[i]] for i in ids]
    logprob_lists = [[rec["logprob"] for rec in by_input[i]] for i in ids]
    ref_lists = [refs[i] for i in ids]
    report = evaluate_lists(hyp_lists, logprob_lists, ref_lists, ks)

    methods = {rec["method"] for records in by_input.values() for rec in records}
    method = methods.pop() if len(methods) == 1 else "mixed"
    beam = max(len(records) for records in by_input.values())
    groups = max(rec["group"] for records in by_input.values() for rec in records)
    with open(args.out, "w", encoding="utf-8") as out:
        out.write(report_header(ks) + "\n")
        out.write(report_row(report, ks, method, beam, groups, None, "-") + "\n")
    return 0


def cmd_sweep(args) -> int:
    try:
        lambdas = [float(x) for x in args.lambda_grid.split(",") if x.strip()]
        group_counts = [int(x) for x in args.g_grid.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid: {exc}") from exc
    if not lambdas or not group_counts:
        raise ConfigError("grids must be non-empty")
    ks = _parse_ks(args.k)
    configs = {
        (lam, g): _config_from_args(args, "dbs", g, lam)
        for lam in lambdas
        for g in group_counts
    }

    lm = _load_lm(args.lm)
    embeddings = _load_embedding_table(args, lm)
    inputs = _read_inputs(args.input)
    refs = None
    if args.refs is not None:
        by_id = _read_refs_file(args.refs)
        try:
            refs = [by_id[i] for i in range(len(inputs))]
        except KeyError as exc:
            raise InputMismatch(f"input_id {exc.args[0]} missing from references")

    rows = []
    for lam in lambdas:
        for g in group_counts:
            cfg = configs[(lam, g)]

            def decode_one(text: str):
                return _decode_entries(lm, cfg, text, embeddings)

            results = _decode_batch(decode_one, inputs)
            hyp_lists = [
                [hyp.words(lm.vocab) for _, _, hyp, _ in entries]
                for entries in results
            ]
            logprob_lists = [
                [hyp.logprob for _, _, hyp, _ in entries] for entries in results
            ]
            report = evaluate_lists(hyp_lists, logprob_lists, refs, ks)
            rows.append(
                report_row(report, ks, "dbs", args.B, g, lam, args.diversity)
            )
    with open(args.out, "w", encoding="utf-8") as out:
        out.write(report_header(ks) + "\n")
        for row in rows:
            out.write(row + "\n")
    return 0


def cmd_bench(args) -> int:
    results = bench_mod.run_benchmark(
        beam_width=args.B,
        num_groups=args.G,
        max_len=args.T,
        decodes=args.decodes,
        vocab_size=args.vocab_size,
        seed=args.seed,
        backend=args.backend,
    )
    print(bench_mod.format_table(results))
    return 0


_COMMANDS = {
    "train-lm": cmd_train_lm,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivseqError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
