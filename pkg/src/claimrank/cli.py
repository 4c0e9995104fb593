"""Command-line entry point.

Every subcommand that writes files also writes a run manifest next to its
primary output: the resolved configuration, SHA-256 digests of the inputs,
the tool version, and the seed, which is enough to re-run the command
bit-identically. Data goes to stdout only for `search` and `report`;
diagnostics go to stderr. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, adapter, ensemble, evaluation, retrieval
from .corpus import CHANNELS, ENGLISH, FACTCHECK, ORIGINAL, POST, load_corpus
from .embeddings import read_matrix, write_matrix
from .errors import DataError
from .manifest import manifest_path_for, write_manifest
from .textprep import CleaningConfig, clean_text, combine_post


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _log(message: str) -> None:
    sys.stderr.write(message + "\n")


def _corpus_args(parser) -> None:
    parser.add_argument("--posts", required=True, help="posts JSONL path")
    parser.add_argument("--factchecks", required=True, help="fact-checks JSONL path")
    parser.add_argument("--pairs", required=True, help="gold pairs JSONL path")


def _load_corpus_from(args, require_english: bool = False):
    return load_corpus(
        args.posts, args.factchecks, args.pairs, require_english=require_english
    )


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="claimrank", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--config",
        help="JSON file of default flag values (explicit flags win)",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    parsers: dict[str, argparse.ArgumentParser] = {}

    def add(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        parsers[name] = p
        return p

    p = add("preprocess", "clean corpus text and build combined post fields")
    _corpus_args(p)
    p.add_argument("--out", required=True, help="prepared JSONL output path")
    p.add_argument(
        "--channels",
        default="original,english",
        help="comma list of channels to prepare (original,english)",
    )
    p.add_argument("--keep-urls", action="store_true", help="do not strip URLs")
    p.add_argument("--keep-hashtags", action="store_true", help="do not strip hashtags")
    p.add_argument("--keep-emoji", action="store_true", help="do not strip emoji")
    p.add_argument(
        "--no-collapse", action="store_true", help="do not collapse whitespace"
    )

    p = add("import-embeddings", "validate an EMBX file, optionally re-serialize")
    p.add_argument("--embx", required=True, help="EMBX file to import")
    p.add_argument("--out", help="write the canonical re-serialization here")

    p = add("retrieve", "rank fact-checks for every post")
    _corpus_args(p)
    p.add_argument("--posts-embx", required=True)
    p.add_argument("--factchecks-embx", required=True)
    p.add_argument("--mode", default=retrieval.MONOLINGUAL, choices=retrieval.MODES)
    p.add_argument("--channel", default=ORIGINAL, choices=CHANNELS)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--post-lang", help="only rank posts of this language")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True, help="rankings JSONL output path")

    p = add("train-adapter", "train a linear adapter on the gold pairs")
    _corpus_args(p)
    p.add_argument("--posts-embx", required=True)
    p.add_argument("--factchecks-embx", required=True)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--scale", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", default=adapter.ADAPT_PASSAGE, choices=adapter.ADAPT_SIDES)
    p.add_argument("--langs", help="train only on pairs whose post language is listed")
    p.add_argument("--out", required=True, help="adapter ADPT output path")

    p = add("apply-adapter", "map an embedding matrix through an adapter")
    p.add_argument("--adapter", required=True, help="ADPT file")
    p.add_argument("--embx", required=True, help="input EMBX file")
    p.add_argument("--out", required=True, help="output EMBX path")

    p = add("fuse", "fuse per-model rankings with weighted voting")
    p.add_argument("--posts", required=True, help="posts JSONL path (for languages)")
    p.add_argument(
        "--rankings",
        action="append",
        required=True,
        metavar="MODEL=PATH",
        help="per-model rankings JSONL (repeatable)",
    )
    p.add_argument("--profiles", required=True, help="profiles JSON path")
    p.add_argument(
        "--confidence",
        default=ensemble.CONF_SIMILARITY,
        choices=ensemble.CONFIDENCE_KINDS,
    )
    p.add_argument("--k-out", type=int, default=10)
    p.add_argument("--pool-k", type=int, default=10,
                   help="per-model candidate pool size before fusion")
    p.add_argument("--out", required=True, help="fused rankings JSONL path")

    p = add("evaluate", "score rankings and write a report")
    _corpus_args(p)
    p.add_argument("--rankings", required=True, help="same-language-track rankings")
    p.add_argument("--cross-rankings", help="crosslingual-track rankings")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--model-id", default="")
    p.add_argument("--out", required=True, help="report JSON output path")

    p = add("report", "render report JSON files as an aligned table")
    p.add_argument("--report", action="append", required=True,
                   help="report JSON path (repeatable)")

    p = add("synth", "generate a synthetic benchmark corpus and embeddings")
    p.add_argument("--langs", type=int, default=3)
    p.add_argument("--posts", type=int, default=200)
    p.add_argument("--distractors", type=int, default=1000)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--rotate-lang", type=int, default=None,
                   help="index of the language whose fact-check space is rotated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = add("search", "print the top-k table for one post")
    _corpus_args(p)
    p.add_argument("--posts-embx", required=True)
    p.add_argument("--factchecks-embx", required=True)
    p.add_argument("--post-id", required=True)
    p.add_argument("--mode", default=retrieval.MONOLINGUAL, choices=retrieval.MODES)
    p.add_argument("--channel", default=ORIGINAL, choices=CHANNELS)
    p.add_argument("--k", type=int, default=10)

    return parser, parsers


def _apply_config_overlay(argv, parsers) -> None:
    if "--config" not in argv:
        return
    config_path = argv[argv.index("--config") + 1]
    with open(config_path, encoding="utf-8") as fh:
        overlay = json.load(fh)
    if not isinstance(overlay, dict):
        raise DataError(f"{config_path}: config overlay must be a JSON object")
    sub = next((a for a in argv if a in parsers), None)
    if sub is None:
        return
    parser = parsers[sub]
    known = {action.dest for action in parser._actions}
    parser.set_defaults(
        **{k.replace("-", "_"): v for k, v in overlay.items()
           if k.replace("-", "_") in known}
    )


def _cleaning_config(args) -> CleaningConfig:
    return CleaningConfig(
        strip_urls=not args.keep_urls,
        strip_hashtags=not args.keep_hashtags,
        strip_emoji=not args.keep_emoji,
        collapse_whitespace=not args.no_collapse,
    )


def _cmd_preprocess(args) -> int:
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    for channel in channels:
        if channel not in CHANNELS:
            raise DataError(f"unknown channel {channel!r}")
    cfg = _cleaning_config(args)
    corpus = _load_corpus_from(args, require_english=ENGLISH in channels)
    rows = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for kind, docs in ((POST, corpus.posts), (FACTCHECK, corpus.factchecks)):
            for doc_id in sorted(docs):
                doc = docs[doc_id]
                row = {"id": doc.id, "kind": kind, "lang": doc.lang}
                if ORIGINAL in channels:
                    row["combined_original"] = (
                        combine_post(doc, cfg, ORIGINAL)
                        if kind == POST
                        else clean_text(doc.text_original, cfg)
                    )
                if ENGLISH in channels:
                    row["combined_english"] = (
                        combine_post(doc, cfg, ENGLISH)
                        if kind == POST
                        else clean_text(doc.text_english or "", cfg)
                    )
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
                rows += 1
    write_manifest(
        manifest_path_for(args.out),
        "preprocess",
        {
            "cleaning": cfg.as_dict(),
            "channels": channels,
            "factchecks_cleaned_like_posts": True,
            "out": str(args.out),
        },
        inputs=[args.posts, args.factchecks, args.pairs],
    )
    _log(f"[preprocess] wrote {rows} prepared documents to {args.out}")
    return 0


def _cmd_import_embeddings(args) -> int:
    matrix = read_matrix(args.embx)
    _log(
        f"[import] model={matrix.model_id!r} channel={matrix.channel} "
        f"kind={matrix.kind} dim={matrix.dim} rows={len(matrix)} "
        f"renormalized={matrix.renormalized}"
    )
    if args.out:
        write_matrix(matrix, args.out)
        write_manifest(
            manifest_path_for(args.out),
            "import-embeddings",
            {"embx": str(args.embx), "out": str(args.out)},
            inputs=[args.embx],
        )
    return 0


def _make_retriever(args, corpus):
    posts_matrix = read_matrix(args.posts_embx)
    facts_matrix = read_matrix(args.factchecks_embx)
    cfg = retrieval.RetrievalConfig(
        k=args.k,
        mode=args.mode,
        channel=args.channel,
        model_id=facts_matrix.model_id,
    )
    return retrieval.Retriever(corpus, posts_matrix, facts_matrix, cfg)


def _cmd_retrieve(args) -> int:
    corpus = _load_corpus_from(args)
    retriever = _make_retriever(args, corpus)
    post_ids = sorted(
        doc.id
        for doc in corpus.posts.values()
        if args.post_lang is None or doc.lang == args.post_lang
    )
    if not post_ids:
        raise DataError("no posts selected for retrieval")
    rankings = retriever.retrieve_many(post_ids, threads=max(1, args.threads))
    retrieval.write_rankings(rankings, args.out)
    write_manifest(
        manifest_path_for(args.out),
        "retrieve",
        {
            "mode": args.mode,
            "channel": args.channel,
            "k": args.k,
            "post_lang": args.post_lang,
            "threads": args.threads,
            "out": str(args.out),
        },
        inputs=[args.posts, args.factchecks, args.pairs,
                args.posts_embx, args.factchecks_embx],
    )
    _log(f"[retrieve] ranked {len(rankings)} posts -> {args.out}")
    return 0


def _cmd_train_adapter(args) -> int:
    corpus = _load_corpus_from(args)
    posts_matrix = read_matrix(args.posts_embx)
    facts_matrix = read_matrix(args.factchecks_embx)
    cfg = adapter.TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        epochs=args.epochs,
        warmup_steps=args.warmup,
        scale=args.scale,
        seed=args.seed,
        adapt_side=args.side,
    )
    langs = None
    if args.langs:
        langs = {token.strip() for token in args.langs.split(",") if token.strip()}
    model, losses = adapter.train(corpus, posts_matrix, facts_matrix, cfg, langs=langs)
    adapter.write_adapter(model, args.out)
    write_manifest(
        manifest_path_for(args.out),
        "train-adapter",
        {
            "batch_size": cfg.batch_size,
            "lr": cfg.learning_rate,
            "epochs": cfg.epochs,
            "warmup": cfg.warmup_steps,
            "scale": cfg.scale,
            "side": cfg.adapt_side,
            "langs": sorted(langs) if langs else None,
            "out": str(args.out),
        },
        inputs=[args.posts, args.factchecks, args.pairs,
                args.posts_embx, args.factchecks_embx],
        seed=cfg.seed,
    )
    _log(
        f"[train-adapter] {len(losses)} steps, loss {losses[0]:.4f} -> "
        f"{losses[-1]:.4f}, wrote {args.out}"
    )
    return 0


def _cmd_apply_adapter(args) -> int:
    model = adapter.read_adapter(args.adapter)
    matrix = read_matrix(args.embx)
    adapted = adapter.apply_adapter(model, matrix)
    write_matrix(adapted, args.out)
    write_manifest(
        manifest_path_for(args.out),
        "apply-adapter",
        {"adapter": str(args.adapter), "embx": str(args.embx), "out": str(args.out)},
        inputs=[args.adapter, args.embx],
    )
    _log(
        f"[apply-adapter] {len(adapted)} rows -> {args.out} "
        f"(model {adapted.model_id!r})"
    )
    return 0


def _cmd_fuse(args) -> int:
    post_langs = {}
    with open(args.posts, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                post_langs[obj["id"]] = obj["lang"]
    per_model = {}
    for entry in args.rankings:
        if "=" not in entry:
            raise DataError(f"--rankings expects MODEL=PATH, got {entry!r}")
        model_id, path = entry.split("=", 1)
        per_model[model_id] = {
            r.post_id: r for r in retrieval.read_rankings(path)
        }
    profiles = ensemble.read_profiles(args.profiles)
    cfg = ensemble.FusionConfig(confidence=args.confidence, k_out=args.k_out)
    all_posts = sorted({p for rankings in per_model.values() for p in rankings})
    fused = []
    for post_id in all_posts:
        lang = post_langs.get(post_id)
        if lang is None:
            raise DataError(f"ranked post {post_id!r} not found in {args.posts}")
        contributions = {
            model_id: rankings[post_id]
            for model_id, rankings in per_model.items()
            if post_id in rankings
        }
        fused.append(
            ensemble.fuse(contributions, profiles, lang, cfg, pool_k=args.pool_k)
        )
    retrieval.write_rankings(fused, args.out)
    write_manifest(
        manifest_path_for(args.out),
        "fuse",
        {
            "confidence": args.confidence,
            "k_out": args.k_out,
            "pool_k": args.pool_k,
            "models": sorted(per_model),
            "out": str(args.out),
        },
        inputs=[args.posts, args.profiles]
        + [entry.split("=", 1)[1] for entry in args.rankings],
    )
    _log(f"[fuse] fused {len(fused)} posts from {len(per_model)} models -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    corpus = _load_corpus_from(args)
    rankings = retrieval.read_rankings(args.rankings)
    cross = (
        retrieval.read_rankings(args.cross_rankings)
        if args.cross_rankings
        else None
    )
    report = evaluation.evaluate(
        corpus, rankings, args.k, model_id=args.model_id, cross_rankings=cross
    )
    evaluation.write_report(report, args.out)
    inputs = [args.posts, args.factchecks, args.pairs, args.rankings]
    if args.cross_rankings:
        inputs.append(args.cross_rankings)
    write_manifest(
        manifest_path_for(args.out),
        "evaluate",
        {"k": args.k, "model_id": args.model_id, "out": str(args.out)},
        inputs=inputs,
    )
    _log(f"[evaluate] report -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    reports = [evaluation.read_report(path) for path in args.report]
    sys.stdout.write(evaluation.render_table(reports))
    return 0


def _cmd_synth(args) -> int:
    corpus, posts_matrix, facts_matrix = evaluation.make_synthetic(
        n_langs=args.langs,
        posts_per_lang=args.posts,
        distractors_per_lang=args.distractors,
        dim=args.dim,
        noise=args.noise,
        seed=args.seed,
        rotate_lang=args.rotate_lang,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    from .corpus import save_corpus

    save_corpus(corpus, out)
    write_matrix(posts_matrix, out / "posts.embx")
    write_matrix(facts_matrix, out / "factchecks.embx")
    write_manifest(
        out / "manifest.json",
        "synth",
        {
            "langs": args.langs,
            "posts": args.posts,
            "distractors": args.distractors,
            "dim": args.dim,
            "noise": args.noise,
            "rotate_lang": args.rotate_lang,
            "out_dir": str(out),
        },
        inputs=[],
        seed=args.seed,
    )
    _log(
        f"[synth] {len(corpus.posts)} posts, {len(corpus.factchecks)} fact-checks "
        f"-> {out}"
    )
    return 0


def _cmd_search(args) -> int:
    corpus = _load_corpus_from(args)
    retriever = _make_retriever(args, corpus)
    ranked = retriever.retrieve(args.post_id)
    post = corpus.posts[args.post_id]
    sys.stdout.write(f"post {post.id} lang={post.lang} mode={args.mode}\n")
    sys.stdout.write(f"{'rank':>4}  {'score':>9}  id\n")
    for rank, (doc_id, score) in enumerate(ranked.hits, start=1):
        sys.stdout.write(f"{rank:>4}  {score:>9.6f}  {doc_id}\n")
    return 0


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "import-embeddings": _cmd_import_embeddings,
    "retrieve": _cmd_retrieve,
    "train-adapter": _cmd_train_adapter,
    "apply-adapter": _cmd_apply_adapter,
    "fuse": _cmd_fuse,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "synth": _cmd_synth,
    "search": _cmd_search,
}


def dispatch(argv: list[str]) -> int:
    parser, parsers = build_parser()
    try:
        _apply_config_overlay(argv, parsers)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"claimrank: cannot read config overlay: {exc}\n")
        return 1
    except DataError as exc:
        sys.stderr.write(f"claimrank: {exc}\n")
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.subcommand](args)
    except DataError as exc:
        sys.stderr.write(f"claimrank {args.subcommand}: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"claimrank {args.subcommand}: {exc}\n")
        return 2


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
