"""CLI for batch-embedding prepared corpus documents into EMBX files."""

from __future__ import annotations

import argparse
import sys

from .embx import CHANNEL_CODES, ExportError, KIND_CODES
from .export import ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embx-export",
        description=(
            "Embed the documents of a prepared corpus with a named encoder "
            "and write an EMBX matrix. Use hash:<dim> for the built-in "
            "deterministic hashing encoder, or any sentence-transformers "
            "model name/path."
        ),
    )
    parser.add_argument("--model", required=True, help="encoder name, path, or hash:<dim>")
    parser.add_argument("--input", required=True, help="prepared corpus JSONL")
    parser.add_argument("--channel", required=True, choices=sorted(CHANNEL_CODES))
    parser.add_argument("--kind", required=True, choices=sorted(KIND_CODES))
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--query-prefix", default="",
                        help="prefix prepended to post texts before encoding")
    parser.add_argument("--passage-prefix", default="",
                        help="prefix prepended to fact-check texts before encoding")
    parser.add_argument("--empty-text", default="error",
                        choices=("error", "placeholder"),
                        help="what to do with documents whose cleaned text is empty")
    parser.add_argument("--expect-dim", type=int, default=None,
                        help="fail unless the encoder emits this dimension")
    parser.add_argument("--out", required=True, help="EMBX output path")
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        model=args.model,
        input_path=args.input,
        channel=args.channel,
        kind=args.kind,
        out_path=args.out,
        batch_size=args.batch_size,
        query_prefix=args.query_prefix,
        passage_prefix=args.passage_prefix,
        empty_text=args.empty_text,
        expect_dim=args.expect_dim,
    )
    try:
        count = export(job)
    except ExportError as exc:
        sys.stderr.write(f"embx-export: {exc}\n")
        raise SystemExit(2)
    except FileNotFoundError as exc:
        sys.stderr.write(f"embx-export: {exc}\n")
        raise SystemExit(2)
    sys.stderr.write(
        f"[export] {count} {args.kind} rows ({args.channel}) -> {args.out}\n"
    )
    raise SystemExit(0)


if __name__ == "__main__":
    main()
