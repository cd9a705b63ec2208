"""Command-line front end for the embedding extractor."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import (
    ConfigError,
    ExtractorConfig,
    extract,
    read_pairs_jsonl,
    read_pairs_tsv,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otto-extract",
        description="Extract token-level embeddings into the otto-align record format")
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument("-i", "--input", required=True,
                        help="parallel sentences (TSV) or word lists (JSONL)")
    parser.add_argument("-o", "--output", required=True, help="records JSONL path")
    parser.add_argument("--format", choices=["tsv", "jsonl"], default="tsv")
    parser.add_argument("--layer", default="last",
                        help='hidden-state index or "last" (0 = embedding layer)')
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=8)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    layer = args.layer if args.layer == "last" else int(args.layer)
    config = ExtractorConfig(model=args.model, layer=layer, device=args.device,
                             batch_size=args.batch_size,
                             segmentation="whitespace" if args.format == "tsv"
                             else "provided")
    reader = read_pairs_tsv if args.format == "tsv" else read_pairs_jsonl
    try:
        stats = extract(reader(args.input), config, args.output)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {stats.written} records, skipped {stats.skipped}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
