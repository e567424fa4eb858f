"""Command line interface: misinfonet-extract {extract,sample}."""

import argparse
import sys

from .extract import POOLINGS, ExtractError, extract_corpus
from .io import CorpusError, read_corpus, write_corpus
from .sample import SampleError, sample_corpus


def build_parser():
    ap = argparse.ArgumentParser(
        prog="misinfonet-extract",
        description="Produce embedding files and label CSVs from a JSONL corpus.")
    sub = ap.add_subparsers(dest="command")

    sp = sub.add_parser("extract", help="run encoder checkpoints over a corpus")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--bart-model", required=True,
                    help="checkpoint for the bart.mreb side")
    sp.add_argument("--roberta-model", required=True,
                    help="checkpoint for the roberta.mreb side")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--batch-size", type=int, default=16)
    sp.add_argument("--pooling", choices=POOLINGS, default="mean")
    sp.add_argument("--max-length", type=int, default=512)

    sp = sub.add_parser("sample", help="subsample a corpus per class")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--per-class", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    return ap


def run(args):
    if args.command == "extract":
        docs = read_corpus(args.corpus)
        report = extract_corpus(
            docs,
            {"bart": args.bart_model, "roberta": args.roberta_model},
            args.out_dir, batch_size=args.batch_size, pooling=args.pooling,
            max_length=args.max_length, log=print)
        total = sum(r["seconds"] for r in report.values())
        print(f"wrote {len(docs)} records to {args.out_dir} ({total:.1f}s total)")
        return 0
    if args.command == "sample":
        docs = read_corpus(args.corpus)
        kept = sample_corpus(docs, args.per_class, seed=args.seed)
        write_corpus(args.out, kept)
        print(f"kept {len(kept)} of {len(docs)} documents")
        return 0
    build_parser().print_usage(sys.stderr)
    return 1


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; we reserve 2 for data problems
        raise SystemExit(1 if e.code not in (0, None) else e.code)
    try:
        code = run(args)
    except (CorpusError, ExtractError, SampleError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
