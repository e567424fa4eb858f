"""Command-line entry point.

Subcommands: synth, train, evaluate, rounds, ablate, analyze, shapes.
Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import corpus as corpus_mod
from . import data as data_mod
from . import metrics as metrics_mod
from . import model as model_mod
from . import training as training_mod
from .model import ConfigError, ModelConfig
from .tensor import DimensionError, NumericError
from .training import TrainConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def load_cli_config(path):
    """JSON config with optional 'model' and 'train' sections.

    Every violated invariant is collected before raising, so one round trip
    fixes them all.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: "
                          f"{e.msg}") from None
    problems = []
    model_cfg = ModelConfig()
    train_cfg = TrainConfig()
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(raw) - {"model", "train"}
    if unknown:
        problems.append(f"unknown top-level sections {sorted(unknown)}")
    if "model" in raw:
        try:
            model_cfg = ModelConfig.from_dict(raw["model"])
        except (ConfigError, TypeError, ValueError) as e:
            problems.append(str(e))
        else:
            problems.extend(model_mod.validate_config(model_cfg, require_pool_fit=True))
    if "train" in raw:
        t = raw["train"]
        known = {f.name for f in dataclasses.fields(TrainConfig)}
        bad = set(t) - known
        if bad:
            problems.append(f"train: unknown fields {sorted(bad)}")
        else:
            try:
                train_cfg = TrainConfig(**t)
            except ValueError as e:
                problems.append(f"train: {e}")
    if problems:
        raise ConfigError(f"{path}: " + "; ".join(problems))
    return model_cfg, train_cfg


def _configs(args):
    if getattr(args, "config", None):
        model_cfg, train_cfg = load_cli_config(args.config)
    else:
        model_cfg, train_cfg = ModelConfig(), TrainConfig()
    if getattr(args, "seed", None) is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    return model_cfg, train_cfg


def _load_data(args):
    t0 = time.perf_counter()
    ds = data_mod.load_dataset(args.bart_emb, args.roberta_emb, args.labels)
    return ds, time.perf_counter() - t0


def _fit_dims(model_cfg, ds):
    """Point the config at the dataset's dims and class count."""
    return dataclasses.replace(model_cfg, bart_dim=ds.bart.shape[1],
                               roberta_dim=ds.roberta.shape[1],
                               n_classes=len(ds.class_names))


def cmd_synth(args):
    spec = data_mod.SynthSpec(n_classes=args.n_classes, per_class=args.per_class,
                              bart_dim=args.bart_dim, roberta_dim=args.roberta_dim,
                              separation=args.separation, seed=args.seed)
    ds = data_mod.gen_synthetic(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    bart = os.path.join(args.out_dir, "bart.mreb")
    roberta = os.path.join(args.out_dir, "roberta.mreb")
    labels = os.path.join(args.out_dir, "labels.csv")
    data_mod.write_embeddings(bart, ds.bart)
    data_mod.write_embeddings(roberta, ds.roberta)
    data_mod.write_labels(labels, ds.ids, [ds.class_names[y] for y in ds.labels])
    print(f"wrote {bart} ({ds.n} x {ds.bart.shape[1]})")
    print(f"wrote {roberta} ({ds.n} x {ds.roberta.shape[1]})")
    print(f"wrote {labels} ({len(ds.class_names)} classes)")
    return 0


def cmd_train(args):
    model_cfg, train_cfg = _configs(args)
    ds, prep = _load_data(args)
    model_cfg = _fit_dims(model_cfg, ds)
    rng = training_mod.seeded_rng(train_cfg.seed)
    split = training_mod.stratified_split(ds.labels, rng=rng)
    model, history = training_mod.train(train_cfg, model_cfg, ds, split, log=print)
    model_mod.save_model(model, args.out)
    print(f"saved model to {args.out} ({model.num_params()} parameters)")
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            fh.write(training_mod.history_to_csv(history))
        print(f"wrote history to {args.history}")
    _, rep = training_mod.evaluate_model(model, ds, split.test)
    print("test-split metrics:")
    print(metrics_mod.format_report(rep))
    return 0


def cmd_evaluate(args):
    model = model_mod.load_model(args.model)
    ds, _ = _load_data(args)
    if ds.bart.shape[1] != model.config.bart_dim or \
            ds.roberta.shape[1] != model.config.roberta_dim:
        raise DimensionError(
            f"embedding dims ({ds.bart.shape[1]}, {ds.roberta.shape[1]}) do not match "
            f"the model ({model.config.bart_dim}, {model.config.roberta_dim})")
    _, rep = training_mod.evaluate_model(model, ds, np.arange(ds.n))
    print(metrics_mod.format_report(rep))
    return 0


def cmd_rounds(args):
    model_cfg, train_cfg = _configs(args)
    if args.rounds is not None:
        train_cfg = dataclasses.replace(train_cfg, rounds=args.rounds)
    ds, prep = _load_data(args)
    model_cfg = _fit_dims(model_cfg, ds)
    report = training_mod.run_rounds(train_cfg, model_cfg, ds, prep_seconds=prep,
                                     log=print)
    print(metrics_mod.format_report(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(metrics_mod.report_to_csv(report))
        print(f"wrote report to {args.out}")
    return 0


def cmd_ablate(args):
    model_cfg, train_cfg = _configs(args)
    train_cfg = dataclasses.replace(train_cfg, rounds=args.rounds)
    if args.max_epochs is not None:
        train_cfg = dataclasses.replace(
            train_cfg, max_epochs=args.max_epochs,
            patience=min(train_cfg.patience, args.max_epochs))
    grid = training_mod.ablation_grid() if args.grid == "full" \
        else training_mod.smoke_grid()
    ds, _ = _load_data(args)
    rows = training_mod.run_ablation(grid, ds, train_cfg, log=print)
    print(metrics_mod.ablation_to_text(rows))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(metrics_mod.ablation_to_csv(rows))
        print(f"wrote report to {args.out}")
    return 0


def cmd_analyze(args):
    docs = data_mod.read_jsonl_corpus(args.corpus)
    if not docs:
        raise data_mod.DataError(f"{args.corpus}: no documents")
    stats = corpus_mod.token_stats(docs)
    print("token statistics (stats-stage tokens per document):")
    print(corpus_mod.stats_to_csv(stats))
    per_class = corpus_mod.top_unigrams_by_class(docs, n=args.top_n)
    overall = corpus_mod.top_unigrams(docs, n=args.top_n)
    print("top unigrams:")
    print(corpus_mod.unigrams_to_csv(per_class, overall))
    by_class = {}
    for d in docs:
        by_class.setdefault(d.label, []).append(d)
    topic_terms = {}
    for lab in sorted(by_class):
        tm = corpus_mod.tfidf(by_class[lab])
        nm = corpus_mod.nmf_fit(tm.weights, k=min(args.topics, len(by_class[lab])),
                                iters=args.nmf_iters,
                                rng=training_mod.seeded_rng(args.seed))
        topic_terms[lab] = corpus_mod.top_topic_terms(nm, tm.vocabulary, n=args.top_n)
    print("top topic terms per class:")
    print(corpus_mod.topics_to_csv(topic_terms))
    if args.vectors:
        vecs = corpus_mod.load_word_vectors(args.vectors)
        print("unigram self-similarity vs overall (best-match cosine):")
        for lab, terms in per_class.items():
            try:
                sim = corpus_mod.term_set_similarity(terms, overall, vecs)
                print(f"{lab},{sim:.4f}")
            except ValueError as e:
                print(f"{lab},skipped ({e})")
    return 0


def cmd_shapes(args):
    model_cfg, _ = _configs(args)
    for name, shape in model_mod.shape_trace(model_cfg):
        print(f"{name} {shape}")
    return 0


def build_parser():
    p = _Parser(prog="misinfonet",
                description="dual-branch recurrent-convolutional ensemble classifier")
    sub = p.add_subparsers(dest="command")

    def data_flags(sp):
        sp.add_argument("--bart-emb", required=True)
        sp.add_argument("--roberta-emb", required=True)
        sp.add_argument("--labels", required=True)

    sp = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--n-classes", type=int, default=10)
    sp.add_argument("--per-class", type=int, default=200)
    sp.add_argument("--bart-dim", type=int, default=1024)
    sp.add_argument("--roberta-dim", type=int, default=768)
    sp.add_argument("--separation", type=float, default=4.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("train", help="train one model and save it")
    data_flags(sp)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.add_argument("--history")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    sp.add_argument("--model", required=True)
    data_flags(sp)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("rounds", help="repeat split/train/test and report mean ± std")
    data_flags(sp)
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_rounds)

    sp = sub.add_parser("ablate", help="run the configuration grid")
    data_flags(sp)
    sp.add_argument("--grid", choices=("full", "smoke"), default="smoke")
    sp.add_argument("--rounds", type=int, default=1)
    sp.add_argument("--max-epochs", type=int)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_ablate)

    sp = sub.add_parser("analyze", help="token stats, top unigrams, topic terms")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--vectors")
    sp.add_argument("--top-n", type=int, default=10)
    sp.add_argument("--topics", type=int, default=5)
    sp.add_argument("--nmf-iters", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("shapes", help="print the per-layer shape trace")
    sp.add_argument("--config")
    sp.set_defaults(fn=cmd_shapes)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_usage())
        return args.fn(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (data_mod.FormatError, data_mod.DataError, DimensionError, ConfigError,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
