"""Command line entry point: ``prpn <subcommand> ...``.

Data goes to standard output, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import evaluation, pcfg, trees
from .corpus import read_text
from .evaluation import EvalReport
from .model import ModelConfig
from .training import (TrainConfig, corpus_nll, load_checkpoint, parse_sentence, prepare_data,
                       save_checkpoint, seed_sweep, train)


class CliError(Exception):
    pass


def _bool(text):
    value = text.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _seeds(text):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_training_flags(p):
    p.add_argument("--config", required=True, help="JSON file mirroring TrainConfig fields")
    p.add_argument("--criterion", type=str.upper, choices=["LM", "UP"])
    p.add_argument("--seeds", type=_seeds)
    p.add_argument("--preset", type=str.upper, choices=["LM", "UP"])
    p.add_argument("--include-root", type=_bool)
    p.add_argument("--macro-f1", action="store_true", default=None)


def _load_training(args):
    """Read the config, apply flag overrides and build the data."""
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}")
    if not isinstance(data, dict):
        raise CliError("config must be a JSON object")
    split, vocab = prepare_data(data.get("corpus", {}))
    model = dict(data.get("model", {}))
    model["vocab_size"] = len(vocab)
    # "scale" in the model section (or --preset) sizes the layers from a preset
    scale = model.pop("scale", None)
    if args.preset or scale is not None:
        preset = args.preset or model.get("preset", "UP")
        keep = {k: model[k] for k in ("lookback", "memory_span", "tau") if k in model}
        model = ModelConfig.from_preset(preset, len(vocab), scale or 1, **keep).to_dict()
    data["model"] = model
    for flag, key in (("criterion", "criterion"), ("seeds", "seeds"),
                      ("include_root", "include_root"), ("macro_f1", "macro_f1")):
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return TrainConfig.from_dict(data), split, vocab


# -- subcommands -----------------------------------------------------------

def cmd_train(args):
    config, split, vocab = _load_training(args)
    outdir = args.out
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    records = []
    for seed in config.seeds:
        record, best = train(config, split, vocab, seed=seed, checkpoint_dir=outdir)
        if outdir:
            save_checkpoint(os.path.join(outdir, f"seed{seed}_best.npz"), best, vocab)
        records.append(record.to_dict())
    sys.stdout.write(json.dumps(records if len(records) > 1 else records[0], indent=2,
                                sort_keys=True) + "\n")


def cmd_parse(args):
    params, vocab = load_checkpoint(args.checkpoint)
    lines = []
    with open(args.text, encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            lines.append(trees.to_bracketed(parse_sentence(params, vocab, tokens))
                         if tokens else "")
    _emit("".join(s + "\n" for s in lines), args.out)


def cmd_eval_f1(args):
    pred = trees.read_tree_file(args.predicted, args.pred_format)
    gold = trees.read_tree_file(args.gold, args.gold_format)
    if args.wsj10:
        gold = evaluation.wsj10_filter(gold)
    include_root = True if args.include_root is None else args.include_root
    result, acc, depth = evaluation.evaluate_trees(pred, gold, include_root=include_root,
                                                   macro=bool(args.macro_f1))
    report = EvalReport(per_seed_f1=[result.f1], label_accuracy=acc, mean_depth=depth,
                        criterion=args.criterion)
    _write_report(report, args.out, args.format)


def cmd_eval_ppl(args):
    params, vocab = load_checkpoint(args.checkpoint)
    total, count = corpus_nll(params, vocab, [s for s in read_text(args.text)])
    result = {"nll": total, "tokens": count, "ppl": evaluation.perplexity(total, count)}
    _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)


def cmd_gen_pcfg(args):
    if args.grammar in pcfg.GRAMMARS:
        spec = pcfg.GRAMMARS[args.grammar](args.max_length)
    else:
        spec = pcfg.PcfgSpec.load(args.grammar)
    data = pcfg.generate_pcfg_corpus(spec, args.count, args.seed)
    if args.text:
        body = "".join(" ".join(words) + "\n" for words, _ in data)
    else:
        body = "".join(trees.to_ptb(tree) + "\n" for _, tree in data)
    _emit(body, args.out)


def cmd_sweep(args):
    config, split, vocab = _load_training(args)
    report, _ = seed_sweep(config, split, vocab)
    out = args.out or config.report
    if out:
        base = out[:-5] if out.endswith(".json") else out
        with open(base + ".json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        with open(base + ".tsv", "w", encoding="utf-8") as fh:
            fh.write(report.to_tsv())
    sys.stdout.write(report.to_json() + "\n")


def cmd_report(args):
    rows = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            rows.append(EvalReport.from_dict(json.load(fh)))
    if args.format == "json":
        body = json.dumps([r.to_dict() for r in rows], indent=2, sort_keys=True) + "\n"
    else:
        body = "\t".join(evaluation.TSV_COLUMNS) + "\n" + "".join(r.tsv_row() + "\n" for r in rows)
    _emit(body, args.out)


def _write_report(report, out, fmt):
    _emit(report.to_tsv() if fmt == "tsv" else report.to_json() + "\n", out)


# -- parser ----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="prpn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model per seed")
    _add_training_flags(p)
    p.add_argument("--out", help="directory for checkpoints")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="induce one tree per input line")
    p.add_argument("checkpoint")
    p.add_argument("text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval-f1", help="unlabeled F1 of predicted against gold trees")
    p.add_argument("predicted")
    p.add_argument("gold")
    p.add_argument("--pred-format", choices=["bracketed", "ptb"], default="bracketed")
    p.add_argument("--gold-format", choices=["bracketed", "ptb"], default="ptb")
    p.add_argument("--include-root", type=_bool)
    p.add_argument("--macro-f1", action="store_true", default=None)
    p.add_argument("--wsj10", action="store_true",
                   help="filter gold to 2..10 words after removing punctuation")
    p.add_argument("--criterion", type=str.upper, choices=["LM", "UP"])
    p.add_argument("--format", choices=["json", "tsv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_f1)

    p = sub.add_parser("eval-ppl", help="perplexity of a checkpoint on a text file")
    p.add_argument("checkpoint")
    p.add_argument("text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_ppl)

    p = sub.add_parser("gen-pcfg", help="sample a synthetic treebank")
    p.add_argument("--grammar", default="english",
                   help=f"one of {sorted(pcfg.GRAMMARS)} or a JSON grammar file")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-length", type=int, default=12)
    p.add_argument("--text", action="store_true", help="emit sentences instead of trees")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_pcfg)

    p = sub.add_parser("sweep", help="train every seed and aggregate a report")
    _add_training_flags(p)
    p.add_argument("--out", help="report path; writes <out>.json and <out>.tsv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render saved JSON reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--format", choices=["json", "tsv"], default="tsv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(message)s")
    try:
        args.func(args)
    except (CliError, OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"prpn: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
