"""Training loop, checkpoint selection by LM or parsing criterion, seed sweeps."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .corpus import CorpusSplit, Subset, Vocabulary, load_split, split_items
from .evaluation import (REPORT_LABELS, EvalReport, aggregate, corpus_f1, label_accuracy,
                         mean_depth, perplexity)
from .model import ModelConfig, ModelParams, lm_negative_log_likelihood, sentence_distances
from .pcfg import GRAMMARS, PcfgSpec, generate_pcfg_corpus
from .trees import distances_to_tree

log = logging.getLogger(__name__)

CRITERIA = ("LM", "UP")


@dataclass
class TrainConfig:
    model: ModelConfig
    optimizer: str = "adam"
    lr: float = 1e-3
    clip: float = 5.0
    epochs: int = 10
    criterion: str = "LM"
    patience: int = 10
    seeds: list = field(default_factory=lambda: [0])
    init_scale: float = 0.05
    include_root: bool = True
    macro_f1: bool = False
    stop_at_ppl: float = None
    corpus: dict = field(default_factory=dict)
    report: str = None

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelConfig.from_dict(self.model)
        self.criterion = self.criterion.upper()
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["model"] = self.model.to_dict()
        return data

    @classmethod
    def from_dict(cls, data):
        keys = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - keys
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunRecord:
    seed: int
    criterion: str
    initial_ppl: float = None
    train_ppl: list = field(default_factory=list)
    valid_ppl: list = field(default_factory=list)
    valid_f1: list = field(default_factory=list)
    best_epoch: dict = field(default_factory=dict)
    test: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def to_dict(self):
        return dataclasses.asdict(self)


class TrainingError(RuntimeError):
    pass


class SweepError(RuntimeError):
    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


class Adam:
    """Adam with global gradient-norm clipping, on a dict of leaf tensors."""

    def __init__(self, params, lr=1e-3, clip=5.0, betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.lr, self.clip, self.betas, self.eps = lr, clip, betas, eps
        self.m = {k: np.zeros_like(t.value) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.value) for k, t in params.items()}
        self.steps = 0

    def step(self, grads):
        grads = clip_gradients(grads, self.clip)
        self.steps += 1
        b1, b2 = self.betas
        c1, c2 = 1 - b1 ** self.steps, 1 - b2 ** self.steps
        for k, t in self.params.items():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            t.value -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class SGD:
    def __init__(self, params, lr=0.1, clip=5.0):
        self.params, self.lr, self.clip = params, lr, clip

    def step(self, grads):
        grads = clip_gradients(grads, self.clip)
        for k, t in self.params.items():
            t.value -= self.lr * grads[k]


def clip_gradients(grads, max_norm):
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm and total > max_norm:
        scale = max_norm / total
        return {k: g * scale for k, g in grads.items()}
    return grads


def make_optimizer(config, params):
    if config.optimizer == "adam":
        return Adam(params, config.lr, config.clip)
    return SGD(params, config.lr, config.clip)


# -- evaluation helpers ----------------------------------------------------

def corpus_nll(params, vocab, sentences):
    total, count = 0.0, 0
    for tokens in sentences:
        out = lm_negative_log_likelihood(vocab.numericalize(tokens), params)
        total += float(out.nll.value)
        count += out.count
    return total, count


def corpus_perplexity(params, vocab, sentences):
    return perplexity(*corpus_nll(params, vocab, sentences))


def parse_sentence(params, vocab, tokens):
    """Binary tree over ``tokens`` from the model's gap distances."""
    dist = sentence_distances(vocab.numericalize(tokens), params)
    return distances_to_tree(tokens, dist[: len(tokens) - 1])


def parse_corpus(params, vocab, sentences):
    return [parse_sentence(params, vocab, s) for s in sentences]


def _scorable(subset):
    """Sentences of subset with >= 1 token, paired with their gold trees."""
    return [(s, t) for s, t in zip(subset.sentences, subset.trees) if s]


def parsing_f1(params, vocab, subset, include_root=True, macro=False):
    pairs = _scorable(subset)
    preds = parse_corpus(params, vocab, [s for s, _ in pairs])
    return corpus_f1(preds, [t for _, t in pairs], include_root=include_root, macro=macro).f1


def select_checkpoint(record, criterion):
    """Epoch index picked by ``criterion``: min valid PPL (LM) or max valid F1
    (UP); the earliest epoch wins ties."""
    criterion = criterion.upper()
    if criterion == "LM":
        curve = record.valid_ppl if isinstance(record, RunRecord) else record["valid_ppl"]
        pick = np.argmin
    elif criterion == "UP":
        curve = record.valid_f1 if isinstance(record, RunRecord) else record["valid_f1"]
        pick = np.argmax
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    if not curve:
        raise ValueError(f"no {criterion} validation curve")
    return int(pick(np.asarray(curve, dtype=np.float64)))


# -- training --------------------------------------------------------------

def train(config, split, vocab, seed=None, checkpoint_dir=None):
    """Train one model; returns ``(RunRecord, best ModelParams)``.

    One update per sentence in a seeded shuffled order.  After each epoch the
    validation perplexity (and F1 when gold trees exist) are recorded, and a
    checkpoint is kept whenever the active criterion improves.
    """
    seed = config.seeds[0] if seed is None else seed
    valid = split.valid or split.train
    if config.criterion == "UP" and (valid.trees is None):
        raise TrainingError("the UP criterion needs validation gold trees")
    started = time.perf_counter()
    params = ModelParams.init(config.model, seed=seed, scale=config.init_scale)
    optimizer = make_optimizer(config, params)
    rng = np.random.default_rng(seed)
    record = RunRecord(seed=seed, criterion=config.criterion)
    record.initial_ppl = corpus_perplexity(params, vocab, valid.sentences)
    train_ids = [vocab.numericalize(s) for s in split.train.sentences]
    train_ids = [ids for ids in train_ids if ids.size >= 2]
    best, best_value, stale = params.copy(), None, 0
    for epoch in range(config.epochs):
        total, count = 0.0, 0
        for k in rng.permutation(len(train_ids)):
            out = lm_negative_log_likelihood(train_ids[k], params)
            if not np.isfinite(out.nll.value):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            loss = out.nll * (1.0 / out.count)
            grads = ad.backward(loss)
            optimizer.step({name: grads[t] for name, t in params.items()})
            total += float(out.nll.value)
            count += out.count
        record.train_ppl.append(perplexity(total, count))
        record.valid_ppl.append(corpus_perplexity(params, vocab, valid.sentences))
        if valid.trees is not None:
            record.valid_f1.append(parsing_f1(params, vocab, valid, config.include_root,
                                              config.macro_f1))
        value = record.valid_ppl[-1] if config.criterion == "LM" else -record.valid_f1[-1]
        if best_value is None or value < best_value:
            best_value, stale = value, 0
            best = params.copy()
            if checkpoint_dir:
                save_checkpoint(os.path.join(checkpoint_dir, f"seed{seed}_best.npz"), best, vocab)
        else:
            stale += 1
        log.info("seed %s epoch %d train ppl %.3f valid ppl %.3f%s", seed, epoch + 1,
                 record.train_ppl[-1], record.valid_ppl[-1],
                 f" valid F1 {record.valid_f1[-1]:.2f}" if record.valid_f1 else "")
        if stale >= config.patience:
            break
        if config.stop_at_ppl is not None and record.valid_ppl[-1] <= config.stop_at_ppl:
            break
    record.best_epoch["LM"] = select_checkpoint(record, "LM")
    if record.valid_f1:
        record.best_epoch["UP"] = select_checkpoint(record, "UP")
    record.test = held_out_metrics(best, vocab, split.test or valid, config)
    record.wall_clock = time.perf_counter() - started
    return record, best


def held_out_metrics(params, vocab, subset, config):
    metrics = {"ppl": corpus_perplexity(params, vocab, subset.sentences)}
    if subset.trees is not None:
        pairs = _scorable(subset)
        preds = parse_corpus(params, vocab, [s for s, _ in pairs])
        golds = [t for _, t in pairs]
        metrics["f1"] = corpus_f1(preds, golds, config.include_root, config.macro_f1).f1
        metrics["depth"] = mean_depth(preds)
        metrics["label_accuracy"] = {lbl: label_accuracy(preds, golds, lbl)
                                     for lbl in REPORT_LABELS}
    return metrics


def seed_sweep(config, split, vocab, seeds=None, checkpoint_dir=None):
    """Independent runs per seed, aggregated into an :class:`EvalReport`.

    Per-label accuracy is taken from the run with the best test F1.
    """
    seeds = list(config.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("seed_sweep needs at least one seed")
    records = []
    for seed in sorted(seeds):
        try:
            record, _ = train(config, split, vocab, seed=seed, checkpoint_dir=checkpoint_dir)
        except Exception as exc:
            raise SweepError(f"seed {seed} failed: {exc}", records) from exc
        records.append(record)
    report = EvalReport(
        per_seed_f1=[r.test.get("f1", 0.0) for r in records],
        per_seed_ppl=[r.test["ppl"] for r in records],
        criterion=config.criterion,
        seeds=[r.seed for r in records],
        config=config.model.to_dict(),
        overlap=bool(split.metadata.get("overlap", False)),
    )
    if all("f1" in r.test for r in records):
        best = max(records, key=lambda r: r.test["f1"])
        report.label_accuracy = dict(best.test["label_accuracy"])
        report.mean_depth = aggregate([r.test["depth"] for r in records]).mean
    return report, records


# -- checkpoints and data preparation --------------------------------------

def save_checkpoint(path, params, vocab):
    ad.save_params(path, params, header={"model_config": params.config.to_dict(),
                                         "vocab": vocab.itos})


def load_checkpoint(path):
    arrays, header = ad.load_params(path)
    params = ModelParams(ModelConfig.from_dict(header["model_config"]), arrays)
    return params, Vocabulary(header["vocab"])


def prepare_data(corpus):
    """Build ``(split, vocab)`` from the ``corpus`` section of a config.

    Either ``{"pcfg": {"grammar": name or spec dict, "count", "seed"},
    "fractions": [...]}`` for synthetic data or ``{"train": path, ...,
    "treebank": bool, "no_split": bool}`` for files; ``vocab_cap`` applies to
    both.
    """
    corpus = dict(corpus)
    cap = corpus.pop("vocab_cap", 10_000)
    if "pcfg" in corpus:
        opts = corpus["pcfg"]
        grammar = opts.get("grammar", "english")
        spec = (PcfgSpec.from_dict(grammar) if isinstance(grammar, dict)
                else GRAMMARS[grammar](opts.get("max_length", 12)))
        data = generate_pcfg_corpus(spec, opts.get("count", 2000), opts.get("seed", 0))
        if corpus.get("no_split"):
            full = Subset([w for w, _ in data], [t for _, t in data])
            split = CorpusSplit({"train": full, "valid": full, "test": full}, {"overlap": True})
        else:
            parts = split_items(data, corpus.get("fractions", (0.8, 0.1, 0.1)))
            split = CorpusSplit({k: Subset([w for w, _ in v], [t for _, t in v])
                                 for k, v in parts.items()}, {"overlap": False})
    else:
        files = {k: corpus[k] for k in ("train", "valid", "test") if k in corpus}
        split = load_split(files, treebank=corpus.get("treebank", False),
                           no_split=corpus.get("no_split", False))
    vocab = Vocabulary.build(split.train.sentences, cap)
    return split, vocab
