"""Unlabeled bracketing F1, per-label recall, depth, WSJ10 filtering,
perplexity and cross-seed aggregation."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .trees import LabeledTree, span_counter, tree_depth, tree_length, tree_spans

PUNCT_TAGS = frozenset({"#", "$", "''", ",", "-LRB-", "-RRB-", ".", ":", "``"})
REPORT_LABELS = ("ADJP", "NP", "PP", "INTJ")


@dataclass(frozen=True)
class F1Result:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int

    @classmethod
    def from_counts(cls, matched, predicted, gold):
        p = 100.0 * matched / predicted if predicted else 0.0
        r = 100.0 * matched / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, matched, predicted, gold)


def _counts(predicted, gold, include_root):
    n_pred, n_gold = tree_length(predicted), tree_length(gold)
    if n_pred != n_gold:
        raise ValueError(f"yield length mismatch: predicted {n_pred}, gold {n_gold}")
    pred = span_counter(predicted, include_root=include_root)
    ref = span_counter(gold, include_root=include_root)
    matched = sum((pred & ref).values())
    return matched, sum(pred.values()), sum(ref.values())


def unlabeled_f1(predicted, gold, include_root=True):
    """Span-multiset F1 over constituents of width >= 2."""
    return F1Result.from_counts(*_counts(predicted, gold, include_root))


def corpus_f1(predicted, gold, include_root=True, macro=False):
    """Corpus F1; pooled counts by default, mean of sentence F1 with ``macro``.

    In macro mode, sentences where both trees have no scorable span are
    skipped; the returned counts are still the pooled totals.
    """
    predicted, gold = list(predicted), list(gold)
    if len(predicted) != len(gold):
        raise ValueError(f"{len(predicted)} predicted trees vs {len(gold)} gold trees")
    if not predicted:
        raise ValueError("empty corpus")
    totals = np.zeros(3, dtype=np.int64)
    per_sentence = []
    for p, g in zip(predicted, gold):
        counts = _counts(p, g, include_root)
        totals += counts
        if counts[1] or counts[2]:
            per_sentence.append(F1Result.from_counts(*counts))
    pooled = F1Result.from_counts(*(int(x) for x in totals))
    if not macro:
        return pooled
    if not per_sentence:
        return pooled
    k = len(per_sentence)
    return F1Result(sum(r.precision for r in per_sentence) / k,
                    sum(r.recall for r in per_sentence) / k,
                    sum(r.f1 for r in per_sentence) / k,
                    pooled.matched, pooled.predicted, pooled.gold)


def label_accuracy(predicted, gold, label):
    """Fraction of gold ``label`` constituents (width >= 2) that the
    predicted trees contain.  ``None`` when the label never occurs."""
    predicted, gold = list(predicted), list(gold)
    if len(predicted) != len(gold):
        raise ValueError(f"{len(predicted)} predicted trees vs {len(gold)} gold trees")
    found = total = 0
    for p, g in zip(predicted, gold):
        pred = span_counter(p, include_root=True)
        for span in tree_spans(g):
            if span.label == label and span.width >= 2:
                total += 1
                found += (span.start, span.end) in pred
    return found / total if total else None


def mean_depth(trees):
    trees = list(trees)
    if not trees:
        raise ValueError("mean_depth of no trees")
    return sum(tree_depth(t) for t in trees) / len(trees)


def perplexity(total_nll, tokens):
    if tokens < 1:
        raise ValueError("perplexity needs at least one token")
    return math.exp(total_nll / tokens)


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    max: float
    median: float
    min: float


def aggregate(values):
    """Mean, population standard deviation, max, median (and min)."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise ValueError("aggregate of no values")
    return Aggregate(float(v.mean()), float(v.std()), float(v.max()),
                     float(np.median(v)), float(v.min()))


# -- WSJ10 -----------------------------------------------------------------

def strip_punctuation(tree, punct=PUNCT_TAGS):
    """Copy of ``tree`` without punctuation preterminals; ``None`` if empty."""
    if tree.is_preterminal:
        return None if tree.label in punct else LabeledTree(tree.label, word=tree.word)
    kids = [k for k in (strip_punctuation(c, punct) for c in tree.children) if k is not None]
    if not kids:
        return None
    return LabeledTree(tree.label, kids)


def wsj10_filter(trees, max_len=10, min_len=2):
    """Punctuation-free copies of the gold trees with min_len..max_len words."""
    out = []
    for tree in trees:
        if not isinstance(tree, LabeledTree) or any(t in ("", None) for t in tree.tags()):
            raise ValueError("WSJ10 filtering needs POS tags on every word")
        stripped = strip_punctuation(tree)
        if stripped is not None and min_len <= len(stripped.leaves()) <= max_len:
            out.append(stripped)
    return out


# -- reports ---------------------------------------------------------------

TSV_COLUMNS = (
    "criterion", "preset", "seeds", "f1_mean", "f1_std", "f1_max", "f1_median",
    "ppl_median", "depth", "acc_ADJP", "acc_NP", "acc_PP", "acc_INTJ", "overlap",
)


def _fmt(x):
    if x is None:
        return "n/a"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(round(x, 10))
    return str(x)


@dataclass
class EvalReport:
    per_seed_f1: list
    per_seed_ppl: list = field(default_factory=list)
    label_accuracy: dict = field(default_factory=dict)
    mean_depth: float = None
    criterion: str = None
    seeds: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    overlap: bool = False

    @property
    def f1(self):
        return aggregate(self.per_seed_f1)

    @property
    def ppl_median(self):
        return aggregate(self.per_seed_ppl).median if self.per_seed_ppl else None

    def to_dict(self):
        f1 = self.f1
        data = asdict(self)
        data["f1"] = asdict(f1)
        data["ppl_median"] = self.ppl_median
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def tsv_row(self):
        f1 = self.f1
        acc = self.label_accuracy
        values = [
            self.criterion, self.config.get("preset"), ",".join(str(s) for s in self.seeds),
            f1.mean, f1.std, f1.max, f1.median, self.ppl_median, self.mean_depth,
            *(acc.get(lbl) for lbl in REPORT_LABELS), bool(self.overlap),
        ]
        return "\t".join(_fmt(v) for v in values)

    def to_tsv(self):
        return "\t".join(TSV_COLUMNS) + "\n" + self.tsv_row() + "\n"

    @classmethod
    def from_dict(cls, data):
        keys = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in keys})


def evaluate_trees(predicted, gold, include_root=True, macro=False, labels=REPORT_LABELS):
    """Single-run F1, per-label accuracy and predicted-tree depth."""
    result = corpus_f1(predicted, gold, include_root=include_root, macro=macro)
    acc = {lbl: label_accuracy(predicted, gold, lbl) for lbl in labels}
    return result, acc, mean_depth(predicted)


def label_counts(trees):
    """Number of gold constituents (width >= 2) per label."""
    c = Counter()
    for t in trees:
        c.update(s.label for s in tree_spans(t) if s.width >= 2)
    return c
