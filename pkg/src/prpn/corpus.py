"""Vocabulary, numericalisation and train/valid/test splits."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .trees import read_tree_file

UNK, EOS = "<unk>", "<eos>"
UNK_ID, EOS_ID = 0, 1


class Vocabulary:
    def __init__(self, tokens, counts=None):
        tokens = list(tokens)
        if tokens[:2] != [UNK, EOS]:
            raise ValueError("vocabulary must start with <unk>, <eos>")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate vocabulary entries")
        self.itos = tokens
        self.stoi = {t: i for i, t in enumerate(tokens)}
        self.counts = Counter(counts or {})

    @classmethod
    def build(cls, stream, cap):
        """Keep the ``cap - 2`` most frequent tokens, ties broken lexically."""
        if cap < 3:
            raise ValueError("vocabulary cap must be >= 3")
        counts = Counter()
        for item in stream:
            counts.update([item] if isinstance(item, str) else item)
        counts.pop(UNK, None)
        counts.pop(EOS, None)
        if not counts:
            raise ValueError("cannot build a vocabulary from an empty stream")
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        kept = [tok for tok, _ in ranked[: cap - 2]]
        return cls([UNK, EOS] + kept, counts)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def id(self, token):
        return self.stoi.get(token, UNK_ID)

    def numericalize(self, tokens):
        """Ids of ``tokens`` with <eos> appended; unknown words map to <unk>."""
        return np.array([self.id(t) for t in tokens] + [EOS_ID], dtype=np.int64)

    def denumericalize(self, ids, strip_eos=True):
        out = [self.itos[int(i)] for i in ids]
        if strip_eos and out and out[-1] == EOS:
            out = out[:-1]
        return out

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.itos) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def numericalize(tokens, vocab):
    return vocab.numericalize(tokens)


@dataclass
class Subset:
    sentences: list
    trees: list = None

    def __post_init__(self):
        if self.trees is not None and len(self.trees) != len(self.sentences):
            raise ValueError("sentences and trees are not aligned")

    def __len__(self):
        return len(self.sentences)


@dataclass
class CorpusSplit:
    """Named subsets of token lists (with aligned gold trees when known)."""

    subsets: dict
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.subsets[name]

    @property
    def train(self):
        return self.subsets["train"]

    @property
    def valid(self):
        return self.subsets.get("valid")

    @property
    def test(self):
        return self.subsets.get("test")


def read_text(path):
    """Whitespace-tokenised sentences, one per non-blank line."""
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh if line.strip()]


def _load_subset(paths, treebank):
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    sentences, trees = [], [] if treebank else None
    for path in paths:
        if treebank:
            for tree in read_tree_file(path, "ptb"):
                trees.append(tree)
                sentences.append(tree.leaves())
        else:
            sentences.extend(read_text(path))
    return Subset(sentences, trees)


def load_split(files, treebank=False, no_split=False):
    """Load subsets from ``{name: path or list of paths}``.

    With ``no_split``, every file is pooled into one corpus that serves as
    train, valid and test; the metadata records ``overlap=True``.
    """
    if no_split:
        pooled = [p for v in files.values() for p in ([v] if isinstance(v, str) else v)]
        full = _load_subset(pooled, treebank)
        subsets = {name: full for name in ("train", "valid", "test")}
        return CorpusSplit(subsets, {"overlap": True, "treebank": treebank})
    subsets = {name: _load_subset(p, treebank) for name, p in files.items()}
    return CorpusSplit(subsets, {"overlap": False, "treebank": treebank})


def split_items(items, fractions=(0.8, 0.1, 0.1), names=("train", "valid", "test")):
    """Contiguous split of a list into named parts by fraction."""
    n = len(items)
    bounds = np.cumsum([0] + [int(round(f * n)) for f in fractions])
    bounds[-1] = n
    return {name: items[bounds[i]:bounds[i + 1]] for i, name in enumerate(names)}
