"""Weighted context-free grammars and a seeded treebank sampler."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .trees import LabeledTree


class GrammarError(ValueError):
    pass


class _TooLong(Exception):
    pass


@dataclass
class PcfgSpec:
    """``productions`` maps a nonterminal to ``[(rhs tuple, weight), ...]``.

    Symbols without productions are terminals.  A terminal that appears next
    to other symbols gets a preterminal tagged ``tags[word]`` (default: the
    word upper-cased); a rule ``A -> word`` makes ``A`` itself the tag.
    """

    productions: dict
    start: str = "S"
    max_length: int = 12
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.start not in self.productions:
            raise GrammarError(f"start symbol {self.start!r} has no productions")
        for lhs, rules in self.productions.items():
            if not rules:
                raise GrammarError(f"{lhs!r} has no productions")
            for rhs, weight in rules:
                if not weight > 0:
                    raise GrammarError(f"non-positive weight in {lhs} -> {rhs}")
                if not rhs:
                    raise GrammarError(f"empty right-hand side for {lhs!r}")

    @property
    def nonterminals(self):
        return set(self.productions)

    @property
    def terminals(self):
        return {s for rules in self.productions.values() for rhs, _ in rules
                for s in rhs if s not in self.productions}

    def to_dict(self):
        return {"start": self.start, "max_length": self.max_length, "tags": self.tags,
                "productions": {k: [[list(r), w] for r, w in v]
                                for k, v in self.productions.items()}}

    @classmethod
    def from_dict(cls, data):
        prods = {k: [(tuple(r), float(w)) for r, w in v] for k, v in data["productions"].items()}
        return cls(prods, data.get("start", "S"), data.get("max_length", 12), data.get("tags", {}))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _sample(spec, rng, symbol, budget, depth=0):
    if depth > 200:
        raise _TooLong
    rules = spec.productions[symbol]
    rhs = rng.choices([r for r, _ in rules], weights=[w for _, w in rules])[0]
    if len(rhs) == 1 and rhs[0] not in spec.productions:
        budget[0] += 1
        if budget[0] > spec.max_length:
            raise _TooLong
        return LabeledTree(symbol, word=rhs[0])
    children = []
    for sym in rhs:
        if sym in spec.productions:
            children.append(_sample(spec, rng, sym, budget, depth + 1))
        else:
            budget[0] += 1
            if budget[0] > spec.max_length:
                raise _TooLong
            children.append(LabeledTree(spec.tags.get(sym, sym.upper()), word=sym))
    return LabeledTree(symbol, children)


def generate_pcfg_corpus(spec, count, seed, window=1000, min_accept=0.01):
    """Sample ``count`` (tokens, gold tree) pairs.

    Derivations longer than ``spec.max_length`` words are rejected; if fewer
    than ``min_accept`` of the last ``window`` attempts succeed, the grammar
    is declared unusable.
    """
    rng = random.Random(seed)
    out = []
    attempts = accepted = 0
    while len(out) < count:
        attempts += 1
        try:
            tree = _sample(spec, rng, spec.start, [0])
        except _TooLong:
            tree = None
        except RecursionError:
            tree = None
        if tree is not None:
            accepted += 1
            out.append((tree.leaves(), tree))
        if attempts >= window:
            if accepted / attempts < min_accept:
                raise GrammarError(f"only {accepted} of {attempts} derivations within length")
            attempts = accepted = 0
    return out


def _lexicon(tag, words):
    return [((w,), 1.0) for w in words]


def english_like_grammar(max_length=12):
    """Small NP/VP grammar with PP and clausal complements.

    Subject NPs give left-side structure while verb phrases nest to the
    right, so the gold trees lean right-branching overall.
    """
    prods = {
        "S": [(("NP", "VP"), 1.0)],
        "NP": [(("Det", "N"), 0.45), (("Det", "Adj", "N"), 0.2), (("Det", "N", "PP"), 0.12),
               (("Pron",), 0.12), (("Name",), 0.11)],
        "VP": [(("V", "NP"), 0.4), (("V",), 0.12), (("V", "PP"), 0.15),
               (("V", "NP", "PP"), 0.18), (("V", "SBAR"), 0.15)],
        "SBAR": [(("Comp", "S"), 1.0)],
        "PP": [(("P", "NP"), 1.0)],
        "Det": _lexicon("Det", ["the", "a", "every", "some"]),
        "N": _lexicon("N", ["dog", "cat", "man", "woman", "park", "telescope", "house",
                            "city", "idea", "book", "child", "river"]),
        "Adj": _lexicon("Adj", ["big", "small", "red", "old", "happy", "quiet"]),
        "V": _lexicon("V", ["saw", "liked", "found", "wanted", "said", "knew", "visited",
                            "heard"]),
        "P": _lexicon("P", ["in", "on", "with", "near", "under"]),
        "Pron": _lexicon("Pron", ["she", "he", "they"]),
        "Name": _lexicon("Name", ["john", "mary", "alice"]),
        "Comp": _lexicon("Comp", ["that"]),
    }
    return PcfgSpec(prods, "S", max_length)


def right_branching_grammar(max_length=12, word="a"):
    """S -> a S | a, each with weight 1/2."""
    return PcfgSpec({"S": [((word, "S"), 0.5), ((word,), 0.5)]}, "S", max_length)


GRAMMARS = {"english": english_like_grammar, "right-branching": right_branching_grammar}
