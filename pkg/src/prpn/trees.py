"""Binary trees from syntactic distances, baseline trees, PTB reading and spans."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union


class TreeError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Leaf:
    index: int
    token: str


@dataclass(frozen=True)
class Internal:
    left: "BinaryTree"
    right: "BinaryTree"


BinaryTree = Union[Leaf, Internal]


@dataclass
class LabeledTree:
    """PTB-style tree.  A preterminal has ``word`` set and no children."""

    label: str
    children: list = field(default_factory=list)
    word: Optional[str] = None

    @property
    def is_preterminal(self):
        return self.word is not None

    def leaves(self):
        if self.is_preterminal:
            return [self.word]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def tags(self):
        if self.is_preterminal:
            return [self.label]
        out = []
        for child in self.children:
            out.extend(child.tags())
        return out

    def __str__(self):
        return to_ptb(self)


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    label: Optional[str] = None

    @property
    def width(self):
        return self.end - self.start


# -- induction and baselines -----------------------------------------------

def distances_to_tree(tokens, distances):
    """Greedy top-down tree: split at the largest gap distance, recurse.

    ``distances[k]`` scores the gap between ``tokens[k]`` and
    ``tokens[k + 1]``.  Ties go to the leftmost gap.
    """
    tokens = list(tokens)
    distances = [float(d) for d in distances]
    if not tokens:
        raise TreeError("cannot build a tree over zero tokens")
    if len(distances) != len(tokens) - 1:
        raise TreeError(f"{len(tokens)} tokens need {len(tokens) - 1} distances, got {len(distances)}")

    def build(lo, hi):
        if hi - lo == 1:
            return Leaf(lo, tokens[lo])
        gaps = distances[lo:hi - 1]
        split = lo + gaps.index(max(gaps)) + 1
        return Internal(build(lo, split), build(split, hi))

    return build(0, len(tokens))


def _check_tokens(tokens):
    tokens = list(tokens)
    if not tokens:
        raise TreeError("cannot build a tree over zero tokens")
    return tokens


def left_branching(tokens):
    tokens = _check_tokens(tokens)
    tree = Leaf(0, tokens[0])
    for i, tok in enumerate(tokens[1:], start=1):
        tree = Internal(tree, Leaf(i, tok))
    return tree


def right_branching(tokens):
    tokens = _check_tokens(tokens)
    n = len(tokens)
    tree = Leaf(n - 1, tokens[-1])
    for i in range(n - 2, -1, -1):
        tree = Internal(Leaf(i, tokens[i]), tree)
    return tree


def balanced(tokens):
    """Recursive split after ceil(n / 2) tokens."""
    tokens = _check_tokens(tokens)

    def build(lo, hi):
        if hi - lo == 1:
            return Leaf(lo, tokens[lo])
        mid = lo + math.ceil((hi - lo) / 2)
        return Internal(build(lo, mid), build(mid, hi))

    return build(0, len(tokens))


def random_tree(tokens, seed):
    """Uniformly chosen split point at every node, driven by ``seed``."""
    tokens = _check_tokens(tokens)
    if seed is None:
        raise TreeError("random_tree needs an explicit seed")
    rng = random.Random(seed)

    def build(lo, hi):
        if hi - lo == 1:
            return Leaf(lo, tokens[lo])
        mid = rng.randint(lo + 1, hi - 1)
        return Internal(build(lo, mid), build(mid, hi))

    return build(0, len(tokens))


# -- spans -----------------------------------------------------------------

def tree_spans(tree):
    """One span per internal node, as a list (duplicates kept)."""
    spans = []

    def walk(node, start):
        if isinstance(node, Leaf):
            return start + 1
        if isinstance(node, Internal):
            mid = walk(node.left, start)
            end = walk(node.right, mid)
            spans.append(Span(start, end))
            return end
        if node.is_preterminal:
            return start + 1
        end = start
        for child in node.children:
            end = walk(child, end)
        spans.append(Span(start, end, node.label))
        return end

    walk(tree, 0)
    return spans


def span_counter(tree, min_width=2, include_root=True):
    """Multiset of (start, end) pairs used for unlabeled scoring."""
    n = tree_length(tree)
    return Counter(
        (s.start, s.end) for s in tree_spans(tree)
        if s.width >= min_width and (include_root or (s.start, s.end) != (0, n)))


def tree_length(tree):
    if isinstance(tree, Leaf):
        return 1
    if isinstance(tree, Internal):
        return tree_length(tree.left) + tree_length(tree.right)
    return len(tree.leaves())


def tree_tokens(tree):
    if isinstance(tree, Leaf):
        return [tree.token]
    if isinstance(tree, Internal):
        return tree_tokens(tree.left) + tree_tokens(tree.right)
    return tree.leaves()


def tree_depth(tree):
    """Largest number of internal nodes on a root-to-leaf path."""
    if isinstance(tree, Leaf):
        return 0
    if isinstance(tree, Internal):
        return 1 + max(tree_depth(tree.left), tree_depth(tree.right))
    if tree.is_preterminal:
        return 0
    return 1 + max(tree_depth(c) for c in tree.children)


def is_valid_binary(tree, n=None):
    """Leaves cover 0..n-1 in order and every internal node has two children."""
    indices = []

    def walk(node):
        if isinstance(node, Leaf):
            indices.append(node.index)
            return True
        if not isinstance(node, Internal):
            return False
        return walk(node.left) and walk(node.right)

    if not walk(tree):
        return False
    n = len(indices) if n is None else n
    return indices == list(range(n))


# -- text formats ----------------------------------------------------------

def to_bracketed(tree):
    """Unlabeled nested parentheses over tokens, e.g. ``(a ((b c) d))``."""
    if isinstance(tree, Leaf):
        return tree.token
    if isinstance(tree, Internal):
        return f"({to_bracketed(tree.left)} {to_bracketed(tree.right)})"
    if tree.is_preterminal:
        return tree.word
    return "(" + " ".join(to_bracketed(c) for c in tree.children) + ")"


def to_ptb(tree):
    if tree.is_preterminal:
        return f"({tree.label} {tree.word})"
    return f"({tree.label} " + " ".join(to_ptb(c) for c in tree.children) + ")"


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def _parse_sexpr(text):
    """Nested lists of (atom, position) pairs; one top-level expression."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty input", 0)
    stack = []
    root = None
    for tok, pos in tokens:
        if tok == "(":
            stack.append((pos, []))
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", pos)
            start, items = stack.pop()
            node = (start, items)
            if stack:
                stack[-1][1].append(node)
            elif root is None:
                root = node
            else:
                raise ParseError("trailing content after tree", start)
        else:
            if not stack:
                raise ParseError(f"atom {tok!r} outside parentheses", pos)
            stack[-1][1].append((tok, pos))
    if stack:
        raise ParseError("unbalanced '('", stack[-1][0])
    if root is None:
        raise ParseError("no tree found", 0)
    return root


def normalize_label(label):
    """Strip functional tags (``NP-SBJ-1`` -> ``NP``, ``NP=2`` -> ``NP``).

    Labels starting with '-' (``-NONE-``, ``-LRB-``) are left alone.
    """
    if label.startswith("-"):
        return label
    for i, ch in enumerate(label):
        if ch in "-=" and i > 0:
            return label[:i]
    return label


def _is_atom(item):
    return isinstance(item[0], str)


def _build_labeled(node):
    start, items = node
    if not items:
        raise ParseError("empty brackets", start)
    if not _is_atom(items[0]):
        # unlabeled wrapper such as "( (S ...) )"
        label, rest = "", items
    else:
        label, rest = items[0][0], items[1:]
    if not rest:
        raise ParseError(f"node {label!r} has no children", start)
    if len(rest) == 1 and _is_atom(rest[0]):
        return LabeledTree(normalize_label(label), word=rest[0][0])
    children = []
    for item in rest:
        if _is_atom(item):
            raise ParseError(f"bare word {item[0]!r} mixed with subtrees", item[1])
        children.append(_build_labeled(item))
    return LabeledTree(normalize_label(label), children)


def _prune(tree):
    """Drop -NONE- subtrees and parents left without children."""
    if tree.is_preterminal:
        return None if tree.label == "-NONE-" else tree
    kids = [k for k in (_prune(c) for c in tree.children) if k is not None]
    if not kids:
        return None
    return LabeledTree(tree.label, kids)


def read_ptb(text):
    """Parse one bracketed PTB tree, normalising labels and empty elements.

    An unlabeled outer wrapper around a single tree is removed.
    """
    tree = _build_labeled(_parse_sexpr(text))
    pruned = _prune(tree)
    if pruned is None:
        raise ParseError("tree has no overt words", 0)
    while pruned.label == "" and not pruned.is_preterminal and len(pruned.children) == 1:
        pruned = pruned.children[0]
    return pruned


def read_bracketed(text):
    """Parse an unlabeled tree such as ``(a ((b c) d))``.

    Nodes with two children become :class:`Internal`; any other arity is
    returned as an unlabeled :class:`LabeledTree` whose words are
    preterminals tagged ``""``.
    """
    if "(" not in text and ")" not in text and len(text.split()) == 1:
        return Leaf(0, text.strip())
    node = _parse_sexpr(text)
    counter = [0]

    def walk(item):
        if _is_atom(item):
            leaf = Leaf(counter[0], item[0])
            counter[0] += 1
            return leaf
        start, items = item
        if not items:
            raise ParseError("empty brackets", start)
        return [walk(x) for x in items]

    raw = walk(node)

    def to_tree(x):
        if isinstance(x, Leaf):
            return x
        if len(x) == 1:
            return to_tree(x[0])
        kids = [to_tree(k) for k in x]
        if len(kids) == 2:
            return Internal(*kids)
        return LabeledTree("", [_as_labeled(k) for k in kids])

    return to_tree(raw)


def _as_labeled(tree):
    if isinstance(tree, LabeledTree):
        return tree
    if isinstance(tree, Leaf):
        return LabeledTree("", word=tree.token)
    return LabeledTree("", [_as_labeled(tree.left), _as_labeled(tree.right)])


def read_tree_file(path, fmt="ptb"):
    """One tree per non-blank line; ``fmt`` is ``ptb`` or ``bracketed``."""
    reader = {"ptb": read_ptb, "bracketed": read_bracketed}[fmt]
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                trees.append(reader(line))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}", exc.position) from None
    return trees
