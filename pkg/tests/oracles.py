"""Independent reference implementations used to check the library."""

import itertools

from prpn.trees import Internal, LabeledTree, Leaf


def as_nested(tree):
    """Nested tuples of leaf positions, built by a separate traversal."""
    pos = itertools.count()

    def walk(node):
        if isinstance(node, Leaf):
            return next(pos)
        if isinstance(node, Internal):
            return (walk(node.left), walk(node.right))
        if node.word is not None:
            return next(pos)
        return tuple(walk(c) for c in node.children)

    return walk(tree)


def reference_greedy(n, gaps):
    """Recursive max split with an explicit scan for the leftmost maximum."""

    def build(lo, hi):
        if hi - lo == 1:
            return lo
        best = lo
        for k in range(lo, hi - 1):
            if gaps[k] > gaps[best]:
                best = k
        return (build(lo, best + 1), build(best + 1, hi))

    return build(0, n)


def cartesian_tree(n, gaps):
    """Same tree through a stack-built max Cartesian tree over the gaps."""
    parent_left, parent_right = {}, {}
    stack = []
    for k, g in enumerate(gaps):
        last = None
        while stack and gaps[stack[-1]] < g:
            last = stack.pop()
        if last is not None:
            parent_left[k] = last
        if stack:
            parent_right[stack[-1]] = k
        stack.append(k)
    if not gaps:
        return 0

    def build(node, lo, hi):
        # node is a gap index splitting [lo, hi) at node + 1
        left = parent_left.get(node)
        right = parent_right.get(node)
        lsub = build(left, lo, node + 1) if left is not None else lo
        rsub = build(right, node + 1, hi) if right is not None else node + 1
        return (lsub, rsub)

    return build(stack[0], 0, n)


def brute_spans(tree):
    """All (start, end) spans of width >= 2 of every internal node, with
    multiplicity, via leaf-position sets."""
    spans = []

    def walk(node):
        if isinstance(node, int):
            return [node]
        covered = []
        for child in node:
            covered.extend(walk(child))
        if len(covered) >= 2:
            spans.append((min(covered), max(covered) + 1))
        return covered

    walk(as_nested(tree))
    return spans


def brute_corpus_f1(predicted, gold):
    matched = n_pred = n_gold = 0
    for p, g in zip(predicted, gold):
        ps, gs = brute_spans(p), brute_spans(g)
        n_pred += len(ps)
        n_gold += len(gs)
        remaining = list(gs)
        for s in ps:
            if s in remaining:
                remaining.remove(s)
                matched += 1
    prec = 100.0 * matched / n_pred if n_pred else 0.0
    rec = 100.0 * matched / n_gold if n_gold else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return matched, n_pred, n_gold, f1


def random_nary(rng, words, max_children=4):
    """Random n-ary labeled tree over ``words`` (preterminals tagged X)."""

    def build(lo, hi):
        if hi - lo == 1:
            return LabeledTree("X", word=words[lo])
        k = rng.randint(2, min(max_children, hi - lo))
        cuts = sorted(rng.sample(range(lo + 1, hi), k - 1))
        bounds = [lo] + cuts + [hi]
        return LabeledTree("C", [build(a, b) for a, b in zip(bounds, bounds[1:])])

    return build(0, len(words))
