import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import as_nested, cartesian_tree, reference_greedy
from prpn import trees as T
from prpn.trees import LabeledTree, Leaf


def words(n):
    return [f"w{i}" for i in range(n)]


# -- distances_to_tree -----------------------------------------------------

def test_single_token():
    assert T.distances_to_tree(["a"], []) == Leaf(0, "a")


def test_two_tokens():
    assert as_nested(T.distances_to_tree(["a", "b"], [0.3])) == (0, 1)


def test_largest_gap_first():
    tree = T.distances_to_tree(["a", "b", "c", "d"], [0.1, 0.9, 0.2])
    assert as_nested(tree) == ((0, 1), (2, 3))
    assert T.to_bracketed(tree) == "((a b) (c d))"


def test_leftmost_tie():
    assert as_nested(T.distances_to_tree(["a", "b", "c"], [0.5, 0.5])) == (0, (1, 2))


def test_distance_count_mismatch():
    with pytest.raises(T.TreeError):
        T.distances_to_tree(["a", "b", "c"], [0.1])
    with pytest.raises(T.TreeError):
        T.distances_to_tree([], [])


@pytest.mark.parametrize("n", range(1, 7))
def test_exhaustive_against_references(n):
    for gaps in itertools.product([1, 2, 3], repeat=n - 1):
        tree = T.distances_to_tree(words(n), list(gaps))
        assert as_nested(tree) == reference_greedy(n, list(gaps))
        assert as_nested(tree) == cartesian_tree(n, list(gaps))


distance_vectors = st.lists(st.floats(0.0, 10.0, allow_nan=False), max_size=20)


@given(distance_vectors)
def test_induced_trees_are_valid(gaps):
    n = len(gaps) + 1
    tree = T.distances_to_tree(words(n), gaps)
    assert T.is_valid_binary(tree, n)
    assert T.tree_tokens(tree) == words(n)
    assert len(T.tree_spans(tree)) == n - 1


@given(st.lists(st.integers(0, 9), max_size=20), st.integers(1, 5), st.integers(-3, 3))
def test_monotone_rescaling_keeps_tree(gaps, a, b):
    # integer gaps so the affine map is exact
    n = len(gaps) + 1
    assert T.distances_to_tree(words(n), gaps) == \
        T.distances_to_tree(words(n), [a * g + b for g in gaps])


@given(distance_vectors)
def test_greedy_matches_cartesian_tree(gaps):
    n = len(gaps) + 1
    assert as_nested(T.distances_to_tree(words(n), gaps)) == cartesian_tree(n, gaps)


def test_increasing_distances_give_left_branching():
    assert T.distances_to_tree(words(5), [1, 2, 3, 4]) == T.left_branching(words(5))


def test_decreasing_distances_give_right_branching():
    assert T.distances_to_tree(words(5), [4, 3, 2, 1]) == T.right_branching(words(5))


# -- baselines -------------------------------------------------------------

def test_baseline_shapes():
    w = words(4)
    assert as_nested(T.left_branching(w)) == (((0, 1), 2), 3)
    assert as_nested(T.right_branching(w)) == (0, (1, (2, 3)))
    assert as_nested(T.balanced(w)) == ((0, 1), (2, 3))
    assert as_nested(T.balanced(words(5))) == (((0, 1), 2), (3, 4))


@given(st.integers(1, 30), st.integers(0, 10_000))
def test_baselines_valid(n, seed):
    w = words(n)
    for tree in (T.left_branching(w), T.right_branching(w), T.balanced(w),
                 T.random_tree(w, seed)):
        assert T.is_valid_binary(tree, n)
        assert T.tree_tokens(tree) == w


def test_random_tree_seeded():
    w = words(12)
    assert T.random_tree(w, 3) == T.random_tree(w, 3)
    assert len({T.random_tree(w, s) for s in range(20)}) > 1
    with pytest.raises(T.TreeError):
        T.random_tree(w, None)


def test_baselines_reject_empty():
    for fn in (T.left_branching, T.right_branching, T.balanced):
        with pytest.raises(T.TreeError):
            fn([])


def test_depths():
    assert T.tree_depth(T.left_branching(words(6))) == 5
    assert T.tree_depth(T.balanced(words(8))) == 3
    assert T.tree_depth(Leaf(0, "a")) == 0


# -- spans -----------------------------------------------------------------

def test_span_counter_conventions():
    tree = T.read_bracketed("(a ((b c) d))")
    assert T.span_counter(tree) == {(0, 4): 1, (1, 4): 1, (1, 3): 1}
    assert T.span_counter(tree, include_root=False) == {(1, 4): 1, (1, 3): 1}


def test_unary_chain_spans_are_a_multiset():
    tree = T.read_ptb("(S (VP (V go) (ADV now)))")
    assert T.span_counter(tree)[(0, 2)] == 2


# -- PTB -------------------------------------------------------------------

def test_read_ptb_basic():
    tree = T.read_ptb("(S (NP (DT the) (NN dog)) (VP (VBD barked)))")
    assert tree.label == "S"
    assert tree.leaves() == ["the", "dog", "barked"]
    assert tree.tags() == ["DT", "NN", "VBD"]


def test_read_ptb_strips_function_tags_and_empty_elements():
    tree = T.read_ptb("( (S (NP-SBJ-1 (-NONE- *T*)) (NP=2 (PRP it)) (VP (VBZ works))) )")
    assert T.to_ptb(tree) == "(S (NP (PRP it)) (VP (VBZ works)))"


def test_read_ptb_keeps_dash_labels():
    tree = T.read_ptb("(S (-LRB- -LRB-) (NN x))")
    assert tree.tags() == ["-LRB-", "NN"]


@pytest.mark.parametrize("text", ["", "(S (NP", "(S x))", "S x", "(S (NP a) b)", "()",
                                  "(S (A a)) (T (B b))"])
def test_malformed_ptb(text):
    with pytest.raises(T.ParseError):
        T.read_ptb(text)


def test_parse_error_position():
    with pytest.raises(T.ParseError) as err:
        T.read_ptb("(S (NP a)))")
    assert err.value.position == 10


labels = st.sampled_from(["S", "NP", "VP", "PP", "ADJP"])
leaf_words = st.text("abcdefgh", min_size=1, max_size=4)
labeled_trees = st.recursive(
    st.builds(lambda tag, w: LabeledTree(tag, word=w), st.sampled_from(["DT", "NN"]), leaf_words),
    lambda kids: st.builds(LabeledTree, labels, st.lists(kids, min_size=1, max_size=3)),
    max_leaves=12)


@given(labeled_trees)
def test_ptb_round_trip(tree):
    assert T.read_ptb(T.to_ptb(tree)) == tree


@given(distance_vectors)
def test_bracketed_round_trip(gaps):
    tree = T.distances_to_tree(words(len(gaps) + 1), gaps)
    assert T.read_bracketed(T.to_bracketed(tree)) == tree


def test_read_bracketed_nary():
    tree = T.read_bracketed("(a b c)")
    assert isinstance(tree, LabeledTree)
    assert T.span_counter(tree) == {(0, 3): 1}


def test_read_tree_file(tmp_path):
    path = tmp_path / "gold.txt"
    path.write_text("(S (A a) (B b))\n\n(S (A c))\n", encoding="utf-8")
    assert [t.leaves() for t in T.read_tree_file(path)] == [["a", "b"], ["c"]]
    path.write_text("(S (A a)\n", encoding="utf-8")
    with pytest.raises(T.ParseError, match=":1:"):
        T.read_tree_file(path)


def test_normalize_label():
    assert T.normalize_label("NP-SBJ-1") == "NP"
    assert T.normalize_label("NP=3") == "NP"
    assert T.normalize_label("-NONE-") == "-NONE-"
    assert T.normalize_label("PP") == "PP"


def test_span_label_recorded():
    spans = T.tree_spans(T.read_ptb("(S (NP (DT a) (NN b)) (VB c))"))
    assert T.Span(0, 2, "NP") in spans and T.Span(0, 3, "S") in spans

