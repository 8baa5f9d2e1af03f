"""Hand-built treebank fixtures with hand-computed expectations."""

# Ten gold trees with punctuation preterminals.  Comments give the words
# left after removing punctuation.
WSJ10_TREES = [
    "(S (NP (DT The) (NN cat)) (VP (VBD sat)) (. .))",                        # The cat sat
    "(S (NP (PRP It)) (VP (VBD rained)) (. .))",                               # It rained
    "(S (INTJ (UH Oh)) (, ,) (NP (PRP he)) (VP (VBD left)) (. !))",            # Oh he left
    "(S (NP (NNP Hi)) (. .))",                                                 # one word
    "(S (NP (DT a) (NN b)) (VP (VBD c) (NP (DT d) (NN e)) (PP (IN f) (NP (DT g) (NN h)))"
    " (PP (IN i) (NP (DT j) (NN k)))) (. .))",                                 # eleven words
    "(S (`` ``) (NP (DT a) (NN b)) (, ,) (VP (VBD c) (NP (DT d) (NN e))"
    " (PP (IN f) (NP (DT g) (NN h))) (PP (IN i) (NP (NN j)))) ('' '') (. .))",   # ten words
    "(S (NP (-LRB- -LRB-) (NN x) (-RRB- -RRB-)) (VP (VBZ is)) (. .))",          # x is
    "(S (NP ($ $) (CD 5)) (VP (VBD fell)) (. .))",                            # 5 fell
    "(S (# #) (. .))",                                                        # nothing
    "(S (NP (NN x)) (: ;) (VP (VB y) (NP (NN z))) (. .))",                     # x y z
]

# Surviving sentences and their labeled spans of width >= 2, reindexed over
# the punctuation-free words.
WSJ10_EXPECTED = [
    (["The", "cat", "sat"], {(0, 3, "S"), (0, 2, "NP")}),
    (["It", "rained"], {(0, 2, "S")}),
    (["Oh", "he", "left"], {(0, 3, "S")}),
    (["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"],
     {(0, 10, "S"), (0, 2, "NP"), (2, 10, "VP"), (3, 5, "NP"), (5, 8, "PP"), (6, 8, "NP"),
      (8, 10, "PP")}),
    (["x", "is"], {(0, 2, "S")}),
    (["5", "fell"], {(0, 2, "S")}),
    (["x", "y", "z"], {(0, 3, "S"), (1, 3, "VP")}),
]
