import pytest

from prpn import corpus as C
from prpn import pcfg as P
from prpn import trees as T
from prpn.evaluation import corpus_f1


def test_vocabulary_ranking_and_cap():
    v = C.Vocabulary.build([["b", "a", "c", "a"], ["b", "d", "a"]], cap=5)
    assert v.itos == ["<unk>", "<eos>", "a", "b", "c"]
    assert list(v.numericalize(["a", "d"])) == [2, 0, 1]
    assert v.denumericalize([2, 3, 1]) == ["a", "b"]


def test_vocabulary_errors():
    with pytest.raises(ValueError):
        C.Vocabulary.build([], cap=10)
    with pytest.raises(ValueError):
        C.Vocabulary.build([["a"]], cap=2)
    with pytest.raises(ValueError):
        C.Vocabulary(["a", "<unk>"])


def test_vocabulary_save_load(tmp_path):
    v = C.Vocabulary.build([["x", "y", "y"]], cap=10)
    v.save(tmp_path / "v.txt")
    assert C.Vocabulary.load(tmp_path / "v.txt").itos == v.itos


def test_load_split_text_and_pooling(tmp_path):
    (tmp_path / "a.txt").write_text("the dog\n\na cat sat\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("it ran\n", encoding="utf-8")
    split = C.load_split({"train": str(tmp_path / "a.txt"), "test": str(tmp_path / "b.txt")})
    assert split.train.sentences == [["the", "dog"], ["a", "cat", "sat"]]
    assert split.valid is None and split.metadata["overlap"] is False
    pooled = C.load_split({"train": str(tmp_path / "a.txt"), "test": str(tmp_path / "b.txt")},
                          no_split=True)
    assert len(pooled.train) == 3 and pooled.metadata["overlap"] is True
    assert pooled.test is pooled.train


def test_load_split_treebank(tmp_path):
    (tmp_path / "t.mrg").write_text("(S (NP (DT a) (NN b)) (VP (V c)))\n", encoding="utf-8")
    split = C.load_split({"train": str(tmp_path / "t.mrg")}, treebank=True)
    assert split.train.sentences == [["a", "b", "c"]]
    assert split.train.trees[0].label == "S"


def test_split_items():
    parts = C.split_items(list(range(10)))
    assert [len(parts[k]) for k in ("train", "valid", "test")] == [8, 1, 1]
    assert parts["train"] + parts["valid"] + parts["test"] == list(range(10))


def test_subset_alignment():
    with pytest.raises(ValueError):
        C.Subset([["a"]], [])


# -- grammars --------------------------------------------------------------

def test_single_word_grammar():
    spec = P.PcfgSpec({"S": [(("a",), 1.0)]})
    data = P.generate_pcfg_corpus(spec, 20, seed=0)
    assert all(words == ["a"] for words, _ in data)


def test_generation_is_seeded():
    spec = P.english_like_grammar()
    assert [w for w, _ in P.generate_pcfg_corpus(spec, 50, 3)] == \
        [w for w, _ in P.generate_pcfg_corpus(spec, 50, 3)]
    assert [w for w, _ in P.generate_pcfg_corpus(spec, 50, 3)] != \
        [w for w, _ in P.generate_pcfg_corpus(spec, 50, 4)]


def test_length_limit_respected():
    for words, tree in P.generate_pcfg_corpus(P.english_like_grammar(12), 300, 0):
        assert 1 <= len(words) <= 12
        assert tree.leaves() == words


def test_right_branching_grammar_gold():
    data = P.generate_pcfg_corpus(P.right_branching_grammar(), 1000, seed=0)
    for words, tree in data:
        assert set(words) == {"a"}
    preds = [T.right_branching(w) for w, _ in data]
    assert corpus_f1(preds, [t for _, t in data]).f1 == 100.0


def test_unusable_grammar():
    spec = P.PcfgSpec({"S": [(("a", "S", "S"), 0.996), (("a",), 0.004)]}, max_length=3)
    with pytest.raises(P.GrammarError):
        P.generate_pcfg_corpus(spec, 10, seed=0, window=200)


def test_invalid_grammars():
    with pytest.raises(P.GrammarError):
        P.PcfgSpec({"S": [(("a",), 0.0)]})
    with pytest.raises(P.GrammarError):
        P.PcfgSpec({"X": [(("a",), 1.0)]})


def test_spec_round_trip(tmp_path):
    import json
    spec = P.english_like_grammar()
    path = tmp_path / "g.json"
    path.write_text(json.dumps(spec.to_dict()), encoding="utf-8")
    again = P.PcfgSpec.load(path)
    assert again.productions == spec.productions
    assert [w for w, _ in P.generate_pcfg_corpus(again, 30, 1)] == \
        [w for w, _ in P.generate_pcfg_corpus(spec, 30, 1)]


def test_terminal_tags():
    spec = P.PcfgSpec({"S": [(("go", "NP"), 1.0)], "NP": [(("home",), 1.0)]})
    (_, tree), = P.generate_pcfg_corpus(spec, 1, 0)
    assert tree.tags() == ["GO", "NP"]
