"""Train a small model on a synthetic treebank and compare its induced trees
with the trivial baselines.

    python3 demos/induce_trees.py [epochs]
"""

import sys

from prpn import trees
from prpn.evaluation import corpus_f1
from prpn.model import ModelConfig
from prpn.training import TrainConfig, parse_sentence, prepare_data, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 3

# 2000 sentences from a small English-like grammar, split 80/10/10
split, vocab = prepare_data({"pcfg": {"grammar": "english", "count": 2000, "seed": 0}})
print(f"vocabulary {len(vocab)}, train {len(split.train)}, test {len(split.test)}")

config = TrainConfig(model=ModelConfig(vocab_size=len(vocab)), epochs=epochs, criterion="UP")
record, params = train(config, split, vocab, seed=0)
for k, (ppl, f1) in enumerate(zip(record.valid_ppl, record.valid_f1)):
    print(f"epoch {k + 1}: valid PPL {ppl:.2f}, valid F1 {f1:.1f}")

gold = split.test.trees
sents = split.test.sentences
scores = {
    "model": record.test["f1"],
    "left-branching": corpus_f1([trees.left_branching(s) for s in sents], gold).f1,
    "right-branching": corpus_f1([trees.right_branching(s) for s in sents], gold).f1,
    "balanced": corpus_f1([trees.balanced(s) for s in sents], gold).f1,
    "random": corpus_f1([trees.random_tree(s, k) for k, s in enumerate(sents)], gold).f1,
}
for name, f1 in scores.items():
    print(f"{name:>16}: test F1 {f1:.1f}")

for s, g in list(zip(sents, gold))[:3]:
    print()
    print("gold :", trees.to_bracketed(g))
    print("model:", trees.to_bracketed(parse_sentence(params, vocab, s)))
