"""Look inside one forward pass: syntactic distances, the gates they induce,
and a finite-difference check of the gradients.

    python3 demos/gates_and_gradients.py
"""

import numpy as np

from prpn import autodiff as ad
from prpn import model as m
from prpn import trees

np.set_printoptions(precision=3, suppress=True)
rng = np.random.default_rng(4)
cfg = m.ModelConfig(vocab_size=6, embed_dim=3, hidden_dim=4, mlp_dim=4, lookback=2)
params = m.ModelParams(cfg, {k: rng.uniform(-1, 1, size=f(cfg))
                             for k, f in m.PARAM_SHAPES.items()})
ids = [1, 4, 2, 5, 3, 0]
words = ["the", "old", "man", "saw", "her", "<eos>"]

trace = []
out = m.lm_negative_log_likelihood(ids, params, trace=trace)
print("gap distances:", out.distances.value)
print("tree:", trees.to_bracketed(trees.distances_to_tree(words[:-1], out.distances.value[:-1])))

# Every gate row rises to 1 at the newest memory entry; a large distance at
# step t closes the gates of everything before it.
for entry in trace:
    if entry["kind"] == "read":
        print(f"read step {entry['position']}: gates {entry['gates']}  weights {entry['s']}")

print(f"\nNLL {float(out.nll.value):.4f} over {out.count} predictions")
err = ad.fd_check(lambda: m.lm_negative_log_likelihood(ids, params).nll, params, 1e-4)
print(f"largest relative gradient error against central differences: {err:.1e}")
