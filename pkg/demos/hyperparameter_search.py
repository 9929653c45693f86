"""
Random then GP-guided architecture search
=========================================

A handful of random architectures seed a Gaussian-process surrogate over
the encoded search space; the remaining trials maximize expected
improvement.  Only train and validation rows are handed to the search.
"""

from uqdense.datasets import split_random, toy_generate
from uqdense.tuner import SearchSpace, gp_guided_search, make_trainer, tuning_data

x, y, _ = toy_generate(1, 1500, seed=0)
data = tuning_data(x, y, split_random(len(x), seed=0))

space = SearchSpace(n_layers=(1, 3), units=(8, 64), dropout=(0.0, 0.0), activations=("tanh", "softplus"),
                    learning_rate=(1e-3, 1e-2))
trials = gp_guided_search(space, data, "nlpd_direct", n_random=4, n_guided=4, seed=0,
                          trainer=make_trainer(head="direct", epochs=80, patience=20))

# %%
# trials come back ranked by validation loss
for t in trials:
    print(f"#{t.index} {t.phase:>15}  val {t.validation_loss:7.3f}  hidden {t.spec.hidden}  "
          f"{t.spec.activations[0]:>8}  lr {t.spec.learning_rate:.1e}")
