"""
Reverse-mode gradients and the probabilistic losses
===================================================

The tape engine differentiates everything the networks need.  Here we
check one gradient against central differences and look at how the
negative log predictive density trades error against spread.
"""

import numpy as np

from uqdense.losses import nlpd, nlpd_mc
from uqdense.nn import Tensor

# %%
# softplus' is the logistic sigmoid
x = np.linspace(-20, 20, 11)
t = Tensor(x, requires_grad=True)
t.softplus().sum().backward()
print(np.max(np.abs(t.grad - 1 / (1 + np.exp(-x)))))

# %%
# a small expression, checked by central differences
rng = np.random.default_rng(0)
w0 = rng.normal(size=(3, 4))
xs = rng.normal(size=(5, 4))


def f(w):
    return float(np.sum(np.tanh(xs @ w.T) ** 2))


w = Tensor(w0, requires_grad=True)
(Tensor(xs) @ w.T).tanh().square().sum().backward()
fd = np.zeros_like(w0)
h = 1e-6
for idx in np.ndindex(w0.shape):
    e = np.zeros_like(w0)
    e[idx] = h
    fd[idx] = (f(w0 + e) - f(w0 - e)) / (2 * h)
print("max |autodiff - finite diff|:", np.max(np.abs(w.grad - fd)))

# %%
# NLPD for a fixed error of 1: too small a sigma is punished hardest
y = np.zeros((1, 1))
for s in (0.1, 0.5, 1.0, 2.0, 5.0):
    print(f"sigma {s:4.1f}  nlpd {nlpd(y, np.ones((1, 1)), np.full((1, 1), s)).value:8.3f}")

# %%
# the MC form takes a stack of k passes and uses their mean and spread
passes = 1.0 + rng.normal(size=(1, 64, 1))
print("MC nlpd:", nlpd_mc(y, passes).value)
