"""Fitting f(x) = x with a 1-2-1 ReLU network.

The network has seven parameters: two hidden weights and biases, two output
weights and one output bias. It can represent the identity exactly, yet
training on [-1, 1] usually lands on parameters that only agree with x inside
the training interval.
"""

from dataclasses import dataclass

import numpy as np

from ..numerics import make_rng
from .adam import AdamState, adam_step
from .layers import Dense
from .network import Network


@dataclass
class IdentityTrial:
    trial: int
    in_domain_mse: float
    value_at_2: float


def identity_network():
    return Network([Dense(1, 2, "relu"), Dense(2, 1)])


def exact_identity_network():
    """Hand-set parameters with relu(x) - relu(-x) = x for every real x."""
    net = identity_network()
    hidden, out = net.layers
    hidden.params["W"][:, 0] = [1.0, -1.0]
    out.params["W"][0, :] = [1.0, -1.0]
    return net


def fit_identity(net, rng, n_points=1000, epochs=300, lr=1e-2, batch_size=32):
    x = rng.uniform(-1.0, 1.0, size=(n_points, 1))
    params = dict(net.named_parameters())
    state = AdamState(lr=lr)
    for _ in range(epochs):
        order = rng.permutation(n_points)
        for start in range(0, n_points, batch_size):
            xb = x[order[start:start + batch_size]]
            out, cache = net.forward(xb)
            grads, _ = net.backward(cache, 2.0 * (out - xb) / len(xb))
            adam_step(params, grads, state)
    return x


def demo_identity(seed=0, trials=6, epochs=300, lr=1e-2, batch_size=32):
    if trials < 1:
        raise ValueError("need at least one trial")
    report = []
    for t in range(trials):
        rng = make_rng(seed, t)
        net = identity_network()
        net.init(rng)
        x = fit_identity(net, rng, epochs=epochs, lr=lr, batch_size=batch_size)
        mse = float(np.mean((net(x) - x) ** 2))
        report.append(IdentityTrial(t, mse, float(net(np.array([[2.0]]))[0, 0])))
    return report
