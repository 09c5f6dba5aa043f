"""Sequential networks with an optional identity skip around the whole stack."""

import numpy as np

from .layers import layer_from_spec


class ForwardCache:
    __slots__ = ("owner", "layer_caches", "in_shape")

    def __init__(self, owner, layer_caches, in_shape):
        self.owner = owner
        self.layer_caches = layer_caches
        self.in_shape = in_shape


class Network:
    """Ordered layers; with ``residual=True`` the output is ``x + layers(x)``."""

    def __init__(self, layers, residual=False, in_shape=None):
        self.layers = list(layers)
        self.residual = bool(residual)
        if in_shape is None:
            in_shape = self._infer_in_shape()
        self.in_shape = tuple(in_shape)
        shape = self.in_shape
        for layer in self.layers:
            shape = layer.out_shape(shape)
        self.out_shape = shape
        if self.residual and self.out_shape != self.in_shape:
            raise ValueError(
                f"residual network needs equal input/output shapes, got {self.in_shape} -> {self.out_shape}"
            )

    def _infer_in_shape(self):
        first = self.layers[0]
        if hasattr(first, "n_in"):
            return (first.n_in,)
        raise ValueError("in_shape must be given when the first layer is not dense")

    # ---- parameters ---------------------------------------------------------

    def named_parameters(self):
        """``[(name, array)]`` in a fixed order; arrays are live views."""
        out = []
        for i, layer in enumerate(self.layers):
            for key in sorted(layer.params):
                out.append((f"{i}.{key}", layer.params[key]))
        return out

    def weight_names(self):
        return [f"{i}.{k}" for i, layer in enumerate(self.layers) for k in layer.weight_names]

    def n_params(self):
        return sum(p.size for _, p in self.named_parameters())

    def init(self, rng):
        for layer in self.layers:
            layer.init(rng)

    def spec(self):
        return {
            "residual": self.residual,
            "in_shape": list(self.in_shape),
            "layers": [layer.spec() for layer in self.layers],
        }

    @classmethod
    def from_spec(cls, spec):
        return cls(
            [layer_from_spec(s) for s in spec["layers"]],
            residual=spec["residual"],
            in_shape=spec["in_shape"],
        )

    # ---- passes -------------------------------------------------------------

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[1:] != self.in_shape:
            raise ValueError(f"network expects input shape (batch, {self.in_shape}), got {x.shape}")
        caches = []
        h = x
        for layer in self.layers:
            h, c = layer.forward(h)
            caches.append(c)
        if self.residual:
            h = x + h
        return h, ForwardCache(self, caches, x.shape)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, g):
        """Return (``{name: grad}``, input gradient) for upstream gradient ``g``."""
        if not isinstance(cache, ForwardCache) or cache.owner is not self:
            raise ValueError("cache was not produced by this network")
        if len(cache.layer_caches) != len(self.layers):
            raise ValueError("stale cache: layer count changed since forward")
        expected = cache.in_shape[:1] + tuple(self.out_shape)
        if g.shape != expected:
            raise ValueError(f"upstream gradient has shape {g.shape}, expected {expected}")
        grads = {}
        h = g
        for i in range(len(self.layers) - 1, -1, -1):
            layer_grads, h = self.layers[i].backward(cache.layer_caches[i], h)
            for key, val in layer_grads.items():
                grads[f"{i}.{key}"] = val
        if self.residual:
            h = g + h
        return grads, h


def forward(net, batch):
    return net.forward(batch)


def backward(net, cache, upstream):
    return net.backward(cache, upstream)
