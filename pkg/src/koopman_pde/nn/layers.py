"""Layer types with explicit forward/backward passes.

Dense layers act on ``(batch, features)``; convolution and pooling act on
``(batch, channels, length)``. Every ``forward`` returns ``(output, cache)``
and ``backward(cache, grad_out)`` returns ``(param_grads, grad_in)``.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ACTIVATIONS = ("relu", "none")


def _check_activation(activation):
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")
    return activation


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    kind = "layer"
    weight_names = ()

    def __init__(self):
        self.params = {}

    def spec(self):
        return {"type": self.kind}

    def init(self, rng):
        pass

    def out_shape(self, in_shape):
        return in_shape


class Dense(Layer):
    kind = "dense"
    weight_names = ("W",)

    def __init__(self, n_in, n_out, activation="none"):
        super().__init__()
        self.n_in, self.n_out = int(n_in), int(n_out)
        self.activation = _check_activation(activation)
        self.params = {"W": np.zeros((self.n_out, self.n_in)), "b": np.zeros(self.n_out)}

    def spec(self):
        return {"type": self.kind, "in": self.n_in, "out": self.n_out, "activation": self.activation}

    def init(self, rng):
        self.params["W"][...] = glorot_uniform(rng, (self.n_out, self.n_in), self.n_in, self.n_out)
        self.params["b"][...] = 0.0

    def out_shape(self, in_shape):
        if in_shape != (self.n_in,):
            raise ValueError(f"dense layer expects width {self.n_in}, got shape {in_shape}")
        return (self.n_out,)

    def forward(self, x):
        z = x @ self.params["W"].T + self.params["b"]
        if self.activation == "relu":
            return np.maximum(z, 0.0), (x, z)
        return z, (x, None)

    def backward(self, cache, g):
        x, z = cache
        if z is not None:
            g = g * (z > 0)
        grads = {"W": g.T @ x, "b": g.sum(axis=0)}
        return grads, g @ self.params["W"]


class Conv1D(Layer):
    """Stride-1 convolution with zero padding chosen so output length equals input length.

    For kernel k the input is padded with ``(k - 1) // 2`` zeros on the left and
    the rest on the right (1 / 2 for k = 4).
    """

    kind = "conv1d"
    weight_names = ("W",)

    def __init__(self, in_channels, out_channels, kernel=4, stride=1, activation="relu"):
        super().__init__()
        if kernel < 1 or stride != 1:
            raise ValueError("only stride-1 convolutions with positive kernels are supported")
        self.in_channels, self.out_channels = int(in_channels), int(out_channels)
        self.kernel, self.stride = int(kernel), int(stride)
        self.activation = _check_activation(activation)
        self.pad_left = (self.kernel - 1) // 2
        self.pad_right = self.kernel - 1 - self.pad_left
        self.params = {
            "W": np.zeros((self.out_channels, self.in_channels, self.kernel)),
            "b": np.zeros(self.out_channels),
        }

    def spec(self):
        return {
            "type": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "stride": self.stride,
            "padding": [self.pad_left, self.pad_right],
            "activation": self.activation,
        }

    def init(self, rng):
        fan_in = self.in_channels * self.kernel
        fan_out = self.out_channels * self.kernel
        self.params["W"][...] = glorot_uniform(rng, self.params["W"].shape, fan_in, fan_out)
        self.params["b"][...] = 0.0

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[0] != self.in_channels:
            raise ValueError(f"conv layer expects ({self.in_channels}, L), got {in_shape}")
        return (self.out_channels, in_shape[1])

    def forward(self, x):
        batch, _, length = x.shape
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad_left, self.pad_right)))
        # (batch, C, L, k) -> (batch, L, C*k)
        patches = sliding_window_view(xp, self.kernel, axis=2).transpose(0, 2, 1, 3)
        patches = patches.reshape(batch * length, self.in_channels * self.kernel)
        w = self.params["W"].reshape(self.out_channels, -1)
        z = (patches @ w.T + self.params["b"]).reshape(batch, length, self.out_channels)
        z = z.transpose(0, 2, 1)
        if self.activation == "relu":
            return np.maximum(z, 0.0), (patches, z, x.shape)
        return np.ascontiguousarray(z), (patches, None, x.shape)

    def backward(self, cache, g):
        patches, z, shape = cache
        batch, channels, length = shape
        if z is not None:
            g = g * (z > 0)
        g2 = g.transpose(0, 2, 1).reshape(batch * length, self.out_channels)
        w = self.params["W"].reshape(self.out_channels, -1)
        grads = {"W": (g2.T @ patches).reshape(self.params["W"].shape), "b": g2.sum(axis=0)}
        dpatch = (g2 @ w).reshape(batch, length, channels, self.kernel)
        dxp = np.zeros((batch, channels, length + self.kernel - 1))
        for j in range(self.kernel):
            dxp[:, :, j:j + length] += dpatch[:, :, :, j].transpose(0, 2, 1)
        return grads, dxp[:, :, self.pad_left:self.pad_left + length]


class AvgPool1D(Layer):
    kind = "avgpool1d"

    def __init__(self, size=2, stride=2):
        super().__init__()
        if size < 1 or stride < 1:
            raise ValueError("pool size and stride must be positive")
        self.size, self.stride = int(size), int(stride)

    def spec(self):
        return {"type": self.kind, "size": self.size, "stride": self.stride}

    def _out_len(self, length):
        return (length - self.size) // self.stride + 1

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[1] < self.size:
            raise ValueError(f"pooling needs (C, L >= {self.size}), got {in_shape}")
        return (in_shape[0], self._out_len(in_shape[1]))

    def forward(self, x):
        n_out = self._out_len(x.shape[-1])
        span = self.stride * (n_out - 1) + 1
        out = x[..., 0:span:self.stride].copy()
        for j in range(1, self.size):
            out += x[..., j:j + span:self.stride]
        return out / self.size, x.shape

    def backward(self, cache, g):
        shape = cache
        n_out = g.shape[-1]
        span = self.stride * (n_out - 1) + 1
        dx = np.zeros(shape)
        g = g / self.size
        for j in range(self.size):
            dx[..., j:j + span:self.stride] += g
        return {}, dx


class Flatten(Layer):
    """(batch, C, L) -> (batch, C*L), channel-major."""

    kind = "flatten"

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, g):
        return {}, g.reshape(cache)


class Reshape(Layer):
    """(batch, W) -> (batch, channels, W / channels)."""

    kind = "reshape"

    def __init__(self, channels=1):
        super().__init__()
        self.channels = int(channels)

    def spec(self):
        return {"type": self.kind, "channels": self.channels}

    def out_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] % self.channels:
            raise ValueError(f"cannot reshape {in_shape} into {self.channels} channels")
        return (self.channels, in_shape[0] // self.channels)

    def forward(self, x):
        return x.reshape(x.shape[0], self.channels, -1), x.shape

    def backward(self, cache, g):
        return {}, g.reshape(cache)


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv1D, AvgPool1D, Flatten, Reshape)}


def layer_from_spec(spec):
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "dense":
        return Dense(spec["in"], spec["out"], spec.get("activation", "none"))
    if kind == "conv1d":
        return Conv1D(
            spec["in_channels"],
            spec["out_channels"],
            spec.get("kernel", 4),
            spec.get("stride", 1),
            spec.get("activation", "relu"),
        )
    if kind == "avgpool1d":
        return AvgPool1D(spec.get("size", 2), spec.get("stride", 2))
    if kind == "flatten":
        return Flatten()
    if kind == "reshape":
        return Reshape(spec.get("channels", 1))
    raise ValueError(f"unknown layer type {kind!r}")
