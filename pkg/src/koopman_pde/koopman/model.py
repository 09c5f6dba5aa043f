"""Residual Koopman autoencoder.

The state map is ``u -> (chi + I) u -> psi -> y``; latent states advance as
``y -> K y``; the inverse map is ``y -> psi_inv -> (zeta + I)``. ``chi`` and
``zeta`` are optional outer networks; without them the model is linear.
"""

import json
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

import numpy as np

from ..errors import ArchitectureMismatch, ConfigError, DataError
from ..nn import AvgPool1D, Conv1D, Dense, Flatten, Network, Reshape, read_checkpoint, write_checkpoint

OUTER_KINDS = (None, "mlp", "conv")
K_CONSTRAINTS = ("diagonal", "full")


@dataclass(frozen=True)
class ModelArch:
    n: int
    r: int
    outer: Optional[str] = None
    k_constraint: str = "diagonal"
    residual: bool = True
    mlp_depth: int = 6
    conv_channels: Tuple[int, ...] = (8, 16, 32, 64)
    conv_dense: int = 128

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        if self.outer == "none":
            object.__setattr__(self, "outer", None)
        if self.n < 1 or not 1 <= self.r <= self.n:
            raise ConfigError(f"need 1 <= r <= n, got n={self.n}, r={self.r}")
        if self.outer not in OUTER_KINDS:
            raise ConfigError(f"unknown outer network {self.outer!r}; expected none, mlp or conv")
        if self.k_constraint not in K_CONSTRAINTS:
            raise ConfigError(f"unknown K constraint {self.k_constraint!r}; expected {K_CONSTRAINTS}")
        if self.outer == "mlp" and self.mlp_depth < 1:
            raise ConfigError("mlp_depth must be at least 1")
        if self.outer == "conv":
            shrink = 2 ** (len(self.conv_channels) - 1)
            if not self.conv_channels or self.n % shrink:
                raise ConfigError(f"conv outer network needs n divisible by {shrink}, got {self.n}")

    def descriptor(self):
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        return d

    @classmethod
    def from_descriptor(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DataError(f"unknown architecture fields {sorted(unknown)}")
        return cls(**d)


def _mlp(n, depth, residual):
    layers = [Dense(n, n, "relu") for _ in range(depth - 1)] + [Dense(n, n)]
    return Network(layers, residual=residual, in_shape=(n,))


def _convnet(n, channels, dense, residual):
    layers = [Reshape(1)]
    c_in = 1
    for i, c in enumerate(channels):
        if i:
            layers.append(AvgPool1D(2, 2))
        layers.append(Conv1D(c_in, c, kernel=4))
        c_in = c
    width = channels[-1] * (n // 2 ** (len(channels) - 1))
    layers += [Flatten(), Dense(width, dense, "relu"), Dense(dense, n)]
    return Network(layers, residual=residual, in_shape=(n,))


class KoopmanModel:
    """Parameters live in the layers; :meth:`parameters` returns live views by name."""

    def __init__(self, arch, rng=None, outer_init="random"):
        self.arch = arch
        n, r = arch.n, arch.r
        if arch.outer == "mlp":
            self.chi = _mlp(n, arch.mlp_depth, arch.residual)
            self.zeta = _mlp(n, arch.mlp_depth, arch.residual)
        elif arch.outer == "conv":
            self.chi = _convnet(n, arch.conv_channels, arch.conv_dense, arch.residual)
            self.zeta = _convnet(n, arch.conv_channels, arch.conv_dense, arch.residual)
        else:
            self.chi = self.zeta = None
        self.psi = Dense(n, r)
        self.psi_inv = Dense(r, n)
        self.psi.params["W"][...] = np.eye(r, n)
        self.psi_inv.params["W"][...] = np.eye(n, r)
        self.K = np.ones(r) if arch.k_constraint == "diagonal" else np.eye(r)
        if self.chi is not None:
            if outer_init == "random":
                if rng is None:
                    raise ValueError("random outer initialization needs an rng")
                self.chi.init(rng)
                self.zeta.init(rng)
            elif outer_init == "zero_last":
                for net in (self.chi, self.zeta):
                    for p in net.layers[-1].params.values():
                        p[...] = 0.0
            else:
                raise ValueError(f"unknown outer_init {outer_init!r}")

    @property
    def diagonal(self):
        return self.arch.k_constraint == "diagonal"

    def K_matrix(self):
        """The realized r x r dynamics matrix."""
        return np.diag(self.K) if self.diagonal else self.K.copy()

    # ---- parameters -----------------------------------------------------------

    def parameters(self):
        out = {}
        if self.chi is not None:
            out.update({f"chi.{k}": v for k, v in self.chi.named_parameters()})
        out["psi.W"] = self.psi.params["W"]
        out["psi.b"] = self.psi.params["b"]
        out["K"] = self.K
        out["psi_inv.W"] = self.psi_inv.params["W"]
        out["psi_inv.b"] = self.psi_inv.params["b"]
        if self.zeta is not None:
            out.update({f"zeta.{k}": v for k, v in self.zeta.named_parameters()})
        return out

    def weight_names(self):
        """Parameters that enter the l2 penalty (everything except biases)."""
        names = []
        if self.chi is not None:
            names += [f"chi.{k}" for k in self.chi.weight_names()]
        names += ["psi.W", "K", "psi_inv.W"]
        if self.zeta is not None:
            names += [f"zeta.{k}" for k in self.zeta.weight_names()]
        return names

    def n_params(self):
        return sum(p.size for p in self.parameters().values())

    def get_state(self):
        return {k: v.copy() for k, v in self.parameters().items()}

    def set_state(self, state):
        params = self.parameters()
        if set(state) != set(params):
            raise ArchitectureMismatch("parameter names differ", fields=sorted(set(state) ^ set(params)))
        for k, v in params.items():
            if state[k].shape != v.shape:
                raise ArchitectureMismatch(f"parameter {k} has shape {state[k].shape}, expected {v.shape}", [k])
            v[...] = state[k]

    # ---- maps -------------------------------------------------------------------

    def _check(self, x, width, what):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != width:
            raise ValueError(f"{what} expects shape (batch, {width}), got {x.shape}")
        return x

    def outer_encode(self, u):
        u = self._check(u, self.arch.n, "outer encoder")
        return u if self.chi is None else self.chi(u)

    def outer_decode(self, a):
        a = self._check(a, self.arch.n, "outer decoder")
        return a if self.zeta is None else self.zeta(a)

    def encode(self, u):
        return self.psi.forward(self.outer_encode(u))[0]

    def decode(self, y):
        y = self._check(y, self.arch.r, "decoder")
        return self.outer_decode(self.psi_inv.forward(y)[0])

    def __call__(self, u):
        return self.decode(self.encode(u))

    def advance(self, y):
        """One latent step ``y -> K y`` (rows of ``y`` are latent states)."""
        return y * self.K if self.diagonal else y @ self.K.T

    def latent_iterates(self, u0, p):
        """``[y_0, ..., y_p]`` obtained by repeatedly applying K to ``encode(u0)``."""
        y = self.encode(np.atleast_2d(u0))
        out = [y]
        for _ in range(p):
            y = self.advance(y)
            out.append(y)
        return out

    def predict(self, u0, p):
        """Decode ``K^p encode(u0)``; the latent state never leaves latent space."""
        if p < 0:
            raise ValueError(f"prediction horizon must be >= 0, got {p}")
        single = np.ndim(u0) == 1
        out = self.decode(self.latent_iterates(u0, p)[-1])
        return out[0] if single else out

    def predict_all(self, u0, p):
        """Predictions for horizons ``0..p`` as ``(batch, p + 1, n)``."""
        # decode horizon by horizon: same batch shapes as predict(), hence identical bits
        return np.stack([self.decode(y) for y in self.latent_iterates(u0, p)], axis=1)

    # ---- persistence --------------------------------------------------------------

    def descriptor(self):
        return {"model": "koopman-autoencoder", "arch": self.arch.descriptor()}

    def save(self, path, extra=None):
        desc = self.descriptor()
        if extra:
            desc["extra"] = extra
        params = self.parameters()
        desc["tensors"] = list(params)
        write_checkpoint(path, json.dumps(desc, sort_keys=True), list(params.values()))

    @classmethod
    def load(cls, path):
        desc, tensors = _read(path)
        model = cls(ModelArch.from_descriptor(desc["arch"]), outer_init="zero_last")
        model._load_tensors(desc, tensors, path)
        return model

    def _load_tensors(self, desc, tensors, path):
        names = desc.get("tensors")
        if names is None or len(names) != len(tensors):
            raise DataError(f"{path}: tensor list does not match stored tensors")
        self.set_state(dict(zip(names, tensors)))


def _read(path):
    text, tensors = read_checkpoint(path)
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: checkpoint descriptor is not valid JSON") from exc
    if desc.get("model") != "koopman-autoencoder" or "arch" not in desc:
        raise DataError(f"{path}: not a Koopman model checkpoint")
    return desc, tensors


def checkpoint_extra(path):
    return _read(path)[0].get("extra", {})


def warm_start(model, path, optimizer=None):
    """Load all parameters from ``path`` into ``model``; architectures must match exactly.

    The optimizer state, when given, is reset so training restarts its moment
    estimates from the loaded weights.
    """
    desc, tensors = _read(path)
    mine = model.arch.descriptor()
    theirs = desc["arch"]
    diff = sorted(k for k in set(mine) | set(theirs) if mine.get(k) != theirs.get(k))
    if diff:
        detail = ", ".join(f"{k}: checkpoint={theirs.get(k)!r} model={mine.get(k)!r}" for k in diff)
        raise ArchitectureMismatch(f"{path}: architecture mismatch ({detail})", fields=diff)
    model._load_tensors(desc, tensors, path)
    if optimizer is not None:
        optimizer.reset()
    return model
