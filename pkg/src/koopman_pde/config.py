"""Run configuration files.

A config file holds one ``key = value`` per line with ``#`` comments and
dotted keys such as ``loss.w2 = 1.0``. Every key has a documented default
(see :data:`DEFAULTS`); unknown keys are rejected. ``auto`` selects the
context-dependent default described next to a key.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import ConfigError
from .koopman import LossWeights, ModelArch, TrainConfig
from .pde import KS, MIXES, PDE_BY_NAME, Burgers, Grid1D, Heat, ICParams, generate_dataset

# key -> (default, description)
DEFAULTS = {
    "pde.name": ("heat", "heat | burgers | ks"),
    "pde.epsilon": ("10.0", "Burgers advection strength"),
    "pde.mu": ("1.0", "Burgers diffusion strength"),
    "grid.n": ("128", "grid points (power of two)"),
    "grid.a": ("auto", "left end of the periodic domain; auto: -pi (heat, burgers) or -4 pi (ks)"),
    "grid.b": ("auto", "right end of the periodic domain; auto: pi or 4 pi"),
    "data.mix": ("1", "training mix: 1 (noise), 2 (+sine), 3 (+square)"),
    "data.count": ("1000", "training trajectories"),
    "data.val_count": ("200", "validation trajectories (same mix)"),
    "data.test_count": ("200", "test trajectories (all five families)"),
    "data.T": ("50", "snapshots per trajectory"),
    "data.dt": ("0.0025", "snapshot spacing"),
    "data.dt_solver": ("auto", "internal solver step; auto: dt/10 (burgers), dt/50 (ks)"),
    "data.seed": ("0", "dataset seed"),
    "data.sigma": ("0.5", "white-noise standard deviation"),
    "data.geometric_p": ("0.25", "success probability of the sine frequency law"),
    "data.omega_max": ("10", "largest sine frequency"),
    "data.sine_amplitude": ("0,1", "sine amplitude range"),
    "data.sine_phase": ("0,6.283185307179586", "sine phase range"),
    "data.square_height": ("0.2,1", "square-wave height range"),
    "data.square_width": ("auto", "square-wave width range; auto: 0.5,L/4"),
    "data.square_center": ("auto", "square-wave center range; auto: the domain"),
    "data.gaussian_amplitude": ("0.2,1", "Gaussian amplitude range"),
    "data.gaussian_width": ("auto", "Gaussian width range; auto: L/32,L/8"),
    "data.gaussian_center": ("auto", "Gaussian center range; auto: the domain"),
    "data.triangle_amplitude": ("0.2,1", "triangle amplitude range"),
    "data.triangle_half_width": ("auto", "triangle half-width range; auto: L/16,L/4"),
    "data.triangle_center": ("auto", "triangle center range; auto: the domain"),
    "arch.outer": ("none", "outer networks: none | mlp | conv"),
    "arch.r": ("21", "latent rank"),
    "arch.k_constraint": ("diagonal", "diagonal | full"),
    "arch.residual": ("true", "identity skip around the outer networks"),
    "arch.mlp_depth": ("6", "dense layers per outer MLP"),
    "arch.conv_channels": ("8,16,32,64", "filters per convolution stage"),
    "arch.conv_dense": ("128", "width of the hidden dense layer of the conv networks"),
    "loss.w1": ("1.0", "reconstruction weight"),
    "loss.w2": ("1.0", "prediction weight"),
    "loss.w3": ("1.0", "latent linearity weight"),
    "loss.w4": ("1.0", "outer autoencoder weight"),
    "loss.w5": ("1.0", "inner autoencoder weight"),
    "loss.l2": ("1e-8", "weight-decay coefficient"),
    "loss.P": ("auto", "largest prediction horizon; auto: T-1"),
    "loss.starts": ("all", "start indices per batch for losses 2 and 3: all, or a count"),
    "opt.lr": ("1e-3", "Adam step size"),
    "opt.lr_decay": ("1.0", "step-size multiplier per epoch"),
    "opt.beta1": ("0.9", "Adam first-moment decay"),
    "opt.beta2": ("0.999", "Adam second-moment decay"),
    "opt.eps": ("1e-8", "Adam denominator guard"),
    "opt.batch": ("128", "minibatch size"),
    "opt.epochs": ("10", "training epochs"),
    "opt.seed": ("0", "seed for initialization and batch order"),
    "opt.patience": ("none", "stop after this many epochs without validation gain"),
    "paths.train": ("data/train.kpd", "training dataset"),
    "paths.val": ("data/val.kpd", "validation dataset"),
    "paths.test": ("data/test.kpd", "test dataset"),
    "eval.horizons": ("1,5,10,20", "prediction horizons for evaluation"),
    "sweep.ranks": ("3,9,13", "ranks for sweep-rank"),
    "homotopy.dts": ("0.125,0.25", "timestep chain for homotopy"),
    "ablation.mixes": ("1,3", "training mixes for the ablation grid"),
}


@dataclass
class RunConfig:
    values: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        unknown = sorted(set(self.values) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged = {k: d for k, (d, _) in DEFAULTS.items()}
        merged.update(self.values)
        self.values = merged

    def get(self, key):
        return self.values[key]

    def set(self, key, value):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key: {key}")
        self.values[key] = str(value).strip()

    # ---- typed access ----------------------------------------------------------------

    def _convert(self, key, fn, what):
        raw = self.values[key]
        try:
            return fn(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key} = {raw!r} is not a valid {what}") from exc

    def int(self, key):
        return self._convert(key, int, "integer")

    def float(self, key):
        return self._convert(key, float, "number")

    def bool(self, key):
        raw = self.values[key].lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key} = {raw!r} is not a boolean")

    def is_auto(self, key, word="auto"):
        return self.values[key].lower() == word

    def optional_int(self, key, word="auto"):
        return None if self.is_auto(key, word) else self.int(key)

    def optional_float(self, key, word="auto"):
        return None if self.is_auto(key, word) else self.float(key)

    def floats(self, key):
        return self._convert(key, lambda s: [float(v) for v in s.split(",") if v.strip()], "comma-separated list")

    def ints(self, key):
        return self._convert(key, lambda s: [int(v) for v in s.split(",") if v.strip()], "comma-separated list")

    def range(self, key):
        if self.is_auto(key):
            return None
        vals = self.floats(key)
        if len(vals) != 2 or vals[1] < vals[0]:
            raise ConfigError(f"{key} must be 'lo,hi' with lo <= hi")
        return tuple(vals)

    # ---- domain objects ---------------------------------------------------------------

    def pde(self):
        name = self.values["pde.name"].lower()
        if name not in PDE_BY_NAME:
            raise ConfigError(f"pde.name must be one of {sorted(PDE_BY_NAME)}, got {name!r}")
        if name == "burgers":
            try:
                return Burgers(self.float("pde.epsilon"), self.float("pde.mu"))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return KS() if name == "ks" else Heat()

    def grid(self):
        pde = self.pde()
        a = pde.domain[0] if self.is_auto("grid.a") else self.float("grid.a")
        b = pde.domain[1] if self.is_auto("grid.b") else self.float("grid.b")
        try:
            return Grid1D(self.int("grid.n"), a, b)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def mix(self):
        mix = self.values["data.mix"]
        if mix not in MIXES:
            raise ConfigError(f"data.mix must be one of {sorted(MIXES)}, got {mix!r}")
        return mix

    def ic_params(self):
        p = ICParams(
            sigma=self.float("data.sigma"),
            geometric_p=self.float("data.geometric_p"),
            omega_max=self.int("data.omega_max"),
        )
        for name in (
            "sine_amplitude",
            "sine_phase",
            "square_height",
            "square_width",
            "square_center",
            "gaussian_amplitude",
            "gaussian_width",
            "gaussian_center",
            "triangle_amplitude",
            "triangle_half_width",
            "triangle_center",
        ):
            setattr(p, name, self.range(f"data.{name}"))
        if not 0 < p.geometric_p <= 1 or p.omega_max < 1 or p.sigma < 0:
            raise ConfigError("need 0 < data.geometric_p <= 1, data.omega_max >= 1 and data.sigma >= 0")
        return p

    def arch(self):
        outer = self.values["arch.outer"].lower()
        return ModelArch(
            n=self.int("grid.n"),
            r=self.int("arch.r"),
            outer=None if outer == "none" else outer,
            k_constraint=self.values["arch.k_constraint"],
            residual=self.bool("arch.residual"),
            mlp_depth=self.int("arch.mlp_depth"),
            conv_channels=tuple(self.ints("arch.conv_channels")),
            conv_dense=self.int("arch.conv_dense"),
        )

    def weights(self):
        return LossWeights(
            *(self.float(f"loss.w{i}") for i in range(1, 6)),
            l2=self.float("loss.l2"),
            P=self.optional_int("loss.P"),
            starts=self.optional_int("loss.starts", "all"),
        )

    def train_config(self):
        cfg = TrainConfig(
            epochs=self.int("opt.epochs"),
            batch_size=self.int("opt.batch"),
            lr=self.float("opt.lr"),
            lr_decay=self.float("opt.lr_decay"),
            beta1=self.float("opt.beta1"),
            beta2=self.float("opt.beta2"),
            eps=self.float("opt.eps"),
            seed=self.int("opt.seed"),
            patience=self.optional_int("opt.patience", "none"),
            weights=self.weights(),
        )
        if cfg.epochs < 0 or cfg.batch_size < 1 or cfg.lr <= 0:
            raise ConfigError("need opt.epochs >= 0, opt.batch >= 1 and opt.lr > 0")
        return cfg

    def validate(self):
        """Build every derived object once so bad values surface before any work starts."""
        self.grid()
        self.mix()
        self.ic_params()
        self.arch()
        self.train_config()
        for key in ("data.count", "data.val_count", "data.test_count", "data.T"):
            if self.int(key) < 1:
                raise ConfigError(f"{key} must be positive")
        if self.float("data.dt") <= 0:
            raise ConfigError("data.dt must be positive")
        self.optional_float("data.dt_solver")
        return self

    def dataset(self, split, threads=1, dt=None):
        """Simulate one split; the test split always draws all five families."""
        count = {"train": "data.count", "val": "data.val_count", "test": "data.test_count"}[split]
        return generate_dataset(
            self.pde(),
            "test" if split == "test" else self.mix(),
            self.int(count),
            self.int("data.T"),
            self.float("data.dt") if dt is None else dt,
            seed=split_seed(self.int("data.seed"), split),
            grid=self.grid(),
            ic_params=self.ic_params(),
            dt_solver=self.optional_float("data.dt_solver"),
            threads=threads,
        )

    # ---- text ---------------------------------------------------------------------------

    def resolved_text(self):
        """Every key with its effective value, sorted, in config-file syntax."""
        lines = ["# resolved configuration"]
        lines += [f"{k} = {self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"


def parse_config(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key}")
        values[key] = value
    return RunConfig(values)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def default_config_text():
    lines = []
    for key, (default, doc) in DEFAULTS.items():
        lines.append(f"# {doc}")
        lines.append(f"{key} = {default}")
    return "\n".join(lines) + "\n"


def split_seed(seed, split):
    """Deterministic per-split dataset seed derived from the run seed."""
    ids = {"train": 0, "val": 1, "test": 2}
    return int(np.random.SeedSequence([int(seed), 7, ids[split]]).generate_state(1)[0])
