"""Trajectory datasets and the KPD1 file format.

KPD1 layout (little-endian)::

    b"KPD1" | u32 version=1 | u32 n | u32 T | u32 M | f64 dt | f64 a | f64 b
    | u32 pde tag | u32[M] initial-condition tags | f64[M*T*n] states

States are ordered trajectory-major, then time, with the grid index fastest.
"""

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DataError, SolverDivergence
from ..numerics import make_rng
from .grid import Grid1D
from .ics import IC_KINDS, IC_TAGS, ICParams, sample_ics
from .solvers import (
    BURGERS_DOMAIN,
    HEAT_DOMAIN,
    KS_DOMAIN,
    Trajectory,
    burgers_operators,
    heat_solve,
    integrate,
    ks_operators,
)

log = logging.getLogger(__name__)

MAGIC = b"KPD1"
VERSION = 1


@dataclass(frozen=True)
class Heat:
    tag = 0
    name = "heat"
    domain = HEAT_DOMAIN
    substeps = 1


@dataclass(frozen=True)
class Burgers:
    epsilon: float = 10.0
    mu: float = 1.0
    tag = 1
    name = "burgers"
    domain = BURGERS_DOMAIN
    substeps = 10

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"Burgers diffusion mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class KS:
    tag = 2
    name = "ks"
    domain = KS_DOMAIN
    substeps = 50


PDE_BY_TAG = {0: Heat, 1: Burgers, 2: KS}
PDE_BY_NAME = {"heat": Heat, "burgers": Burgers, "ks": KS}

MIXES = {
    "1": ("white_noise",),
    "2": ("white_noise", "sine"),
    "3": ("white_noise", "sine", "square"),
    "test": IC_KINDS,
}


def mix_kinds(mix):
    key = str(mix)
    if key not in MIXES:
        raise ValueError(f"unknown mix {mix!r}; expected one of {sorted(MIXES)}")
    return MIXES[key]


@dataclass
class Dataset:
    grid: Grid1D
    dt: float
    states: np.ndarray  # (M, T, n)
    pde_tag: int
    ic_tags: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.ic_tags = np.asarray(self.ic_tags, dtype=np.int64)
        if self.states.ndim != 3 or self.states.shape[0] == 0:
            raise DataError(f"dataset needs states of shape (M > 0, T, n), got {self.states.shape}")
        if self.states.shape[2] != self.grid.n:
            raise DataError("dataset width does not match its grid")
        if self.ic_tags.shape != (self.states.shape[0],):
            raise DataError("need one initial-condition tag per trajectory")

    @property
    def count(self):
        return self.states.shape[0]

    @property
    def T(self):
        return self.states.shape[1]

    def trajectory(self, i):
        return Trajectory(self.grid, self.dt, self.states[i])

    @property
    def trajectories(self):
        return [self.trajectory(i) for i in range(self.count)]

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.grid, self.dt, self.states[idx], self.pde_tag, self.ic_tags[idx], dict(self.provenance))

    def class_counts(self):
        return {IC_KINDS[t]: int(np.sum(self.ic_tags == t)) for t in np.unique(self.ic_tags)}


def split_counts(count, n_classes):
    base, extra = divmod(count, n_classes)
    return [base + (i < extra) for i in range(n_classes)]


def _solve_rows(pde, u0, grid, T, dt, dt_solver, threads):
    """States ``(M, T, n)`` plus the divergence step per row (-1 if fine)."""
    if isinstance(pde, Heat):
        states = np.stack([heat_solve(u0, t * dt, grid) for t in range(T)], axis=1)
        return states, np.full(len(u0), -1)
    save_every = int(round(dt / dt_solver))
    if save_every < 1 or abs(save_every * dt_solver - dt) > 1e-9 * dt:
        raise ValueError(f"dt={dt} is not an integer multiple of dt_solver={dt_solver}")
    ops = burgers_operators(grid, pde.epsilon, pde.mu) if isinstance(pde, Burgers) else ks_operators(grid)
    steps = save_every * (T - 1)

    def run(rows):
        return integrate(rows, grid, *ops, dt_solver, steps, save_every)

    if threads <= 1 or len(u0) < 2 * threads:
        return run(u0)
    chunks = np.array_split(u0, threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(run, chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def generate_dataset(
    pde,
    mix,
    count,
    T,
    dt,
    seed,
    n=128,
    grid=None,
    ic_params=None,
    dt_solver=None,
    threads=1,
    max_retries=5,
):
    """Simulate ``count`` trajectories of ``T`` snapshots spaced ``dt`` apart.

    Trajectories are split as evenly as possible over the mix's families,
    in contiguous blocks. Each family draws its parameters from its own RNG
    stream, so results do not depend on ``threads``. Rows whose solver run
    diverges are redrawn from a per-trajectory stream, at most ``max_retries``
    times.
    """
    if count < 1 or T < 2:
        raise ValueError("need count >= 1 and T >= 2")
    grid = grid or Grid1D.for_domain(n, pde.domain)
    ic_params = ic_params or ICParams()
    kinds = mix_kinds(mix)
    dt_solver = dt / pde.substeps if dt_solver is None else dt_solver
    tags = np.concatenate([np.full(c, IC_TAGS[k]) for k, c in zip(kinds, split_counts(count, len(kinds)))])
    u0 = np.empty((count, grid.n))
    for kind in kinds:
        rows = np.flatnonzero(tags == IC_TAGS[kind])
        if rows.size:
            u0[rows] = sample_ics(kind, grid, rows.size, make_rng(seed, 0, IC_TAGS[kind]), ic_params)
    states, diverged = _solve_rows(pde, u0, grid, T, dt, dt_solver, threads)
    retries = 0
    for attempt in range(1, max_retries + 1):
        bad = np.flatnonzero(diverged >= 0)
        if bad.size == 0:
            break
        log.warning("resampling %d diverged trajectories (attempt %d)", bad.size, attempt)
        retries += bad.size
        for i in bad:
            u0[i] = sample_ics(IC_KINDS[tags[i]], grid, 1, make_rng(seed, 1, i, attempt), ic_params)[0]
        states[bad], diverged[bad] = _solve_rows(pde, u0[bad], grid, T, dt, dt_solver, 1)
    if np.any(diverged >= 0):
        bad = np.flatnonzero(diverged >= 0)
        raise SolverDivergence(
            f"{bad.size} trajectories still diverge after {max_retries} retries (first: {bad[0]})",
            rows=bad.tolist(),
        )
    provenance = {
        "pde": pde.name,
        **{k: v for k, v in asdict(pde).items()},
        "mix": str(mix),
        "count": count,
        "T": T,
        "dt": dt,
        "dt_solver": dt_solver,
        "seed": seed,
        "n": grid.n,
        "domain": [grid.a, grid.b],
        "ic_params": asdict(ic_params),
        "retries": retries,
    }
    return Dataset(grid, dt, states, pde.tag, tags, provenance)


# ---- KPD1 I/O ---------------------------------------------------------------------


def write_dataset(path, ds):
    m, t, n = ds.states.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", VERSION, n, t, m))
        fh.write(struct.pack("<ddd", ds.dt, ds.grid.a, ds.grid.b))
        fh.write(struct.pack("<I", ds.pde_tag))
        fh.write(np.asarray(ds.ic_tags, dtype="<u4").tobytes())
        fh.write(np.ascontiguousarray(ds.states, dtype="<f8").tobytes())


def read_dataset(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a KPD1 dataset")
    head = struct.calcsize("<IIII") + struct.calcsize("<ddd") + 4
    if len(data) < 4 + head:
        raise DataError(f"{path}: truncated header")
    version, n, t, m = struct.unpack_from("<IIII", data, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported dataset version {version}")
    dt, a, b = struct.unpack_from("<ddd", data, 20)
    (pde_tag,) = struct.unpack_from("<I", data, 44)
    off = 48
    expected = off + 4 * m + 8 * m * t * n
    if len(data) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(data)}")
    tags = np.frombuffer(data, dtype="<u4", count=m, offset=off).astype(np.int64)
    states = np.frombuffer(data, dtype="<f8", count=m * t * n, offset=off + 4 * m).reshape(m, t, n)
    try:
        grid = Grid1D(n, a, b)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return Dataset(grid, dt, states.astype(float), pde_tag, tags)
