"""Random sampling utilities.

All randomness flows through :func:`make_rng`, which builds a numpy
``Generator`` on the Philox4x64 counter-based bit generator. Philox output is
a documented function of (key, counter), so a seed plus a stream path such as
``(seed, trajectory_index, attempt)`` gives the same numbers on every platform
and independent of how work is split across threads.
"""

import numpy as np


def make_rng(seed, *stream):
    """Generator for the stream identified by ``(seed, *stream)``."""
    entropy = [int(seed)] + [int(s) for s in stream]
    if any(e < 0 for e in entropy):
        raise ValueError(f"seed and stream ids must be nonnegative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def latin_hypercube(d, m, rng):
    """``m x d`` Latin hypercube sample on [0, 1).

    Each column has exactly one point in every stratum ``[i/m, (i+1)/m)``.
    """
    if d < 1 or m < 1:
        raise ValueError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    out = np.empty((m, d))
    for j in range(d):
        strata = rng.permutation(m)
        lo = strata / m
        hi = np.nextafter((strata + 1) / m, 0.0)
        out[:, j] = np.clip((strata + rng.random(m)) / m, lo, hi)
    return out


def truncated_geometric_pmf(p, kmax):
    k = np.arange(1, kmax + 1)
    w = (1 - p) ** (k - 1) * p
    return w / w.sum()


def truncated_geometric(p, kmax, rng, size=None):
    """Draw from ``P(k) ∝ (1-p)^(k-1) p`` restricted to ``k = 1..kmax``."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    u = rng.random(size)
    mass = 1.0 - (1.0 - p) ** kmax
    k = np.ceil(np.log1p(-u * mass) / np.log1p(-p))
    k = np.clip(k, 1, kmax).astype(np.int64)
    return int(k) if size is None else k
