"""Central finite-difference gradient checking."""

import numpy as np


def relative_error(analytic, numeric, floor=1e-8):
    """``max|a - n| / max(|a|, |n|, floor)`` with the maxima taken over the whole tensor."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.size == 0:
        return 0.0
    denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric)) / denom)


def numeric_gradient(f, x, h=1e-6, indices=None):
    """Central differences of scalar ``f()`` w.r.t. entries of ``x`` (perturbed in place).

    With ``indices`` given (flat positions), only those entries are evaluated
    and a 1-D array in the same order is returned.
    """
    flat = x.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    out = []
    for i in idx:
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        out.append((fp - fm) / (2 * h))
    out = np.array(out)
    return out.reshape(x.shape) if indices is None else out


def sample_indices(size, k, rng):
    return np.arange(size) if size <= k else np.sort(rng.choice(size, k, replace=False))
