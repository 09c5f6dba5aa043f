"""Dense nonsymmetric eigensolver and small matrix helpers.

Eigenvalues come from balancing, Householder reduction to upper Hessenberg
form and Francis double-shift QR with deflation. Eigenvectors are recovered by
inverse iteration on the original matrix.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConvergenceError

EPS = np.finfo(float).eps
MAX_ORDER = 256


@dataclass
class EigenPairs:
    values: np.ndarray
    vectors: Optional[np.ndarray] = None

    def residuals(self, a):
        """``||A v - lambda v||_2 / (||A||_F ||v||_2)`` for every pair."""
        a = np.asarray(a, dtype=float)
        r = a @ self.vectors - self.vectors * self.values
        return np.linalg.norm(r, axis=0) / (
            max(np.linalg.norm(a), np.finfo(float).tiny) * np.linalg.norm(self.vectors, axis=0)
        )


def balance(a, radix=2.0):
    """Diagonal similarity scaling (Parlett-Reinsch); returns (B, d) with B = D^-1 A D."""
    b = np.array(a, dtype=float)
    n = b.shape[0]
    d = np.ones(n)
    sq = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(b[:, i]).sum() - abs(b[i, i])
            r = np.abs(b[i, :]).sum() - abs(b[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sq
            g = r * radix
            while c > g:
                f /= radix
                c /= sq
            if (c + r) / f < 0.95 * s:
                done = False
                d[i] *= f
                b[i, :] /= f
                b[:, i] *= f
    return b, d


def _house(x):
    """Householder vector v (v[0] = 1) and beta with (I - beta v v^T) x = alpha e1."""
    x0 = float(x[0])
    tail = [float(t) for t in x[1:]]
    sigma = sum(t * t for t in tail)
    if sigma == 0.0:
        return np.array([1.0] + [0.0] * len(tail)), 0.0
    mu = math.sqrt(x0 * x0 + sigma)
    v0 = x0 - mu if x0 <= 0 else -sigma / (x0 + mu)
    beta = 2 * v0 * v0 / (sigma + v0 * v0)
    return np.array([1.0] + [t / v0 for t in tail]), beta


def hessenberg(a):
    """Reduce to upper Hessenberg form by Householder similarity transforms."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        if not np.any(x[1:]):
            continue
        v, beta = _house(x)
        h[k + 1:, k:] -= beta * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= beta * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]]."""
    p = 0.5 * (a - d)
    disc = p * p + b * c
    if disc >= 0:
        z = p + np.copysign(np.sqrt(disc), p)
        l1 = d + z
        l2 = d - b * c / z if z != 0 else d
        return complex(l1), complex(l2)
    mid = 0.5 * (a + d)
    im = np.sqrt(-disc)
    return complex(mid, im), complex(mid, -im)


def _francis_step(h, s, t):
    """One implicit double-shift QR sweep on the active block ``h`` (a view)."""
    p = h.shape[0]
    x = h[0, 0] * h[0, 0] + h[0, 1] * h[1, 0] - s * h[0, 0] + t
    y = h[1, 0] * (h[0, 0] + h[1, 1] - s)
    z = h[1, 0] * h[2, 1]
    for k in range(p - 2):
        v, beta = _house([x, y, z])
        if beta != 0.0:
            q = max(k - 1, 0)
            blk = h[k:k + 3, q:]
            blk -= (beta * v)[:, None] * (v @ blk)
            r = min(k + 4, p)
            blk = h[:r, k:k + 3]
            blk -= (blk @ v)[:, None] * (beta * v)
        x = h[k + 1, k]
        y = h[k + 2, k]
        if k < p - 3:
            z = h[k + 3, k]
    v, beta = _house([x, y])
    if beta != 0.0:
        blk = h[p - 2:, p - 3:]
        blk -= beta * np.outer(v, v @ blk)
        blk = h[:, p - 2:]
        blk -= beta * np.outer(blk @ v, v)


def hessenberg_eigvals(h, max_iter=None):
    """Eigenvalues of an upper Hessenberg matrix (modified in place)."""
    n = h.shape[0]
    max_iter = 100 * n if max_iter is None else max_iter
    vals = np.zeros(n, dtype=complex)
    norm = np.abs(h).sum() or 1.0
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if scale == 0.0:
                scale = norm
            if abs(h[lo, lo - 1]) <= EPS * scale:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            vals[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if lo == hi - 1:
            vals[hi - 1], vals[hi] = _eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            hi -= 2
            its = 0
            continue
        if total >= max_iter:
            raise ConvergenceError(
                f"QR iteration did not converge after {total} sweeps; "
                f"stuck on submatrix rows/cols {lo}..{hi}",
                block=(lo, hi),
            )
        its += 1
        total += 1
        blk = h[lo:hi + 1, lo:hi + 1]
        if its % 10 == 0:
            w = abs(blk[-1, -2]) + abs(blk[-2, -3])
            s, t = 1.5 * w, w * w
        else:
            s = blk[-2, -2] + blk[-1, -1]
            t = blk[-2, -2] * blk[-1, -1] - blk[-2, -1] * blk[-1, -2]
        _francis_step(blk, s, t)
    return vals


def _inverse_iteration(a, lam, norm, start, iters=3, against=()):
    """Eigenvector for ``lam``; ``against`` holds vectors already found for the same eigenvalue."""
    n = a.shape[0]
    dtype = float if lam.imag == 0 else complex
    shift = lam.real if lam.imag == 0 else lam
    m = a.astype(dtype) - shift * np.eye(n)
    delta = max(norm, 1.0) * EPS * 10
    basis = [q.real if dtype is float else q for q in against]

    def project(v):
        for q in basis:
            v = v - q * (np.vdot(q, v) / np.vdot(q, q))
        return v

    v = project(start.astype(dtype))
    for attempt in range(8):
        try:
            for _ in range(iters):
                v = project(np.linalg.solve(m, v))
                v /= np.linalg.norm(v)
            if np.all(np.isfinite(v)):
                return v
        except np.linalg.LinAlgError:
            pass
        m = m - delta * np.eye(n)
        delta *= 10
        v = project(start.astype(dtype))
    raise ConvergenceError(f"inverse iteration failed for eigenvalue {lam}")


def _normalize_phase(v):
    v = v / np.linalg.norm(v)
    k = np.argmax(np.abs(v))
    return v * (abs(v[k]) / v[k])


def eig_dense(a, vectors=True):
    """All eigenvalues (and unit-norm right eigenvectors) of a real square matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"matrix order must be in 1..{MAX_ORDER}, got {n}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    b, _ = balance(a)
    vals = hessenberg_eigvals(hessenberg(b))
    if not vectors:
        return EigenPairs(vals)
    norm = np.linalg.norm(a)
    start = np.cos(np.arange(1, n + 1) * 1.618) + 0.5
    vecs = np.zeros((n, n), dtype=complex)
    done = np.zeros(n, dtype=bool)
    same = 1e3 * EPS * max(norm, 1.0)
    for i, lam in enumerate(vals):
        if done[i]:
            continue
        # repeated eigenvalues: keep each new vector independent of its cluster
        cluster = [vecs[:, j] for j in range(n) if done[j] and abs(vals[j] - lam) <= same]
        v = _inverse_iteration(a, lam, norm, start, against=cluster)
        if cluster and np.linalg.norm(a @ v - lam * v) > 1e-8 * max(norm, 1.0):
            # defective eigenvalue: no independent eigenvector exists
            v = _inverse_iteration(a, lam, norm, start)
        v = _normalize_phase(v)
        vecs[:, i] = v
        done[i] = True
        if lam.imag != 0:
            # pair the conjugate partner explicitly
            partner = [j for j in range(n) if not done[j] and vals[j] == np.conj(lam)]
            if partner:
                vecs[:, partner[0]] = np.conj(v)
                done[partner[0]] = True
    return EigenPairs(vals, vecs)


def matpow(k, p):
    """``K**p`` by repeated multiplication; diagonal inputs given as 1-D vectors stay 1-D."""
    k = np.asarray(k, dtype=float)
    if p < 0 or int(p) != p:
        raise ValueError(f"power must be a nonnegative integer, got {p}")
    if k.ndim == 1:
        out = np.ones_like(k)
        for _ in range(int(p)):
            out = out * k
        return out
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {k.shape}")
    out = np.eye(k.shape[0])
    for _ in range(int(p)):
        out = out @ k
    return out
