"""Five-term training objective and its gradient.

With ``A = (chi + I) u``, ``phi = psi o (chi + I)`` and ``phi_inv = (zeta + I) o psi_inv``:

* loss1: reconstruction ``u_k`` vs ``phi_inv(phi(u_k))``
* loss2: prediction ``u_{k+p}`` vs ``phi_inv(K^p phi(u_k))``
* loss3: latent linearity ``phi(u_{k+p})`` vs ``K^p phi(u_k)``
* loss4: outer autoencoder ``u_k`` vs ``(zeta + I)(A_k)``
* loss5: inner autoencoder ``A_k`` vs ``psi_inv(psi(A_k))``

Every term is a mean squared error over batch, time and the vector entries;
losses 2 and 3 first average each horizon ``p`` separately and then average
those per-horizon errors uniformly over ``p = 1..P``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, NumericError

LOSS_FIELDS = ("loss1", "loss2", "loss3", "loss4", "loss5", "l2_term", "total")


@dataclass
class LossWeights:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    w4: float = 1.0
    w5: float = 1.0
    l2: float = 1e-8
    P: Optional[int] = None  # None: T - 1
    starts: Optional[int] = None  # None: every start k; m: a subset of m starts

    def __post_init__(self):
        ws = self.as_tuple()
        if any(w < 0 for w in ws) or self.l2 < 0:
            raise ConfigError("loss weights must be nonnegative")
        if not any(w > 0 for w in ws):
            raise ConfigError("at least one loss weight must be positive")
        if self.P is not None and self.P < 1:
            raise ConfigError(f"prediction horizon P must be >= 1, got {self.P}")
        if self.starts is not None and self.starts < 1:
            raise ConfigError(f"starts must be >= 1, got {self.starts}")

    def as_tuple(self):
        return (self.w1, self.w2, self.w3, self.w4, self.w5)

    def horizon(self, T):
        P = T - 1 if self.P is None else self.P
        if P > T - 1:
            raise ConfigError(f"horizon P={P} exceeds T-1={T - 1}")
        return P


@dataclass
class LossReport:
    loss1: float
    loss2: float
    loss3: float
    loss4: float
    loss5: float
    l2_term: float
    total: float

    def as_dict(self):
        return {k: getattr(self, k) for k in LOSS_FIELDS}

    @classmethod
    def weighted_mean(cls, reports, counts):
        counts = np.asarray(counts, dtype=float)
        vals = {k: float(np.dot([getattr(r, k) for r in reports], counts) / counts.sum()) for k in LOSS_FIELDS}
        return cls(**vals)


def choose_starts(T, P, m, rng=None):
    """Start indices ``k`` used for losses 2 and 3.

    ``m=None`` keeps every start ``0..T-2``. Otherwise start 0 is always kept,
    so that every horizon up to ``P`` is represented, and the remaining
    ``m - 1`` starts are drawn at random (``rng`` given) or spread evenly.
    """
    last = T - 2
    if m is None or m > last:
        return np.arange(last + 1)
    if rng is None:
        return np.unique(np.round(np.linspace(0, last, m)).astype(int))
    rest = rng.choice(np.arange(1, last + 1), size=m - 1, replace=False) if m > 1 else []
    return np.sort(np.concatenate(([0], rest))).astype(int)


def _net_forward(net, x):
    if net is None:
        return x, None
    return net.forward(x)


def _add_grads(total, prefix, grads):
    for k, v in grads.items():
        total[f"{prefix}.{k}"] = v


def _first_bad_trajectory(*arrays):
    """Index of the first trajectory (axis 0) holding a non-finite value."""
    bad = None
    for arr in arrays:
        rows = np.flatnonzero(~np.all(np.isfinite(arr.reshape(arr.shape[0], -1)), axis=1))
        if rows.size and (bad is None or rows[0] < bad):
            bad = int(rows[0])
    return bad


def compute_losses(model, trajs, weights=None, grad=False, rng=None, index=None):
    """Loss report for a batch ``trajs`` of shape ``(B, T, n)``.

    With ``grad=True`` returns ``(report, grads)`` where ``grads`` matches
    ``model.parameters()``. ``rng`` randomizes the start subset when
    ``weights.starts`` is set. ``index`` maps batch rows to dataset indices
    for error messages.
    """
    # overflow is reported as NumericError (non-finite total) or by Adam (non-finite gradient)
    with np.errstate(over="ignore", invalid="ignore"):
        return _compute_losses(model, trajs, weights or LossWeights(), grad, rng, index)


def _compute_losses(model, trajs, weights, grad, rng, index):
    X = np.asarray(trajs, dtype=float)
    if X.ndim != 3 or X.shape[2] != model.arch.n:
        raise ValueError(f"expected trajectories of shape (B, T, {model.arch.n}), got {X.shape}")
    B, T, n = X.shape
    r = model.arch.r
    P = weights.horizon(T)
    w1, w2, w3, w4, w5 = weights.as_tuple()
    S = choose_starts(T, P, weights.starts, rng)
    ns = len(S)

    # ---- forward ------------------------------------------------------------------
    Xf = X.reshape(B * T, n)
    A, c_chi = _net_forward(model.chi, Xf)
    Y, c_psi = model.psi.forward(A)
    Yt = Y.reshape(B, T, r)

    Z = [Yt[:, S]]
    for _ in range(P):
        Z.append(model.advance(Z[-1]))
    # valid[p] selects starts with S + p <= T - 1
    valid = [S + p <= T - 1 for p in range(P + 1)]
    counts = np.array([int(v.sum()) for v in valid])
    horizons = [p for p in range(1, P + 1) if counts[p]]
    P_eff = len(horizons)

    z_pred = np.concatenate([Z[p][:, valid[p]].reshape(-1, r) for p in horizons], axis=0)
    inv_in = np.concatenate([Y, z_pred], axis=0)
    inv_out, c_inv = model.psi_inv.forward(inv_in)
    NBT = B * T
    Ahat = inv_out[:NBT]
    zeta_in = np.concatenate([inv_out, A], axis=0)  # [Ahat; Ahat_pred; A]
    zeta_out, c_zeta = _net_forward(model.zeta, zeta_in)
    U1 = zeta_out[:NBT]
    Upred = zeta_out[NBT:NBT + len(z_pred)]
    U4 = zeta_out[NBT + len(z_pred):]

    targets = np.concatenate([X[:, S[valid[p]] + p].reshape(-1, n) for p in horizons], axis=0)
    latent_targets = np.concatenate([Yt[:, S[valid[p]] + p].reshape(-1, r) for p in horizons], axis=0)

    d1 = U1 - Xf
    d4 = U4 - Xf
    d5 = A - Ahat
    d2 = Upred - targets
    d3 = latent_targets - z_pred
    # per-row normalization for losses 2/3: 1 / (P_eff * rows_at_p)
    row_scale = np.concatenate([np.full(B * counts[p], 1.0 / (P_eff * B * counts[p])) for p in horizons])

    loss1 = float(np.mean(d1 * d1))
    loss4 = float(np.mean(d4 * d4))
    loss5 = float(np.mean(d5 * d5))
    loss2 = float(row_scale @ np.sum(d2 * d2, axis=1)) / n
    loss3 = float(row_scale @ np.sum(d3 * d3, axis=1)) / r
    params = model.parameters()
    wnames = model.weight_names()
    l2_term = float(sum(np.sum(params[k] ** 2) for k in wnames))
    total = w1 * loss1 + w2 * loss2 + w3 * loss3 + w4 * loss4 + w5 * loss5 + weights.l2 * l2_term
    report = LossReport(loss1, loss2, loss3, loss4, loss5, l2_term, total)

    if not np.isfinite(total):
        # rebuild per-trajectory views of every intermediate to locate the culprit
        pair_rows = np.concatenate([np.repeat(np.arange(B), counts[p]) for p in horizons])
        per_traj = [U1.reshape(B, T, n), U4.reshape(B, T, n), Yt, X]
        bad_pairs = pair_rows[~np.all(np.isfinite(Upred), axis=1)]
        bad = _first_bad_trajectory(*per_traj)
        if bad_pairs.size:
            bad = int(bad_pairs.min()) if bad is None else min(bad, int(bad_pairs.min()))
        if bad is None:
            bad = 0
        idx = int(index[bad]) if index is not None else bad
        err = NumericError(f"non-finite loss (total={total}) originating in trajectory {idx}")
        err.trajectory = idx
        raise err
    if not grad:
        return report

    # ---- backward -----------------------------------------------------------------
    grads = {}
    g_zeta = np.concatenate(
        [
            (2.0 * w1 / d1.size) * d1,
            (2.0 * w2 / n) * row_scale[:, None] * d2,
            (2.0 * w4 / d4.size) * d4,
        ],
        axis=0,
    )
    if model.zeta is not None:
        gz, g_zeta_in = model.zeta.backward(c_zeta, g_zeta)
        _add_grads(grads, "zeta", gz)
    else:
        g_zeta_in = g_zeta
    g_inv_out = g_zeta_in[:NBT + len(z_pred)].copy()
    gA = g_zeta_in[NBT + len(z_pred):].copy()
    g5 = (2.0 * w5 / d5.size) * d5
    gA += g5
    g_inv_out[:NBT] -= g5

    ginv, g_inv_in = model.psi_inv.backward(c_inv, g_inv_out)
    grads["psi_inv.W"] = ginv["W"]
    grads["psi_inv.b"] = ginv["b"]
    gY = g_inv_in[:NBT].reshape(B, T, r).copy()
    gz_pred = g_inv_in[NBT:]
    g3 = (2.0 * w3 / r) * row_scale[:, None] * d3
    gz_pred = gz_pred - g3

    # scatter pair gradients back onto Z_p and the latent targets
    G = [np.zeros((B, ns, r)) for _ in range(P + 1)]
    off = 0
    for p in horizons:
        cnt = B * counts[p]
        G[p][:, valid[p]] = gz_pred[off:off + cnt].reshape(B, counts[p], r)
        gY[:, S[valid[p]] + p] += g3[off:off + cnt].reshape(B, counts[p], r)
        off += cnt

    gK = np.zeros_like(model.K)
    for p in range(P, 0, -1):
        if model.diagonal:
            gK += np.einsum("bsi,bsi->i", G[p], Z[p - 1])
            G[p - 1] += G[p] * model.K
        else:
            gK += np.einsum("bsi,bsj->ij", G[p], Z[p - 1])
            G[p - 1] += G[p] @ model.K
    gY[:, S] += G[0]
    grads["K"] = gK

    gpsi, gA_psi = model.psi.backward(c_psi, gY.reshape(B * T, r))
    grads["psi.W"] = gpsi["W"]
    grads["psi.b"] = gpsi["b"]
    gA += gA_psi
    if model.chi is not None:
        gc, _ = model.chi.backward(c_chi, gA)
        _add_grads(grads, "chi", gc)

    for k in wnames:
        grads[k] = grads[k] + 2.0 * weights.l2 * params[k]
    return report, {k: grads[k] for k in params}
