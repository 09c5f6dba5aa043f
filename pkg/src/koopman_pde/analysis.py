"""Diagnostics for trained models: spectra, prediction errors, coordinate comparisons and sweeps.

Every report can be written as UTF-8 CSV; the column layout of each file is
given by the ``*_COLUMNS`` constant next to its writer.
"""

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError, DataError, KoopmanPDEError
from .koopman import KoopmanModel, train
from .numerics import eig_dense, make_rng, rfft
from .pde import IC_KINDS, colehopf_encode

log = logging.getLogger(__name__)

REL_FLOOR = 1e-12


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


# ---- spectrum ---------------------------------------------------------------------------


@dataclass
class EigenReport:
    eigenvalues: np.ndarray  # complex, ordered like ``transformed``
    transformed: np.ndarray  # -log|lambda| / dt, ascending
    phases: np.ndarray  # arg(lambda)
    eigenvectors: np.ndarray  # columns, unit norm
    eigenfunctions: np.ndarray  # (r, n) decoded, normalized
    dt: float


SPECTRUM_COLUMNS = ("index", "re", "im", "modulus", "transformed", "phase")


def normalize_eigenfunction(f):
    """Scale to unit max-amplitude, positive at the leftmost point where that maximum is attained."""
    f = np.asarray(f, dtype=float)
    peak = np.max(np.abs(f))
    if peak == 0:
        return f.copy()
    k = int(np.argmax(np.abs(f)))
    return f / (peak if f[k] > 0 else -peak)


def koopman_spectrum(model, dt):
    """Eigen-decomposition of the realized K with decoded eigenfunctions.

    Each eigenfunction is ``decode(Re v)`` for the unit-norm eigenvector ``v``;
    conjugate partners therefore share their eigenfunction.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    pairs = eig_dense(model.K_matrix())
    mod = np.abs(pairs.values)
    with np.errstate(divide="ignore"):
        transformed = -np.log(mod) / dt
    order = np.argsort(transformed, kind="stable")
    vals = pairs.values[order]
    vecs = pairs.vectors[:, order]
    funcs = model.decode(vecs.real.T)
    funcs = np.array([normalize_eigenfunction(f) for f in funcs])
    return EigenReport(vals, transformed[order], np.angle(vals), vecs, funcs, dt)


def write_spectrum(path, report):
    rows = [
        [i, _fmt(v.real), _fmt(v.imag), _fmt(abs(v)), _fmt(t), _fmt(ph)]
        for i, (v, t, ph) in enumerate(zip(report.eigenvalues, report.transformed, report.phases))
    ]
    _write_csv(path, SPECTRUM_COLUMNS, rows)


def write_eigenfunctions(path, report, x):
    header = ["x"] + [f"phi{i}" for i in range(len(report.eigenfunctions))]
    rows = [[_fmt(xj)] + [_fmt(f[j]) for f in report.eigenfunctions] for j, xj in enumerate(x)]
    _write_csv(path, header, rows)


def heat_spectrum_targets(r):
    """Exact transformed heat spectrum for the lowest ``r`` real Fourier modes: 0, 1, 1, 4, 4, ..."""
    return np.array([((i + 1) // 2) ** 2 for i in range(r)], dtype=float)


# ---- prediction error -----------------------------------------------------------------------


@dataclass
class ErrorReport:
    horizons: List[int]
    rel: np.ndarray  # (M, H) per-trajectory relative L2 error
    ic_tags: np.ndarray
    per_class_horizon: Dict[str, np.ndarray] = field(default_factory=dict)
    per_class: Dict[str, float] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)

    def error(self, kind, horizon=None):
        if horizon is None:
            return self.per_class[kind]
        return float(self.per_class_horizon[kind][self.horizons.index(horizon)])


ERROR_COLUMNS = ("ic_class", "horizon", "rms_rel_error", "count")


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def prediction_error(model, ds, horizons, batch=512):
    """Per-class RMS of per-trajectory relative L2 prediction errors.

    ``model`` is a :class:`KoopmanModel` or any callable ``f(u0, p) -> (M, n)``
    predicting states ``p`` steps ahead of the rows of ``u0``.
    """
    horizons = sorted({int(h) for h in horizons})
    if not horizons:
        raise ConfigError("need at least one horizon")
    if horizons[0] < 0 or horizons[-1] > ds.T - 1:
        raise ConfigError(f"horizons must lie in 0..{ds.T - 1}, got {horizons[0]}..{horizons[-1]}")
    hmax = horizons[-1]
    rel = np.empty((ds.count, len(horizons)))
    for lo in range(0, ds.count, batch):
        sl = slice(lo, min(lo + batch, ds.count))
        u0 = ds.states[sl, 0]
        if isinstance(model, KoopmanModel):
            preds = model.predict_all(u0, hmax)[:, horizons]
        else:
            preds = np.stack([model(u0, p) for p in horizons], axis=1)
        exact = ds.states[sl][:, horizons]
        num = np.linalg.norm(preds - exact, axis=2)
        den = np.maximum(np.linalg.norm(exact, axis=2), REL_FLOOR)
        rel[sl] = num / den
    report = ErrorReport(horizons, rel, ds.ic_tags.copy())
    for tag in np.unique(ds.ic_tags):
        kind = IC_KINDS[tag]
        rows = rel[ds.ic_tags == tag]
        report.per_class_horizon[kind] = np.sqrt(np.mean(rows**2, axis=0))
        report.per_class[kind] = _rms(rows)
        report.counts[kind] = int(rows.shape[0])
    return report


def error_rows(report, prefix=()):
    rows = []
    for kind in report.per_class:
        for h, v in zip(report.horizons, report.per_class_horizon[kind]):
            rows.append(list(prefix) + [kind, h, _fmt(v), report.counts[kind]])
        rows.append(list(prefix) + [kind, "all", _fmt(report.per_class[kind]), report.counts[kind]])
    return rows


def write_errors(path, report):
    _write_csv(path, ERROR_COLUMNS, error_rows(report))


# ---- coordinate comparisons ----------------------------------------------------------------


def real_dft_coordinates(u, r):
    """First ``r`` real Fourier coordinates ``[c0, Re c1, Im c1, Re c2, ...] / n``."""
    u = np.asarray(u, dtype=float)
    c = rfft(u) / u.shape[-1]
    coords = [c[..., 0].real]
    for m in range(1, c.shape[-1]):
        coords += [c[..., m].real, c[..., m].imag]
    return np.stack(coords, axis=-1)[..., :r]


def encoder_vs_dft(model, u):
    """``(2, r)`` array: the encoded coordinates of ``u`` over its lowest ``r`` DFT coordinates."""
    u = np.asarray(u, dtype=float)
    return np.stack([model.encode(u[None])[0], real_dft_coordinates(u, model.arch.r)])


@dataclass
class ColeHopfReport:
    x: np.ndarray
    u: np.ndarray
    outer: np.ndarray  # (chi + I) u
    colehopf: Optional[np.ndarray]  # exp(-eps/(2 mu) int_0^x u); None for nonzero-mean u
    note: str = ""


def compare_colehopf(model, u, epsilon, mu, grid):
    """Cole-Hopf variable next to the learned outer encoding of ``u`` on the same grid."""
    u = np.asarray(u, dtype=float)
    outer = model.outer_encode(u[None])[0]
    try:
        v = colehopf_encode(u, epsilon, mu, grid)
        note = ""
    except DataError as exc:
        v, note = None, f"Cole-Hopf column omitted: {exc}"
    return ColeHopfReport(grid.x.copy(), u, outer, v, note)


def write_colehopf(path, report):
    header = ["x", "u", "outer_encoded"] + (["colehopf"] if report.colehopf is not None else [])
    rows = []
    for j in range(len(report.x)):
        row = [_fmt(report.x[j]), _fmt(report.u[j]), _fmt(report.outer[j])]
        if report.colehopf is not None:
            row.append(_fmt(report.colehopf[j]))
        rows.append(row)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if report.note:
            fh.write(f"# {report.note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---- sweeps ------------------------------------------------------------------------------------


@dataclass
class SweepRow:
    rank: int
    val_total: float
    best_epoch: int
    status: str = "ok"


SWEEP_COLUMNS = ("rank", "val_total", "best_epoch", "status")


def model_for_run(arch, seed, *stream):
    return KoopmanModel(arch, rng=make_rng(seed, 3, *stream))


def rank_sweep(arch, ranks, train_ds, val_ds, config, seed=0):
    """Train one model per rank under the same budget.

    The model for rank ``r`` is initialized from ``model_for_run(arch_r, seed, r)``,
    so a single-rank sweep reproduces a direct :func:`train` call.
    """
    ranks = list(ranks)
    if not ranks:
        raise ConfigError("rank sweep needs at least one rank")
    rows = []
    for r in ranks:
        try:
            model = model_for_run(replace(arch, r=r), seed, r)
            res = train(model, train_ds, val_ds, config)
            rows.append(SweepRow(r, res.best_val.total, res.best_epoch))
        except KoopmanPDEError as exc:
            log.warning("rank %d failed: %s", r, exc)
            rows.append(SweepRow(r, float("nan"), -1, f"failed: {exc}"))
    return rows


def write_sweep(path, rows):
    _write_csv(path, SWEEP_COLUMNS, [[s.rank, _fmt(s.val_total), s.best_epoch, s.status] for s in rows])


@dataclass
class AblationCell:
    mix: str
    variant: str
    n_params: int
    val_total: float
    errors: Optional[ErrorReport]
    status: str = "ok"
    model: Optional[KoopmanModel] = None


ABLATION_COLUMNS = ("mix", "variant", "n_params", "val_total", "status") + ERROR_COLUMNS
VARIANTS = {"with-skip": True, "without-skip": False}


def ablation_study(datasets, arch, test_ds, horizons, config, seed=0, keep_models=False):
    """Train every (mix, skip variant) cell and score it on ``test_ds``.

    ``datasets`` maps a mix label to ``(train, val)``. All cells share one
    initialization stream, so the two variants differ only in the residual flag.
    """
    if not datasets:
        raise ConfigError("ablation needs at least one data mix")
    cells = []
    for mix, (train_ds, val_ds) in datasets.items():
        for variant, residual in VARIANTS.items():
            cell_arch = replace(arch, residual=residual)
            model = model_for_run(cell_arch, seed, 0)
            try:
                res = train(model, train_ds, val_ds, config)
                errs = prediction_error(model, test_ds, horizons)
                cell = AblationCell(str(mix), variant, model.n_params(), res.best_val.total, errs)
            except KoopmanPDEError as exc:
                log.warning("ablation cell (%s, %s) failed: %s", mix, variant, exc)
                cell = AblationCell(str(mix), variant, model.n_params(), float("nan"), None, f"failed: {exc}")
            if keep_models:
                cell.model = model
            cells.append(cell)
    return cells


def write_ablation(path, cells):
    rows = []
    for c in cells:
        prefix = [c.mix, c.variant, c.n_params, _fmt(c.val_total), c.status]
        if c.errors is None:
            rows.append(prefix + ["", "", "", ""])
        else:
            rows += error_rows(c.errors, prefix)
    _write_csv(path, ABLATION_COLUMNS, rows)
