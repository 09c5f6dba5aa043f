"""Minibatch Adam training with per-epoch train/validation reports."""

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import DataError, NumericError, TrainingDiverged
from ..nn import AdamState, adam_step
from ..numerics import make_rng
from .losses import LOSS_FIELDS, LossReport, LossWeights, compute_losses

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("epoch",) + LOSS_FIELDS + ("split",)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: float = 1.0  # learning rate multiplier applied after every epoch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    patience: Optional[int] = None
    eval_batch: int = 512
    weights: LossWeights = field(default_factory=LossWeights)


@dataclass
class EpochMetrics:
    epoch: int
    split: str
    report: LossReport

    def row(self):
        d = self.report.as_dict()
        return [self.epoch] + [repr(d[k]) for k in LOSS_FIELDS] + [self.split]


@dataclass
class TrainResult:
    model: object
    history: List[EpochMetrics]
    initial_val: LossReport
    best_epoch: int
    best_val: LossReport
    seconds: float = 0.0

    def final_val(self):
        vals = [m.report for m in self.history if m.split == "val"]
        return vals[-1] if vals else self.initial_val


def check_compatible(model, ds, what="dataset"):
    if ds.states.shape[2] != model.arch.n:
        raise DataError(f"{what} has width n={ds.states.shape[2]} but the model expects n={model.arch.n}")


def evaluate(model, ds, weights, batch=512):
    """Loss report over a whole dataset, accumulated in fixed-order chunks."""
    check_compatible(model, ds)
    reports, counts = [], []
    for lo in range(0, ds.count, batch):
        idx = np.arange(lo, min(lo + batch, ds.count))
        reports.append(compute_losses(model, ds.states[idx], weights, index=idx))
        counts.append(len(idx))
    return LossReport.weighted_mean(reports, counts)


def train(model, train_ds, val_ds, config=None, optimizer=None, metrics_path=None):
    """Train ``model`` in place; on return it holds the best-validation parameters.

    Batches are drawn from a permutation seeded by ``(config.seed, epoch)``, so
    a rerun with the same inputs reproduces every metric bit for bit.
    """
    config = config or TrainConfig()
    check_compatible(model, train_ds, "training set")
    check_compatible(model, val_ds, "validation set")
    weights = config.weights
    opt = optimizer or AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    params = model.parameters()
    t0 = time.perf_counter()

    initial = evaluate(model, val_ds, weights, config.eval_batch)
    best_val, best_epoch, best_state = initial, 0, model.get_state()
    history = []
    since_best = 0
    for epoch in range(1, config.epochs + 1):
        rng = make_rng(config.seed, 2, epoch)
        order = rng.permutation(train_ds.count)
        reports, counts = [], []
        for b, lo in enumerate(range(0, train_ds.count, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            try:
                rep, grads = compute_losses(model, train_ds.states[idx], weights, grad=True, rng=rng, index=idx)
                adam_step(params, grads, opt)
            except NumericError as exc:
                diag = {
                    "epoch": epoch,
                    "batch": b,
                    "trajectory": getattr(exc, "trajectory", None),
                    "last_train": reports[-1].as_dict() if reports else None,
                    "best_val": best_val.as_dict(),
                }
                raise TrainingDiverged(f"training diverged at epoch {epoch}, batch {b}: {exc}", diag) from exc
            reports.append(rep)
            counts.append(len(idx))
        train_rep = LossReport.weighted_mean(reports, counts)
        val_rep = evaluate(model, val_ds, weights, config.eval_batch)
        history += [EpochMetrics(epoch, "train", train_rep), EpochMetrics(epoch, "val", val_rep)]
        opt.lr *= config.lr_decay
        log.info("epoch %d train %.6g val %.6g", epoch, train_rep.total, val_rep.total)
        if val_rep.total < best_val.total:
            best_val, best_epoch, best_state = val_rep, epoch, model.get_state()
            since_best = 0
        else:
            since_best += 1
            if config.patience is not None and since_best >= config.patience:
                log.info("no validation improvement for %d epochs; stopping", since_best)
                break
    model.set_state(best_state)
    result = TrainResult(model, history, initial, best_epoch, best_val, time.perf_counter() - t0)
    if metrics_path is not None:
        write_metrics(metrics_path, history)
    return result


def write_metrics(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for m in history:
            w.writerow(m.row())
