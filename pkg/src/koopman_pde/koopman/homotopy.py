"""Timestep homotopy: train at increasing dt, each stage warm-started from the previous one."""

import os
import tempfile
from dataclasses import dataclass
from typing import Optional

from ..numerics import make_rng
from .model import KoopmanModel, warm_start
from .train import train


@dataclass
class HomotopyRow:
    dt: float
    start: str  # "cold" or "warm"
    val_total: float
    initial_val_total: float
    best_epoch: int
    checkpoint: Optional[str] = None


HOMOTOPY_COLUMNS = ("dt", "start", "val_total", "initial_val_total", "best_epoch")


def homotopy_chain(arch, stages, config, seed=0, workdir=None):
    """Run the chain ``stages = [(dt, train_ds, val_ds), ...]`` in the given order.

    Stage 0 trains from a fresh initialization. Every later stage is trained
    twice with the same epoch budget: warm-started from the previous stage's
    best checkpoint, and cold from the same fresh initialization as stage 0.
    Returns one :class:`HomotopyRow` per run. Checkpoints go to ``workdir``
    (a temporary directory when omitted).
    """
    if workdir is None:
        with tempfile.TemporaryDirectory() as tmp:
            rows = homotopy_chain(arch, stages, config, seed, tmp)
        for row in rows:
            row.checkpoint = None
        return rows
    rows = []
    prev_ckpt = None
    for i, (dt, train_ds, val_ds) in enumerate(stages):
        runs = ["cold"] if i == 0 else ["warm", "cold"]
        for start in runs:
            model = KoopmanModel(arch, rng=make_rng(seed, 3, 0))
            if start == "warm":
                warm_start(model, prev_ckpt)
            res = train(model, train_ds, val_ds, config)
            ckpt = os.path.join(workdir, f"stage{i}_{start}.kpm")
            model.save(ckpt, extra={"dt": dt, "start": start})
            rows.append(HomotopyRow(dt, start, res.best_val.total, res.initial_val.total, res.best_epoch, ckpt))
            if start == ("warm" if i else "cold"):
                stage_ckpt = ckpt
        prev_ckpt = stage_ckpt
    return rows
