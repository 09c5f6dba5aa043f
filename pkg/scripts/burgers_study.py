"""Burgers desk study: train on mixes 1 and 3 with and without the skip connection.

Writes ablation.csv (per-class test errors for all four cells) and prints the
square-wave and sine comparisons.

    python scripts/burgers_study.py --out runs/burgers
"""

import argparse
import os
from pathlib import Path

from koopman_pde import analysis
from koopman_pde.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "burgers_study.cfg"))
    ap.add_argument("--out", default="runs/burgers")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    cfg = load_config(args.config).validate()
    with open(os.path.join(args.out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(cfg.resolved_text())
    datasets = {}
    for mix in cfg.get("ablation.mixes").split(","):
        cfg.set("data.mix", mix.strip())
        datasets[cfg.mix()] = (cfg.dataset("train", args.threads), cfg.dataset("val", args.threads))
    test = cfg.dataset("test", args.threads)
    tcfg = cfg.train_config()
    horizons = cfg.ints("eval.horizons")
    cells = analysis.ablation_study(datasets, cfg.arch(), test, horizons, tcfg, seed=tcfg.seed, keep_models=True)
    analysis.write_ablation(os.path.join(args.out, "ablation.csv"), cells)

    for c in cells:
        c.model.save(os.path.join(args.out, f"mix{c.mix}_{c.variant}.kpm"), extra={"dt": test.dt})
        if c.errors is None:
            print(f"mix {c.mix} {c.variant:13s} {c.status}")
            continue
        e = c.errors
        print(
            f"mix {c.mix} {c.variant:13s} val {c.val_total:.5f}  square {e.error('square'):.4f}  "
            f"sine@{horizons[-1]} {e.error('sine', horizons[-1]):.4f}"
        )


if __name__ == "__main__":
    main()
