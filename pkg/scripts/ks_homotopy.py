"""KS timestep homotopy: train at the first dt, then warm- and cold-start at the next.

    python scripts/ks_homotopy.py --out runs/ks
"""

import argparse
import csv
import os
from pathlib import Path

from koopman_pde.config import load_config
from koopman_pde.koopman import HOMOTOPY_COLUMNS, homotopy_chain

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "ks_homotopy.cfg"))
    ap.add_argument("--out", default="runs/ks")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    cfg = load_config(args.config).validate()
    with open(os.path.join(args.out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(cfg.resolved_text())
    stages = [
        (dt, cfg.dataset("train", args.threads, dt), cfg.dataset("val", args.threads, dt))
        for dt in cfg.floats("homotopy.dts")
    ]
    tcfg = cfg.train_config()
    rows = homotopy_chain(cfg.arch(), stages, tcfg, seed=tcfg.seed, workdir=args.out)
    with open(os.path.join(args.out, "homotopy.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HOMOTOPY_COLUMNS)
        for r in rows:
            w.writerow([repr(r.dt), r.start, repr(r.val_total), repr(r.initial_val_total), r.best_epoch])
            print(f"dt {r.dt:<6} {r.start:4s} initial val {r.initial_val_total:.5f} -> {r.val_total:.5f}")


if __name__ == "__main__":
    main()
