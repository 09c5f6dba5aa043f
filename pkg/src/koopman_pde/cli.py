"""Command-line entry point: ``koopman-pde <command> [options]``.

Every command writes into ``--out`` (created if needed) and echoes its fully
resolved configuration there as ``config.resolved`` (the config file for
commands that read one, the parsed arguments otherwise). Exit codes: 0 success, 2 config error, 3 data error,
4 numeric failure.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import analysis
from .config import default_config_text, load_config, parse_config
from .errors import ConfigError, DataError, KoopmanPDEError
from .koopman import HOMOTOPY_COLUMNS, KoopmanModel, checkpoint_extra, homotopy_chain, train, warm_start
from .nn import demo_identity, exact_identity_network
from .pde import Grid1D, InitialCondition, read_dataset, write_dataset

log = logging.getLogger("koopman_pde")


# ---- helpers ---------------------------------------------------------------------------------


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _config(args):
    cfg = load_config(args.config) if args.config else parse_config("")
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg.set(key.strip(), value)
    if args.seed is not None:
        cfg.set("data.seed", args.seed)
        cfg.set("opt.seed", args.seed)
    return cfg.validate()


def _echo_config(cfg, out):
    with open(os.path.join(out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(cfg.resolved_text())


def _echo_args(args, out):
    """Commands without a config file record their resolved arguments instead."""
    skip = {"func", "out", "verbose", "threads"}
    lines = ["# resolved arguments", f"command = {args.command}"]
    lines += [f"{k} = {v}" for k, v in sorted(vars(args).items()) if k not in skip and k != "command"]
    with open(os.path.join(out, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_dataset(path, what):
    if not os.path.exists(path):
        raise DataError(f"{what} dataset {path} does not exist")
    return read_dataset(path)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _model_meta(ds):
    return {"dt": ds.dt, "domain": [ds.grid.a, ds.grid.b], "pde_tag": int(ds.pde_tag)}


# ---- commands -----------------------------------------------------------------------------------


def cmd_datagen(args):
    cfg = _config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    splits = ["train", "val", "test"] if args.split == "all" else [args.split]
    for split in splits:
        ds = cfg.dataset(split, args.threads)
        path = os.path.join(out, f"{split}.kpd")
        write_dataset(path, ds)
        side = {"provenance": ds.provenance, "config": cfg.values, "split": split}
        with open(path + ".json", "w", encoding="utf-8") as fh:
            json.dump(side, fh, indent=1, sort_keys=True)
            fh.write("\n")
        log.info("wrote %s (%d trajectories)", path, ds.count)
    return 0


def cmd_train(args):
    cfg = _config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    train_ds = _read_dataset(cfg.get("paths.train"), "training")
    val_ds = _read_dataset(cfg.get("paths.val"), "validation")
    arch = cfg.arch()
    if train_ds.grid.n != arch.n:
        raise DataError(f"training data has n={train_ds.grid.n} but grid.n={arch.n}")
    tcfg = cfg.train_config()
    model = analysis.model_for_run(arch, tcfg.seed, 0)
    if args.warm_start:
        warm_start(model, args.warm_start)
    res = train(model, train_ds, val_ds, tcfg, metrics_path=os.path.join(out, "metrics.csv"))
    model.save(os.path.join(out, "model.kpm"), extra=_model_meta(train_ds))
    summary = {
        "best_epoch": res.best_epoch,
        "best_val": res.best_val.as_dict(),
        "initial_val": res.initial_val.as_dict(),
        "warm_start": bool(args.warm_start),
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


def _load_model(path):
    if not os.path.exists(path):
        raise DataError(f"checkpoint {path} does not exist")
    return KoopmanModel.load(path), checkpoint_extra(path)


def cmd_predict(args):
    model, meta = _load_model(args.checkpoint)
    out = _out_dir(args)
    _echo_args(args, out)
    if (args.dataset is None) == (args.ic is None):
        raise ConfigError("predict needs exactly one of --dataset or --ic")
    if args.dataset:
        ds = _read_dataset(args.dataset, "input")
        if not 0 <= args.index < ds.count:
            raise ConfigError(f"--index must be in 0..{ds.count - 1}")
        grid, u0 = ds.grid, ds.states[args.index, 0]
        exact = ds.states[args.index] if args.horizon <= ds.T - 1 else None
    else:
        a, b = meta.get("domain", [-np.pi, np.pi])
        grid = Grid1D(model.arch.n, a, b)
        try:
            u0 = InitialCondition.parse(args.ic).evaluate(grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        exact = None
    if args.horizon < 0:
        raise ConfigError("--horizon must be >= 0")
    preds = model.predict_all(u0, args.horizon)[0]
    header = ["step", "x", "predicted"] + (["exact"] if exact is not None else [])
    rows = []
    for p in range(args.horizon + 1):
        for j, x in enumerate(grid.x):
            row = [p, repr(float(x)), repr(float(preds[p, j]))]
            if exact is not None:
                row.append(repr(float(exact[p, j])))
            rows.append(row)
    _write_csv(os.path.join(out, "prediction.csv"), header, rows)
    return 0


def cmd_spectrum(args):
    model, meta = _load_model(args.checkpoint)
    out = _out_dir(args)
    _echo_args(args, out)
    dt = args.dt if args.dt is not None else meta.get("dt")
    if dt is None:
        raise ConfigError("checkpoint records no dt; pass --dt")
    rep = analysis.koopman_spectrum(model, dt)
    analysis.write_spectrum(os.path.join(out, "spectrum.csv"), rep)
    a, b = meta.get("domain", [-np.pi, np.pi])
    analysis.write_eigenfunctions(os.path.join(out, "eigenfunctions.csv"), rep, Grid1D(model.arch.n, a, b).x)
    return 0


def _horizons(text):
    try:
        return [int(h) for h in text.split(",") if h.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad horizon list {text!r}") from exc


def cmd_eval(args):
    model, _ = _load_model(args.checkpoint)
    out = _out_dir(args)
    _echo_args(args, out)
    ds = _read_dataset(args.dataset, "test")
    if ds.grid.n != model.arch.n:
        raise DataError(f"test data has n={ds.grid.n} but the model expects n={model.arch.n}")
    rep = analysis.prediction_error(model, ds, _horizons(args.horizons))
    analysis.write_errors(os.path.join(out, "errors.csv"), rep)
    return 0


def cmd_sweep_rank(args):
    cfg = _config(args)
    if args.ranks:
        cfg.set("sweep.ranks", args.ranks)
    out = _out_dir(args)
    _echo_config(cfg, out)
    train_ds = _read_dataset(cfg.get("paths.train"), "training")
    val_ds = _read_dataset(cfg.get("paths.val"), "validation")
    tcfg = cfg.train_config()
    rows = analysis.rank_sweep(cfg.arch(), cfg.ints("sweep.ranks"), train_ds, val_ds, tcfg, seed=tcfg.seed)
    analysis.write_sweep(os.path.join(out, "sweep.csv"), rows)
    return 0


def cmd_homotopy(args):
    cfg = _config(args)
    if args.dts:
        cfg.set("homotopy.dts", args.dts)
    out = _out_dir(args)
    _echo_config(cfg, out)
    stages = []
    for dt in cfg.floats("homotopy.dts"):
        stages.append((dt, cfg.dataset("train", args.threads, dt), cfg.dataset("val", args.threads, dt)))
    tcfg = cfg.train_config()
    rows = homotopy_chain(cfg.arch(), stages, tcfg, seed=tcfg.seed, workdir=out)
    _write_csv(
        os.path.join(out, "homotopy.csv"),
        HOMOTOPY_COLUMNS,
        [[repr(r.dt), r.start, repr(r.val_total), repr(r.initial_val_total), r.best_epoch] for r in rows],
    )
    return 0


def cmd_ablation(args):
    cfg = _config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    datasets = {}
    for mix in cfg.get("ablation.mixes").split(","):
        cfg.set("data.mix", mix.strip())
        datasets[cfg.mix()] = (cfg.dataset("train", args.threads), cfg.dataset("val", args.threads))
    test = cfg.dataset("test", args.threads)
    tcfg = cfg.train_config()
    cells = analysis.ablation_study(datasets, cfg.arch(), test, cfg.ints("eval.horizons"), tcfg, seed=tcfg.seed)
    analysis.write_ablation(os.path.join(out, "ablation.csv"), cells)
    return 0


def cmd_demo_identity(args):
    out = _out_dir(args)
    seed = 0 if args.seed is None else args.seed
    _echo_args(args, out)
    trials = demo_identity(seed=seed, trials=args.trials)
    rows = [[t.trial, repr(t.in_domain_mse), repr(t.value_at_2)] for t in trials]
    exact = exact_identity_network()
    xs = np.linspace(-1.0, 3.0, 9)[:, None]
    rows.append(["exact", repr(float(np.mean((exact(xs) - xs) ** 2))), repr(float(exact(np.array([[2.0]]))[0, 0]))])
    _write_csv(os.path.join(out, "identity.csv"), ("trial", "in_domain_mse", "value_at_2"), rows)
    return 0


def cmd_default_config(args):
    out = _out_dir(args)
    with open(os.path.join(out, "default.cfg"), "w", encoding="utf-8") as fh:
        fh.write(default_config_text())
    return 0


# ---- parser --------------------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override data.seed and opt.seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for data generation")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    with_cfg = argparse.ArgumentParser(add_help=False)
    with_cfg.add_argument("--config", help="config file (key = value lines)")
    with_cfg.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    p = argparse.ArgumentParser(prog="koopman-pde", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("datagen", parents=[common, with_cfg], help="simulate train/val/test datasets")
    s.add_argument("--split", choices=["train", "val", "test", "all"], default="all")
    s.set_defaults(func=cmd_datagen)

    s = sub.add_parser("train", parents=[common, with_cfg], help="train a model")
    s.add_argument("--warm-start", help="checkpoint to initialize from")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="multi-step prediction from one initial state")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--dataset")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--ic", help="initial condition, e.g. sine:A=1,omega=4")
    s.add_argument("--horizon", type=int, required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues and eigenfunctions of K")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--dt", type=float)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("eval", parents=[common], help="prediction errors per initial-condition class")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--horizons", default="1,5,10,20")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep-rank", parents=[common, with_cfg], help="validation loss versus latent rank")
    s.add_argument("--ranks", help="comma-separated ranks (overrides sweep.ranks)")
    s.set_defaults(func=cmd_sweep_rank)

    s = sub.add_parser("homotopy", parents=[common, with_cfg], help="warm-started timestep chain")
    s.add_argument("--dts", help="comma-separated timesteps (overrides homotopy.dts)")
    s.set_defaults(func=cmd_homotopy)

    s = sub.add_parser("ablation", parents=[common, with_cfg], help="data mix x skip-connection grid")
    s.set_defaults(func=cmd_ablation)

    s = sub.add_parser("demo-identity", parents=[common], help="fit f(x)=x on [0,1] and probe x=2")
    s.add_argument("--trials", type=int, default=6)
    s.set_defaults(func=cmd_demo_identity)

    s = sub.add_parser("default-config", parents=[common], help="write every config key with its default")
    s.set_defaults(func=cmd_default_config)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except KoopmanPDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
