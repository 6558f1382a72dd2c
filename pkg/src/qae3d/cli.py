"""Command-line entry point: ``qae3d {synth,train,eval,sweep,selfcheck,plot}``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import checkpoint, checks, sim
from .circuits import match_blocks
from .data import MotionDataset, SplitSpec, load_csv, select_joints, split_indices, synthesize_chain, write_csv
from .errors import ConfigError, DataError, NumericalError
from .experiment import TrainConfig, apply_overrides, evaluate, load_config, train
from .plot import render_svg
from .training import TrainLog

log = logging.getLogger("qae3d")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _config_from_args(args) -> TrainConfig:
    config = load_config(args.config) if args.config else TrainConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    for key in ("data", "model", "epochs", "max_steps", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    return apply_overrides(config, overrides).validate()


def cmd_synth(args):
    if args.joints < 2:
        args.parser.error("--joints must be >= 2 (a chain needs two joints)")
    ds = synthesize_chain(args.frames, args.joints, seed=args.seed, fps=args.fps, amplitude=args.amplitude)
    out = Path(args.output)
    try:
        write_csv(ds, out)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from exc
    print(f"wrote {ds.n_frames} frames x {ds.n_vertices} joints to {out}")
    return EXIT_OK


def cmd_train(args):
    config = _config_from_args(args)
    est, train_log = train(config, out_dir=config.out)
    print(f"model={config.model} train_cm={train_log.final_eval('train')!r} test_cm={train_log.final_eval('test')!r}")
    print(f"outputs in {config.out}")
    return EXIT_OK


def cmd_eval(args):
    config = _config_from_args(args)
    est = checkpoint.load(args.checkpoint)
    dataset = load_csv(config.data, fps=config.fps)
    if config.joints is not None:
        dataset = select_joints(dataset, config.joints)
    if dataset.n_vertices != est.n_vertices_:
        raise DataError(f"checkpoint expects {est.n_vertices_} joints, dataset has {dataset.n_vertices}")
    train_idx, test_idx = split_indices(dataset.n_frames, dataset.fps, SplitSpec(config.train_seconds, config.test_seconds))
    idx = {"train": train_idx, "test": test_idx, "all": np.arange(dataset.n_frames)}[args.split]
    frames = dataset.frames[idx]
    mean, per_frame = evaluate(est, frames)
    out = Path(args.metrics)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "metric_cm"])
        w.writerow(["mean", repr(mean)])
        for f, m in zip(idx, per_frame):
            w.writerow([int(f), repr(float(m))])
    if args.reconstructions:
        write_csv(MotionDataset(est.predict(frames), dataset.fps), args.reconstructions)
    print(f"split={args.split} frames={len(idx)} mean_cm={mean!r}")
    return EXIT_OK


def _sweep_one(job):
    config, out = job
    est, train_log = train(config, out_dir=out)
    n_params = est.network_.n_params if hasattr(est, "network_") else 0
    return {
        "block": config.block, "architecture": config.architecture, "init": config.init,
        "n_blocks": config.n_blocks, "n_discard": config.n_discard, "n_params": n_params,
        "train_cm": train_log.final_eval("train"), "test_cm": train_log.final_eval("test"),
    }


def _csv_list(text, cast=str):
    return [cast(x) for x in text.split(",") if x]


def cmd_sweep(args):
    base = _config_from_args(args)
    out = Path(base.out)
    kinds = _csv_list(args.kinds)
    archs = _csv_list(args.archs)
    inits = _csv_list(args.inits)
    if base.data is None:
        raise ConfigError("no dataset given", "data")
    n_vertices = load_csv(base.data, fps=base.fps).n_vertices if base.joints is None else len(base.joints)
    n_qubits = base.qubits(n_vertices)

    jobs = []
    if args.blocks or args.discard:
        for j in _csv_list(args.blocks, int) or [base.n_blocks]:
            for nb in _csv_list(args.discard, int) or [base.n_discard]:
                cfg = dataclasses.replace(base, n_blocks=j, n_discard=nb)
                jobs.append((cfg, out / f"J{j}_NB{nb}"))
    else:
        ref = base.quantum_param_count(n_vertices) // 2
        for kind, arch, init in itertools.product(kinds, archs, inits):
            j = match_blocks(ref, kind, n_qubits, base.n_discard) if args.match_params else base.n_blocks
            cfg = dataclasses.replace(base, block=kind, architecture=arch, init=init, n_blocks=j)
            jobs.append((cfg, out / f"{kind}_{arch}_{init}"))
    for cfg, _ in jobs:
        cfg.validate(n_vertices)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]

    out.mkdir(parents=True, exist_ok=True)
    fields = ["block", "architecture", "init", "n_blocks", "n_discard", "n_params", "train_cm", "test_cm"]
    with (out / "sweep_results.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    if not (args.blocks or args.discard):
        cell = {(r["architecture"], r["init"], r["block"]): r for r in rows}
        with (out / "sweep_table.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["architecture", "init"] + kinds)
            for arch, init in itertools.product(archs, inits):
                w.writerow([arch, init] + [repr(cell[(arch, init, k)]["test_cm"]) for k in kinds])
            if args.match_params:
                w.writerow(["n_blocks", ""] + [cell[(archs[0], inits[0], k)]["n_blocks"] for k in kinds])
    for r in rows:
        print(f"{r['block']} {r['architecture']:8s} {r['init']:8s} J={r['n_blocks']:<3d} N_B={r['n_discard']} "
              f"params={r['n_params']:<6d} test_cm={r['test_cm']:.4f}")
    print(f"results in {out}")
    return EXIT_OK


def cmd_selfcheck(args):
    seed = 0 if args.seed is None else args.seed
    if args.inject_fault:
        with sim.inject_fault():
            results = checks.run_all(seed)
    else:
        results = checks.run_all(seed)
    for name, ok, worst in results:
        print(json.dumps({"check": name, "status": "pass" if ok else "fail", "worst": worst}, sort_keys=True))
    failed = [name for name, ok, _ in results if not ok]
    print(json.dumps({"summary": "pass" if not failed else "fail", "failed": failed}, sort_keys=True))
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def cmd_plot(args):
    try:
        text = Path(args.log).read_text()
        train_log = TrainLog.from_csv(text)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read training log {args.log}: {exc}") from exc
    try:
        svg = render_svg(train_log)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    Path(args.output).write_text(svg)
    print(f"wrote {args.output}")
    return EXIT_OK


def _add_shared(p, with_config=True):
    if with_config:
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed")


def build_parser():
    parser = argparse.ArgumentParser(prog="qae3d", description="Simulated quantum point-cloud auto-encoder")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic articulated-chain dataset")
    p.add_argument("--frames", type=int, default=1200)
    p.add_argument("--joints", type=int, default=16)
    p.add_argument("--fps", type=float, default=12.0)
    p.add_argument("--amplitude", type=float, default=0.5, help="joint-angle amplitude in radians")
    p.add_argument("-o", "--output", required=True)
    _add_shared(p, with_config=False)
    p.set_defaults(func=cmd_synth, parser=p)

    p = sub.add_parser("train", help="train a model or baseline")
    _add_shared(p)
    p.add_argument("--data")
    p.add_argument("--model", help="quantum | mimic | qe-cd | ce-qd | fc | constant")
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    _add_shared(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--metrics", default="metrics.csv")
    p.add_argument("--reconstructions", help="write predicted frames in the dataset CSV format")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train a grid of circuit designs")
    _add_shared(p)
    p.add_argument("--data")
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--kinds", default="A,B,C,D")
    p.add_argument("--archs", default="repeat,inverse")
    p.add_argument("--inits", default="random,identity")
    p.add_argument("--match-params", action="store_true", help="pick J per kind to match block-B parameters")
    p.add_argument("--blocks", default="", help="comma list of J values (block-count sweep)")
    p.add_argument("--discard", default="", help="comma list of N_B values (bottleneck sweep)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selfcheck", help="run the invariant batteries")
    _add_shared(p, with_config=False)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("plot", help="render a training log as SVG")
    p.add_argument("log")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error{f' ({exc.key})' if exc.key else ''}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
