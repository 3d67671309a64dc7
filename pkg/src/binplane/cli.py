"""Command-line interface.

Exit codes: 0 success, 2 usage errors (argparse), 3 invalid configuration,
4 malformed data or run-log files, 5 I/O failures, 1 anything unexpected.
"""

import argparse
import json
import os
import sys

from . import datasets as data
from . import presets, report
from .experiment import (ConfigError, ExperimentConfig, SchemaError,
                         aggregate_runs, load_runs, run_experiment)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_IO = 5

_PLOT_KINDS = ("info_plane", "loss", "accuracy", "grad_evolution",
               "layerwise_panels")


def _default_out():
    return os.environ.get("BINPLANE_OUT", "out")


def build_parser():
    p = argparse.ArgumentParser(
        prog="binplane",
        description="Train small binary/full-precision nets and chart their "
                    "information-plane dynamics.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("datasets", help="generate or verify datasets")
    dsub = d.add_subparsers(dest="dataset_command", required=True)

    g = dsub.add_parser("gen-synthetic", help="write the 4096-point synthetic task")
    g.add_argument("--label-seed", type=int, default=0)
    g.add_argument("--split-seed", type=int, default=None)
    g.add_argument("--out", required=True, help="cache container path")

    t = dsub.add_parser("gen-ttt", help="enumerate the Tic-Tac-Toe endgame boards")
    t.add_argument("--split-seed", type=int, default=0)
    t.add_argument("--out", required=True, help="cache container path")

    v = dsub.add_parser("verify-mnist", help="validate an IDX images/labels pair")
    v.add_argument("--images", required=True)
    v.add_argument("--labels", required=True)

    tr = sub.add_parser("train", help="run a config for one or more seeds")
    tr.add_argument("--config", required=True)
    tr.add_argument("--seed", type=int, nargs="*", default=None,
                    help="override the config's seed list")
    tr.add_argument("--out", default=None, help="run-log directory "
                    "(default: $BINPLANE_OUT or ./out)")

    ag = sub.add_parser("aggregate", help="average the runs in a directory")
    ag.add_argument("--runs", required=True)
    ag.add_argument("--out", default=None, help="aggregate JSON path "
                    "(default: <runs>/aggregate.json)")

    pl = sub.add_parser("plot", help="render an SVG figure from run logs")
    pl.add_argument("--runs", required=True)
    pl.add_argument("--kind", required=True, choices=_PLOT_KINDS)
    pl.add_argument("--out", required=True, help="output .svg path")
    pl.add_argument("--split", default="train", choices=("train", "test"))

    rp = sub.add_parser("reproduce", help="run a preset matching a studied setup")
    rp.add_argument("--figure", required=True,
                    choices=("fig2a", "fig3a", "appendix-d"))
    rp.add_argument("--scale", default="desk", choices=("desk", "paper"))
    rp.add_argument("--out", default=None)
    rp.add_argument("--mnist-dir", default=None,
                    help="directory holding the four MNIST IDX files")
    return p


def _cmd_datasets(args):
    if args.dataset_command == "gen-synthetic":
        ds = data.gen_synthetic(args.label_seed, args.split_seed)
    elif args.dataset_command == "gen-ttt":
        ds = data.gen_tictactoe(args.split_seed)
    else:
        ds = data.load_mnist_idx(args.images, args.labels)
        lo, hi = float(ds.features.min()), float(ds.features.max())
        if lo < -1.0 or hi > 1.0:
            raise data.FormatError(f"features outside [-1, 1]: [{lo}, {hi}]")
        print(f"ok: {ds.n_samples} samples x {ds.n_features} features, "
              f"labels 0..{int(ds.labels.max())}, range [{lo:.3f}, {hi:.3f}]")
        return EXIT_OK
    data.save_cache(ds, args.out)
    print(f"wrote {args.out}: {ds.name}, {ds.n_samples} samples, "
          f"{len(ds.train_idx)}/{len(ds.val_idx)} split")
    return EXIT_OK


def _cmd_train(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed:
        config = ExperimentConfig.from_dict({**config.to_dict(), "seeds": args.seed})
    out_dir = args.out or _default_out()
    logs = run_experiment(config, out_dir=out_dir)
    for log in logs:
        print(f"wrote {os.path.join(out_dir, f'run_seed{log.seed}.jsonl')}")
    return EXIT_OK


def _cmd_aggregate(args):
    agg = aggregate_runs(load_runs(args.runs))
    out = args.out or os.path.join(args.runs, "aggregate.json")
    payload = {"config": agg.config, "config_hash": agg.config_hash,
               "dataset_meta": agg.dataset_meta, "n_runs": agg.n_runs,
               "seeds": list(agg.seeds), "epochs": agg.epochs,
               "snapshots": agg.snapshots}
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"wrote {out}: {agg.n_runs} runs, {len(agg.epochs)} epoch records")
    return EXIT_OK


def _cmd_plot(args):
    logs = load_runs(args.runs)
    svg = report.render_plot(logs, args.kind, split=args.split)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_reproduce(args):
    out_root = args.out or _default_out()
    for name, config in presets.figure_presets(args.figure, args.scale,
                                               args.mnist_dir):
        out_dir = os.path.join(out_root, name)
        print(f"[{name}] training {len(config.seeds)} seed(s) x "
              f"{config.epochs} epochs ...")
        logs = run_experiment(config, out_dir=out_dir)
        for kind in ("info_plane", "loss", "accuracy", "grad_evolution"):
            svg = report.render_plot(logs, kind)
            path = os.path.join(out_dir, f"{kind}.svg")
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(svg)
        final = logs[0].records[-1]
        print(f"[{name}] final train_acc={final.train_acc:.3f} "
              f"val_acc={final.val_acc:.3f}; plots under {out_dir}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "datasets":
            return _cmd_datasets(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "aggregate":
            return _cmd_aggregate(args)
        if args.command == "plot":
            return _cmd_plot(args)
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (data.FormatError, SchemaError, report.MissingSnapshotsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:  # pragma: no cover - last resort
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()
