"""Command-line interface.

Subcommands: synth, graphs, label, train, predict, evaluate, explain,
ablate.  Exit codes: 0 success, 1 usage/config error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DataError, NumericError
from .pipeline import (load_config, run_ablate, run_evaluate,
                       run_explain, run_graphs, run_label, run_predict,
                       run_synth, run_train)

USAGE_EXIT, DATA_EXIT, NUMERIC_EXIT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="roadgrade",
                     description="Citywide traffic grade prediction pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("synth", "generate a synthetic network and measurement series"),
        ("graphs", "build the four adjacency matrices and a Moran report"),
        ("label", "assign congestion grades with the self-organizing map"),
        ("train", "train the prediction model"),
        ("predict", "predict test-split grades and dump the attention trace"),
        ("evaluate", "compute accuracy, kappa and the per-hour grade MAE"),
        ("explain", "derive combination-importance reports"),
        ("ablate", "compare full and single-resolution models"),
    ]:
        cmd = sub.add_parser(name, help=doc)
        cmd.add_argument("--config", help="YAML run configuration file")
        cmd.add_argument("--seed", type=int, help="override the run seed")
        cmd.add_argument("--out", help="override the output directory")
        cmd.add_argument("--heads", type=int,
                         help="override the attention head count")
        if name not in ("synth", "ablate"):
            cmd.add_argument("--horizon", type=int,
                             help="prediction horizon in hours "
                                  "(default: first configured horizon)")
        if name == "train":
            cmd.add_argument("--variant", default="full",
                             choices=["full", "hourly", "daily", "weekly"],
                             help="input-resolution variant to train")
    return parser


def _run(args) -> list:
    overrides = {"seed": args.seed, "out_dir": args.out, "heads": args.heads}
    cfg = load_config(args.config, overrides)
    horizon = getattr(args, "horizon", None)
    if horizon is None:
        horizon = cfg.horizons[0]
    elif horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if args.command == "synth":
        return run_synth(cfg)
    if args.command == "graphs":
        return run_graphs(cfg, horizon)
    if args.command == "label":
        return run_label(cfg, horizon)
    if args.command == "train":
        return run_train(cfg, horizon, variant=args.variant)
    if args.command == "predict":
        return run_predict(cfg, horizon)
    if args.command == "evaluate":
        return run_evaluate(cfg, horizon)
    if args.command == "explain":
        return run_explain(cfg, horizon)
    if args.command == "ablate":
        return run_ablate(cfg)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
