"""Command line entry point: ``distillbound <subcommand> --config FILE``."""

import argparse
import json
import sys

from .errors import ConfigError, NumericalError, ParseError, PreconditionError, ShapeError

SUBCOMMANDS = {
    "train": "train",
    "distill": "distill",
    "bounds": "bounds",
    "sparsify": "sparsify",
    "augment": "augment",
    "ladder": "ladder",
    "width-sweep": "width_sweep",
    "random-labels": "random_labels",
    "bound-compare": "bound_compare",
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def build_parser():
    p = argparse.ArgumentParser(prog="distillbound", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--out", default=None, help="output directory")
        s.add_argument("--parallel", type=int, default=1, help="worker processes for independent cells")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    from . import experiments

    exp = SUBCOMMANDS[args.command]
    try:
        cfg = experiments.load_config(args.config, seed=args.seed, out=args.out)
        if cfg["experiment"] not in (None, exp):
            raise ConfigError(f"config is for {cfg['experiment']!r}, not {exp!r}")
        cfg["experiment"] = exp
        if args.parallel < 1:
            raise ConfigError("--parallel must be >= 1")
        runner = experiments.RUNNERS[exp]
        if exp in ("width_sweep", "random_labels"):
            out = runner(cfg, parallel=experiments.effective_parallel(args.parallel))
        else:
            out = runner(cfg)
    except (ConfigError, ParseError, ShapeError, PreconditionError) as exc:
        print(f"distillbound: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"distillbound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = out[0] if isinstance(out, tuple) else out
    print(json.dumps({"out": out_dir, "experiment": exp}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
