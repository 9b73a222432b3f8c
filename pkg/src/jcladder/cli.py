"""Command line entry point: ``jcladder simulate|validate|oracle-check CONFIG``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments.config import ConfigError, dump_config, load_config
from .experiments.output import OutputError, emit_outputs
from .experiments.runners import config_oracle_check, run_config
from .hilbert import IntegrationError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcladder", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a figure configuration and write CSV/JSON/SVG")
    sim.add_argument("config")
    sim.add_argument("--out", help="output directory (overrides outputs.dir)")
    sim.add_argument("--n-traj", type=int, help="trajectories per grid point")
    sim.add_argument("--seed", type=int, help="first trajectory seed")
    sim.add_argument("--threads", type=int, default=1, help="worker processes over grid points")
    sim.add_argument("--no-plots", action="store_true")

    val = sub.add_parser("validate", help="parse a configuration and print it in resolved form")
    val.add_argument("config")

    orc = sub.add_parser("oracle-check", help="compare trajectories with the master equation")
    orc.add_argument("config")
    orc.add_argument("--n-traj", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(dump_config(cfg), end="")
            return EXIT_OK
        if args.command == "oracle-check":
            lines = config_oracle_check(cfg, args.n_traj)
            for line in lines:
                print(line)
            ok = all(line.passed for line in lines)
            print("oracle-check:", "PASS" if ok else "FAIL")
            return EXIT_OK if ok else EXIT_ORACLE
        changes = {}
        if args.n_traj is not None:
            changes["n_traj"] = args.n_traj
        if args.seed is not None:
            changes["seed0"] = args.seed
        if args.out is not None:
            changes["out_dir"] = args.out
        if args.no_plots:
            changes["plots"] = False
        if changes:
            cfg = cfg.replace(**changes)
        if cfg.n_traj < 1:
            raise ConfigError("--n-traj must be positive")
        result = run_config(cfg, threads=args.threads)
        for path in emit_outputs(result, cfg.out_dir, cfg.output_prefix, cfg.plots):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
