"""Command-line interface.

Subcommands:
    bound-states   solve the initial well and export orbitals/energies
    evolve         quench and propagate; timeseries.csv (+ fcs.csv)
    fcs            same pipeline, counting statistics emphasized
    zeno           short-time analysis over N or a range; summary.csv
    rates          semiclassical per-level rate table; summary.csv
    sweep          full per-N pipeline (zeno + rate fits); summary.csv
    report         render figures from an existing output directory

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .lattice import CapacityError
from .observables import NumericsError
from .ratefit import WindowCollapse
from . import pipeline

logger = logging.getLogger("fockdecay")


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out-dir", help="output directory (overrides config)")
    parser.add_argument("--verbose", action="store_true", help="chatty logging")
    parser.add_argument("--plot", action="store_true",
                        help="render figures next to the CSV output")
    parser.add_argument("--n-particles", help="override n_particles (e.g. 4 or 1..8)")
    parser.add_argument("--capacity", help="override trap capacity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockdecay",
        description="Tunneling decay of trapped fermionic atom-number states in 1D",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("bound-states", "solve and export the initial-well orbitals"),
        ("evolve", "propagate the quenched system and record decay curves"),
        ("fcs", "propagate and export the counting statistics p(n, t)"),
        ("zeno", "short-time (Zeno) analysis for one or a range of N"),
        ("rates", "semiclassical per-level decay rates"),
        ("sweep", "full per-N pipeline: Zeno fits plus exponential rate fits"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("bound-states", "evolve"):
            p.add_argument("--dump-absorber", action="store_true",
                           help="also write the absorber profile (x, W)")
    rep = sub.add_parser("report", help="render figures from an existing run directory")
    rep.add_argument("run_dir", help="directory holding the CSV outputs")
    rep.add_argument("--config", help="config/manifest for the potential figure")
    rep.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "report":
            from . import plots
            cfg = load_config(args.config) if args.config else None
            made = plots.render_report(args.run_dir, cfg)
            for path in made:
                logger.info("wrote %s", path)
            return 0

        overrides = {
            "out_dir": args.out_dir,
            "n_particles": args.n_particles,
            "capacity": args.capacity,
        }
        cfg = load_config(args.config, overrides)
        if args.verbose:
            cfg.verbose = True

        if args.command == "bound-states":
            out = pipeline.run_bound_states(cfg, dump_absorber=args.dump_absorber)
        elif args.command == "evolve":
            out = pipeline.run_evolve(cfg, dump_absorber=args.dump_absorber)
        elif args.command == "fcs":
            out = pipeline.run_fcs(cfg)
        elif args.command == "zeno":
            out = pipeline.run_zeno(cfg)
        elif args.command == "rates":
            out = pipeline.run_rates(cfg)
        elif args.command == "sweep":
            out = pipeline.run_sweep(cfg)
        else:  # pragma: no cover
            raise ConfigError([f"unknown command {args.command!r}"])

        if getattr(args, "plot", False):
            from . import plots
            for path in plots.render_report(out, cfg):
                logger.info("wrote %s", path)
        logger.info("outputs in %s", out)
        return 0
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return 2
    except (NumericsError, CapacityError, WindowCollapse, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
