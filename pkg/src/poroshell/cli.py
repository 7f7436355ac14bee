"""Command-line interface.

    poroshell run --config scenario.ini [--output-dir DIR] [--oracle-check]
                  [--dt DT] [--t-end T]

Flags override the corresponding config entries.  Exit status: 0 on success,
2 on configuration validation failure (every problem is listed before
aborting), 1 on runtime failure.  Log verbosity comes from the POROSHELL_LOG
environment variable (debug | info | warning, default warning).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__

log = logging.getLogger("poroshell")


def _setup_logging():
    level = os.environ.get("POROSHELL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def make_parser():
    parser = argparse.ArgumentParser(prog="poroshell",
                                     description="Fluid-saturated flexural shell solver")
    parser.add_argument("--version", action="version", version=f"poroshell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured scenario")
    run.add_argument("--config", required=True, help="INI run configuration")
    run.add_argument("--output-dir", default=None, help="override the output directory")
    run.add_argument("--oracle-check", action="store_true", default=None,
                     help="compare the pressure against the spectral series")
    run.add_argument("--dt", type=float, default=None, help="override the time step")
    run.add_argument("--t-end", type=float, default=None, help="override the final time")
    return parser


def main(argv=None):
    _setup_logging()
    args = make_parser().parse_args(argv)
    if args.command != "run":
        return 2

    from .config import ConfigError, load_config
    from .geometry import GeometryError
    from .material import MaterialError, nondimensionalize
    from .runio import execute
    from .solver import SolverError

    try:
        cfg = load_config(args.config)
        cfg.validate()
        dp = nondimensionalize(cfg.material_params())
        print(f"dimensionless: lam_t={dp.lam_t:g} beta={dp.beta:g} eps={dp.eps:g} "
              f"alpha={dp.alpha:g} beta_bar={dp.beta_bar:g} "
              f"terzaghi_time={dp.terzaghi_time:g}s pressure_scale={dp.pressure_scale:g}Pa")
        outdir = execute(cfg, output_dir=args.output_dir,
                         oracle_check=args.oracle_check, dt=args.dt,
                         t_end=args.t_end)
    except ConfigError as exc:
        print("configuration rejected:", file=sys.stderr)
        for err in exc.errors:
            print(f"  - {err}", file=sys.stderr)
        return 2
    except (MaterialError, GeometryError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(outdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
