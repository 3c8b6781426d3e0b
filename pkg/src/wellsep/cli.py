"""``wellsep`` command line.

Subcommands:

* ``run --config FILE``: evaluate a JSON experiment config;
* ``exact``: transcendental delta-pair energies for one geometry;
* ``sweep``: a method swept over the separation or the second strength.

Exit codes: 0 success, 2 config error, 3 compute error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Sequence

from . import __version__
from .errors import ComputeError, ConfigInvalid
from .report import METHODS, SWEEP_PARAMETERS, emit, load_config, parse_config, run_timed

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", help="output file (default: config value, else stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default: csv)")
    p.add_argument("--threads", type=_positive_int, help="worker cap for sweep points (default: all cores)")


def _add_pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma1", type=float, required=True, help="strength of the first delta well")
    p.add_argument("--gamma2", type=float, required=True, help="strength of the second delta well")
    p.add_argument("--separation", type=float, required=True, help="distance between the wells")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wellsep",
        description="Bound-state energies of two well-separated potentials.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate an experiment config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    _add_output(p_run)

    p_exact = sub.add_parser("exact", help="exact energies of a delta pair")
    _add_pair(p_exact)
    _add_output(p_exact)

    p_sweep = sub.add_parser("sweep", help="sweep a method over one parameter")
    _add_pair(p_sweep)
    p_sweep.add_argument("--method", choices=METHODS, default="auto")
    p_sweep.add_argument("--order", type=int, choices=(1, 2), default=1)
    p_sweep.add_argument("--parameter", choices=SWEEP_PARAMETERS, default="separation")
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    _add_output(p_sweep)
    return parser


def _pair_config(args: argparse.Namespace, method: str) -> dict:
    return {
        "units": {"hbar": args.hbar, "mass": args.mass},
        "potentials": [
            {"kind": "delta", "strength": args.gamma1, "center": 0.0},
            {"kind": "delta", "strength": args.gamma2, "center": args.separation},
        ],
        "method": method,
    }


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            source = args.config
        else:
            obj = _pair_config(args, "exact" if args.command == "exact" else args.method)
            if args.command == "sweep":
                obj["order"] = args.order
                obj["sweep"] = {"parameter": args.parameter, "from": args.start, "to": args.stop, "steps": args.steps}
            cfg = parse_config(obj)
            source = None
    except ConfigInvalid as exc:
        print(f"wellsep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"wellsep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fmt = args.format or cfg.output.format
    path = args.output or cfg.output.path
    t0 = time.perf_counter()
    try:
        rows, times = run_timed(cfg, args.threads)
    except ConfigInvalid as exc:
        print(f"wellsep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComputeError as exc:
        print(f"wellsep: compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    meta = {
        "version": __version__,
        "config": source,
        "rows": len(rows),
        "point_wall_times": times,
        "total_wall_time": time.perf_counter() - t0,
    }
    try:
        emit(rows, fmt, path, meta)
    except OSError as exc:
        print(f"wellsep: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
