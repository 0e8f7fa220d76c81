"""Command-line entry point: ``dcsfcm {cluster,simulate,diagnose}``.

Failures print one JSON line ``{"error": <code>, "message": ...}`` to stderr
and exit non-zero (2 for usage/configuration problems, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import resolve
from .errors import ConfigError, DcsFcmError, UsageError

EXIT_FAILURE = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcsfcm", description="Cluster time series by the dynamics of their DCS-filtered moments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="INI file; options go in a section named after the command")
        sp.add_argument("--out", help="output directory")

    c = sub.add_parser("cluster", help="full pipeline on a CSV panel")
    common(c)
    c.add_argument("--input", help="CSV panel: header of series ids, optional leading date column")
    c.add_argument("--family", choices=("gaussian", "t", "skewt"))
    c.add_argument("--gamma", type=float, choices=(0.0, 0.5, 1.0))
    c.add_argument("--lags", type=int, help="ACF lags L (default 50)")
    c.add_argument("--m", type=float, help="fuzzifier (default 2)")
    c.add_argument("--c-min", dest="c_min", type=int)
    c.add_argument("--c-max", dest="c_max", type=int)
    c.add_argument("--c", type=int, help="fixed cluster count; skips silhouette selection")
    c.add_argument("--tol", type=float)
    c.add_argument("--max-iter", dest="max_iter", type=int)
    c.add_argument("--restarts", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--jobs", type=int, help="parallel fits (0 = all cores)")

    s = sub.add_parser("simulate", help="Monte-Carlo classification study")
    common(s)
    s.add_argument("--scenario", type=int)
    s.add_argument("--T", dest="T", type=int, help="series length (default: grid 50, 200, 500)")
    s.add_argument("--lags", type=int, help="ACF lags (default: grid 10, 25, 50)")
    s.add_argument("--M", dest="M", type=int, help="replications (default 100)")
    s.add_argument("--m", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--restarts", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)

    d = sub.add_parser("diagnose", help="Jarque-Bera tests only")
    common(d)
    d.add_argument("--input")
    return p


def _emit_error(exc: Exception) -> int:
    code = getattr(exc, "code", "error")
    print(json.dumps({"error": code, "message": str(exc)}, sort_keys=True), file=sys.stderr)
    return EXIT_USAGE if isinstance(exc, (UsageError, ConfigError)) else EXIT_FAILURE


def main(argv=None) -> int:
    from .pipeline import run_diagnose, run_pipeline, run_simulation

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: cluster, simulate or diagnose")
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        opts = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
        config = resolve(args.command, opts, args.config)
        if args.command == "cluster":
            manifest = run_pipeline(config)
            print(json.dumps({"status": "ok", "out": config.out, "selected_C": manifest["selected_C"]}, sort_keys=True))
        elif args.command == "simulate":
            reports = run_simulation(config)
            print(json.dumps({"status": "ok", "out": config.out, "rows": len(reports)}, sort_keys=True))
        else:
            sys.stdout.write(run_diagnose(config))
    except DcsFcmError as exc:
        return _emit_error(exc)
    except (OSError, ValueError) as exc:
        return _emit_error(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
