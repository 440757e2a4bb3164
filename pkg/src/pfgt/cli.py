"""Command-line entry point: ``pfgt sim``, ``pfgt dispersion`` and ``pfgt verify``.

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import inspect
import sys
import time
from pathlib import Path
from typing import Sequence

from .config import RunConfig, parse_config
from .errors import ConfigError, FitFailure, FormatError, NumericalFailure, SingularClosure

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", None, f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def cmd_sim(args: argparse.Namespace) -> int:
    from .evolution import run
    from .io import CsvWriter, write_pgm, write_snapshot

    cfg = _load(_config_path(args))
    out_dir = Path(args.out or cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = cfg.output.prefix
    csv = CsvWriter(out_dir / f"{prefix}.csv") if cfg.output.csv else None
    snapshots = 0

    def on_snapshot(state) -> None:
        nonlocal snapshots
        if cfg.output.snapshots:
            write_snapshot(state, out_dir / f"{prefix}_{state.step:08d}.pfgt")
            snapshots += 1

    try:
        state, series = run(cfg.sim, on_row=csv, on_snapshot=on_snapshot)
    finally:
        if csv is not None:
            csv.close()
    if cfg.output.pgm:
        write_pgm(state.phi, out_dir / f"{prefix}_final.pgm")
    last = series[-1]
    print(f"steps {state.step}  t {state.time:.6g}  energy {last.energy:.10g}  mass {last.mass:.10g}")
    print(f"wrote {len(series)} diagnostic rows and {snapshots} snapshots to {out_dir}")
    return EXIT_OK


def cmd_dispersion(args: argparse.Namespace) -> int:
    from .evolution import dispersion_scan

    cfg = _load(_config_path(args))
    ks = tuple(float(v) for v in args.k.split(",")) if args.k else cfg.dispersion.k
    if not ks:
        raise ConfigError("dispersion.k", None, "no wavenumbers given (set dispersion.k or pass --k)")
    points = dispersion_scan(cfg.sim, ks, cfg.dispersion.amplitude, cfg.dispersion.steps)
    print(f"{'k':>10s} {'measured':>16s} {'analytic':>16s} {'rel. error':>12s}")
    for p in points:
        rel = abs(p.measured - p.analytic) / abs(p.analytic) if p.analytic != 0 else abs(p.measured)
        print(f"{p.k:10.4f} {p.measured:16.8e} {p.analytic:16.8e} {rel:12.3e}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import TARGETS

    targets = list(TARGETS) if args.target == "all" else [args.target]
    failed = 0
    for name in targets:
        start = time.perf_counter()
        fn = TARGETS[name]
        seeded = args.seed is not None and "seed" in inspect.signature(fn).parameters
        rows = fn(seed=args.seed) if seeded else fn()
        print(f"== {name} ({time.perf_counter() - start:.2f} s)")
        for row in rows:
            print(row.describe())
            failed += not row.passed
    print("all checks passed" if failed == 0 else f"{failed} check(s) failed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration code so that 2 stays numerical."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config_argument(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="path to a key = value run config")
    p.add_argument("--config", dest="config_opt", metavar="PATH", help="same as the positional argument")


def _config_path(args: argparse.Namespace) -> str:
    path = args.config_opt or args.config
    if path is None:
        raise ConfigError("", None, "no config file given")
    return path


def build_parser() -> argparse.ArgumentParser:
    from .verify import TARGETS

    parser = _Parser(prog="pfgt", description="Second-grade phase-field simulator and verifier.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run a simulation from a config file")
    _config_argument(p)
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("dispersion", help="measure linear growth rates of single modes")
    _config_argument(p)
    p.add_argument("--k", help="comma-separated wavenumbers (overrides dispersion.k)")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("target", choices=sorted(TARGETS) + ["all"])
    p.add_argument("--seed", type=int, default=None, help="override the shipped random seed")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, FitFailure, SingularClosure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
