"""Command line entry point: ``wingflap run|verify|list-presets``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiment import PRESETS, ConfigError, emit, load_config, run_sweep, with_overrides
from .sampler import parse_seed

EXIT_OK, EXIT_VALIDATION, EXIT_IDENTITY, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("wingflap")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wingflap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep tau and write the dataset")
    run.add_argument("config", help="preset name or path to a TOML config")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--shots", type=int)
    run.add_argument("--seed", type=str, help="decimal or 0x-prefixed hex")
    run.add_argument("--workers", type=int)
    run.add_argument("--check", action="store_true", help="exit 2 if any identity gap is out of tolerance")

    verify = sub.add_parser("verify", help="run the identity checks only")
    verify.add_argument("config")
    verify.add_argument("--workers", type=int)

    sub.add_parser("list-presets", help="print the built-in presets")
    return p


def _report_failures(result) -> bool:
    bad = result.failures()
    for tau, col, value in bad[:20]:
        log.error("tau=%g: %s = %.3e out of tolerance", tau, col, value)
    if len(bad) > 20:
        log.error("... %d more", len(bad) - 20)
    return not bad


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)

    if args.command == "list-presets":
        for name in sorted(PRESETS):
            cfg = load_config(name)
            print(f"{name}\tmodel={cfg.model} L={cfg.L} beta={cfg.beta} u={cfg.u} tau_grid={list(cfg.tau_grid)}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.command == "run":
            seed = parse_seed(args.seed) if args.seed is not None else None
            cfg = with_overrides(cfg, shots=args.shots, seed=seed, workers=args.workers)
        else:
            cfg = with_overrides(cfg, shots=None, workers=args.workers)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_VALIDATION
    except ValueError as exc:
        log.error("invalid argument: %s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO

    result = run_sweep(cfg)

    if args.command == "verify":
        ok = _report_failures(result)
        log.info("%s: %d grid points, identities %s", cfg.name, len(result.rows), "hold" if ok else "FAIL")
        return EXIT_OK if ok else EXIT_IDENTITY

    try:
        text = emit(result, args.format, args.out)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO
    if args.out is None:
        sys.stdout.write(text)
    if args.check and not _report_failures(result):
        return EXIT_IDENTITY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
