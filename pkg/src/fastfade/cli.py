"""Command line interface: ber sweeps, the validation suite, grid inspection."""

from __future__ import annotations

import argparse
import sys

from .harness import ConfigError, ExperimentConfig, derive_grid, \
    run_ber_sweep, run_validation


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the root RNG seed")
    parser.add_argument("--out", help="override the CSV output path")
    parser.add_argument("--threads", type=int,
                        help="worker threads for the sweep")
    parser.add_argument("--profile-dir",
                        help="directory searched for TDL profiles first")


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output = args.out
    if args.threads is not None:
        config.threads = args.threads
    if args.profile_dir is not None:
        config.profile_dir = args.profile_dir
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fastfade",
        description="Frequency-domain MMSE equalization simulator for fast "
                    "fading channels (OTFS / OFDM / SC-FDE)")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte-Carlo BER sweep")
    _add_common(sweep)

    validate = sub.add_parser("validate",
                              help="run the cross-module validation suite")
    _add_common(validate)

    grid = sub.add_parser("grid", help="print the derived frame grid")
    _add_common(grid)

    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            config = _load_config(args)
            report = run_ber_sweep(config)
            text = report.to_csv(config.output)
            if not config.output:
                sys.stdout.write(text)
            else:
                print(f"wrote {len(report.rows)} rows to {config.output}")
            return 0
        if args.command == "validate":
            seed = args.seed if args.seed is not None else 0
            report = run_validation(seed=seed)
            print(report.summary())
            return 0 if report.passed else 1
        config = _load_config(args)
        g = derive_grid(config)
        print(f"M                 = {g.M}")
        print(f"N                 = {g.N}")
        print(f"frame size M*N    = {g.size}")
        print(f"d_r               = {g.d_r:.6e} s")
        print(f"f_r               = {g.f_r:.6f} Hz")
        print(f"bandwidth 1/d_r   = {1.0 / g.d_r:.6e} Hz")
        print(f"symbol duration   = {g.M * g.d_r:.6e} s")
        print(f"f_max             = {config.f_max():.4f} Hz")
        print(f"K_max             = {g.K_max}")
        print(f"L_max             = {g.L_max}")
        print(f"L_cp              = {g.L_cp}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
