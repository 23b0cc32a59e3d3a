"""Command-line entry point: ``python -m blockboot --config run.cfg``.

Exit status: 0 on success, 1 on configuration or partition errors, 2 when a
capacity limit is exceeded.
"""
from __future__ import annotations

import argparse
import datetime as dt
import sys
from pathlib import Path

from . import __version__
from .config import SEED_MASK, RunConfig, format_config, parse_config
from .core import (
    boot_mean_pivot,
    boot_ustat_pivot,
    partition,
    schedule_block_length,
)
from .empirics import consistency_experiment, estimated_cost
from .errors import CapacityError, ConfigError
from .kernels import get_kernel
from .process_gen import TimeSeries, read_series_csv, simulate

CONFIG_PREFIX = "# config: "


def preamble(cfg: RunConfig, timestamp: bool) -> list[str]:
    lines = [f"# blockboot {__version__}", f"# master_seed={cfg.seed}"]
    if timestamp:
        lines.append(f"# timestamp={dt.datetime.now(dt.timezone.utc).isoformat()}")
    lines += [CONFIG_PREFIX + line for line in format_config(cfg).splitlines()]
    return lines


def config_from_output(text: str) -> RunConfig:
    """Recover the run configuration echoed into an output file."""
    echoed = [line[len(CONFIG_PREFIX):] for line in text.splitlines()
              if line.startswith(CONFIG_PREFIX)]
    return parse_config("\n".join(echoed))


def _series(cfg: RunConfig) -> TimeSeries:
    if cfg.input:
        return read_series_csv(cfg.input)
    return simulate(cfg.spec, cfg.n, cfg.seed)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if not path.parent.exists():
        raise ConfigError(f"output directory {path.parent} does not exist")
    path.write_text(text)


def run(cfg: RunConfig, threads: int = 1, timestamp: bool = True) -> int:
    head = preamble(cfg, timestamp)
    if cfg.command == "generate":
        series = _series(cfg)
        _emit("\n".join(head) + "\n" + series.to_csv(), cfg.out)
    elif cfg.command == "bootstrap":
        series = _series(cfg)
        p = cfg.p if cfg.p is not None else schedule_block_length(series.n, cfg.schedule)
        part = partition(series.n, p)
        if cfg.statistic == "mean":
            dist = boot_mean_pivot(series, part, cfg.B, cfg.seed, threads)
        else:
            dist = boot_ustat_pivot(series, part, get_kernel(cfg.statistic), cfg.B, cfg.seed,
                                    threads)
        _emit(dist.to_csv(preamble=head), cfg.out)
    else:
        if cfg.budget is not None:
            for n in cfg.n_grid:
                cost = estimated_cost(n, cfg.schedule, cfg.B, cfg.R)
                if cost > cfg.budget:
                    raise CapacityError(f"n={n}: (kp)^2*B*R = {cost} exceeds budget {cfg.budget}")
        report = consistency_experiment(cfg.spec, cfg.statistic, cfg.n_grid, cfg.schedule,
                                        cfg.B, cfg.M, cfg.R, cfg.seed, threads)
        _emit(report.to_csv(preamble=head, wall_time=timestamp), cfg.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="blockboot", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="key = value run configuration")
    parser.add_argument("--seed", type=int, help="master seed, overrides the config")
    parser.add_argument("--out", help="output CSV path, overrides the config")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads; never changes results")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp line and wall times")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(Path(args.config).read_text())
        if args.seed is not None:
            if not 0 <= args.seed <= SEED_MASK:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return run(cfg, args.threads, not args.no_timestamp)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 2
