"""Command-line front end.

    densityflow <command> --config PATH --out DIR [--seed N]

Writes ``results.json`` (deterministic for a given config and seed),
``metadata.json`` (timestamps, runtime, versions) and one ``<series>.csv`` per
recorded time series. Exit status: 0 when every check passes, 1 on a
tolerance violation, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, parse_config
from .errors import ConfigError
from .suites import GENERATOR, SUITES, SuiteResult

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("densityflow")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="densityflow", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="YAML or JSON run configuration")
    parser.add_argument("--out", required=True, type=Path, help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def write_series(out: Path, name: str, times, values) -> None:
    with open(out / f"{name}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(times, values):
            writer.writerow([repr(float(t)), repr(float(v))])


def write_outputs(out: Path, command: str, seed: int, effective: dict, result: SuiteResult, runtime: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    results = {
        "suite": command,
        "seed": seed,
        "generator": GENERATOR,
        "effective_config": effective,
        "checks": [c.to_json() for c in result.checks],
        "all_passed": result.all_passed,
    }
    (out / "results.json").write_text(json.dumps(results, indent=2) + "\n")
    metadata = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runtime_seconds": runtime,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2) + "\n")
    for name, (times, values) in result.series.items():
        write_series(out, name, times, values)


def run(command: str, config_path: Path, out: Path, seed: int = 0) -> int:
    if seed < 0 or seed >= 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(config_path, command)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.Generator(np.random.PCG64(seed))
    start = time.perf_counter()
    result = SUITES[command](cfg, rng)
    runtime = time.perf_counter() - start
    write_outputs(out, command, seed, cfg.effective(), result, runtime)
    for check in result.checks:
        stream = sys.stdout if check.passed else sys.stderr
        print(check.line(), file=stream)
    return EXIT_OK if result.all_passed else EXIT_TOLERANCE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return run(args.command, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
