"""Command line runner: `lrcone run --config path.json [--out dir] [--experiment name]`.

Exit codes: 0 ok, 2 invalid config, 3 budget exceeded, 4 numerical
certification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .emit import write_csv, write_json
from .experiments import EXPERIMENTS, RUNNERS, Config
from .fock import BudgetError
from .model import validate_spec
from .odes import CertificationError

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_CERT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def load_config(path, experiment: str | None = None) -> tuple[Config, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if experiment is not None:
        data["experiment"] = experiment
    try:
        cfg = Config.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_spec(cfg.model)
    if not report.ok:
        raise ConfigError("invalid model: " + "; ".join(report.violations))
    return cfg, data


def config_hash(data: dict) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


def run(cfg: Config, data: dict, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    headline, tables = RUNNERS[cfg.experiment](cfg)
    files = []
    for name, (header, rows) in tables.items():
        write_csv(out / name, header, rows)
        files.append(name)
    manifest = {
        "experiment": cfg.experiment,
        "config_hash": config_hash(data),
        "versions": {"lrcone": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_clock_s": time.perf_counter() - start,
        "headline": headline,
        "files": sorted(files),
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrcone", description="Light-cone experiments for oscillator chains")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment from a JSON config")
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--out", default=None, help="output directory (default: config output.dir or ./out)")
    p.add_argument("--experiment", choices=EXPERIMENTS, default=None, help="override the experiment")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, data = load_config(args.config, args.experiment)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output.get("dir", "out")
    try:
        manifest = run(cfg, data, out)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(manifest["headline"], sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
