"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 resource limit. Errors are
reported on stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as C
from .artifacts import write_atomic
from .errors import ConfigError, ResourceLimitError
from .experiments import DRIVERS

SUBCOMMANDS = {
    "kz-bench": "kz_bench",
    "noise-sweep": "noise_sweep",
    "trotter-conv": "trotter_convergence",
    "anneal-opt": "anneal_opt",
    "spectrum": "spectrum_scan",
}

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kzbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {exp} experiment")
        p.add_argument("--config", required=True, type=Path, help="JSON experiment config")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="root seed (overrides the config)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(command: str, doc: dict, out_dir: Path | None = None, *, fmt: str = "csv", workers: int = 1) -> list[Path]:
    """Validate ``doc``, run the experiment and write its artifacts; returns written paths."""
    exp = SUBCOMMANDS.get(command, command)
    if doc.get("experiment", exp) != exp:
        raise ConfigError(f"config is for {doc.get('experiment')!r}, command runs {exp!r}")
    cfg = C.resolve({**doc, "experiment": exp})
    target = Path(out_dir) if out_dir is not None else Path(cfg["output"]["directory"])
    files = DRIVERS[exp](cfg, fmt, max(1, workers))
    return [write_atomic(target / name, text) for name, text in files.items()]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = C.load(args.config)
        if args.seed is not None:
            doc["seed"] = args.seed
        written = run(args.command, doc, args.out, fmt=args.fmt, workers=args.workers)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except ResourceLimitError as exc:
        return _fail(EXIT_RESOURCE, "resource_limit", str(exc))
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
