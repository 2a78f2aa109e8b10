"""Command-line interface.

    doublon-ed run <config.json> [--out DIR] [--threads N] [--seed S] [--dump-matrix]
    doublon-ed sweep <config.json> --axis V --values 0,0.125,0.25 [--out DIR] [--threads N]

Exit codes: 0 success, 2 config error, 3 solver error, 4 capacity error.
Errors are reported as a single JSON object on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import DoublonError


def _load_config(path: str, seed_override=None) -> experiments.ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DoublonError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        from .errors import ConfigError  # noqa: PLC0415

        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if seed_override is not None:
        doc.setdefault("disorder", {"W": 0.0, "seed": 0})["seed"] = int(seed_override)
    return experiments.parse_config(doc)


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("out") / cfg.experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="doublon-ed",
                                     description="Exact diagonalization experiments for the "
                                                 "non-Hermitian pair-hopping lattice")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None, help="override disorder seed")
    p_run.add_argument("--dump-matrix", action="store_true",
                       help="write the assembled matrix in coordinate format")

    p_sweep = sub.add_parser("sweep", help="sweep one scalar parameter")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config, args.seed)
        if args.command == "run":
            experiments.run(cfg, _out_dir(args, cfg), dump_matrix_file=args.dump_matrix)
        else:
            try:
                values = [float(v) for v in args.values.split(",") if v.strip() != ""]
            except ValueError as exc:
                from .errors import ConfigError  # noqa: PLC0415

                raise ConfigError(f"bad --values list: {exc}") from exc
            experiments.sweep(cfg, args.axis, values, _out_dir(args, cfg),
                              max_workers=args.threads)
    except DoublonError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc),
                                    "exit_code": exc.exit_code}}))
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
