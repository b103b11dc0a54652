"""Command-line entry point: ``ampsi {run,se,denoise-check,sweep}``.

Exit codes: 0 success, 1 configuration error, 2 numeric divergence,
3 I/O error, 4 a denoiser self-check failed.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericDivergenceError, ParameterError
from .experiment import compute_se, config_from_dict, denoise_check, emit_csv, emit_se_csv, parse_config, run_experiment
from .linmodel import MODEL_KINDS, SignalModel

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4

log = logging.getLogger("ampsi")


def _cmd_run(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = config_from_dict({**cfg.to_dict(), "seed": args.seed})
    out = args.out or cfg.out
    if out is None:
        raise ConfigError("no output prefix: pass --out or set 'out' in the config", key="out")
    report = run_experiment(cfg, workers=args.workers)
    paths = emit_csv(report, out)
    dev = report.tracking_deviation()
    log.info("m=%d realized delta=%.6g, mean tracking deviation %.4f", cfg.m, cfg.realized_delta, dev.mean())
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_se(args):
    cfg = parse_config(args.config)
    path = compute_se(cfg)
    print(emit_se_csv(path, args.out))
    return EXIT_OK


def _model_from_args(args):
    kind = args.model
    if kind == "GG":
        return SignalModel.gg(args.sigma_x, args.sigma)
    if kind == "BG":
        return SignalModel.bg(args.epsilon, args.sigma)
    if args.K is None:
        raise ConfigError(f"--K is required for the {kind} model", key="K")
    return SignalModel(kind, sigma=args.sigma, K=args.K)


def _cmd_denoise_check(args):
    model = _model_from_args(args)
    grid = None
    if args.grid:
        lo, hi, count = (float(v) for v in args.grid.split(","))
        grid = np.linspace(lo, hi, int(count))
    report = denoise_check(model, grid=grid, lams=args.lam)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _cmd_sweep(args):
    parse_config(args.config)
    raw = json.loads(Path(args.config).read_text())
    values = [_parse_value(v) for v in args.values.split(",")]
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.config).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    keys = args.param.split(".")
    stem = Path(args.config).stem
    for value in values:
        cfg = copy.deepcopy(raw)
        node = cfg
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError(f"sweep key {args.param} does not exist", key=args.param)
            node = node[k]
        node[keys[-1]] = value
        parsed = config_from_dict(cfg)
        if parsed.out is not None:
            cfg["out"] = f"{parsed.out}_{keys[-1]}={value}"
        target = out_dir / f"{stem}_{keys[-1]}={value}.json"
        target.write_text(json.dumps(cfg, indent=2) + "\n")
        print(target)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, not argparse's exit status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="ampsi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run AMP-SI trials and the SE path, write CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output prefix for <out>.trials.csv and <out>.se.csv")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1, help="trials run concurrently")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("se", help="compute the state-evolution path only")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_se)

    p = sub.add_parser("denoise-check", help="compare a denoiser with the oracle and finite differences")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--sigma-x", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--K", type=int)
    p.add_argument("--lam", type=float, action="append", help="noise level(s) to test; repeatable")
    p.add_argument("--grid", help="lo,hi,count for the (a, b) grid")
    p.set_defaults(func=_cmd_denoise_check)

    p = sub.add_parser("sweep", help="write one config per value of a parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="key to vary; dotted for model keys, e.g. model.sigma")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericDivergenceError, OverflowError, FloatingPointError) as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
