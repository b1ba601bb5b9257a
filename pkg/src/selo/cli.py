"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import cache
from .encoder import ORDERINGS, VARIANTS, encode_edges
from .errors import DataError, NumericError, SeloError
from .experiment import (RunConfig, RunFailed, _split_records, derive_seed, load_dataset,
                         run_experiment, scan, scan_table)
from .graph import SIGN_RULES, split_edges

log = logging.getLogger("selo")

DATASETS = {
    "bitcoin-alpha": {
        "url": "https://snap.stanford.edu/data/soc-sign-bitcoinalpha.csv.gz",
        "page": "https://snap.stanford.edu/data/soc-sign-bitcoin-alpha.html",
        "sign_rule": "threshold-at-zero",
        "nodes": 3782, "pos": 22649, "neg": 1536,
    },
    "bitcoin-otc": {
        "url": "https://snap.stanford.edu/data/soc-sign-bitcoinotc.csv.gz",
        "page": "https://snap.stanford.edu/data/soc-sign-bitcoin-otc.html",
        "sign_rule": "threshold-at-zero",
        "nodes": 5881, "pos": 32028, "neg": 3563,
    },
    "wiki-rfa": {
        "url": "https://snap.stanford.edu/data/wiki-RfA.txt.gz",
        "page": "https://snap.stanford.edu/data/wiki-RfA.html",
        "sign_rule": "needs conversion to 'src dst vote' lines",
        "nodes": 11259, "pos": 138813, "neg": 39283,
    },
    "slashdot": {
        "url": "https://snap.stanford.edu/data/soc-sign-Slashdot090221.txt.gz",
        "page": "https://snap.stanford.edu/data/soc-sign-Slashdot090221.html",
        "sign_rule": "signed-column",
        "nodes": 82140, "pos": 425071, "neg": 124130,
    },
    "epinions": {
        "url": "https://snap.stanford.edu/data/soc-sign-epinions.txt.gz",
        "page": "https://snap.stanford.edu/data/soc-sign-epinions.html",
        "sign_rule": "signed-column",
        "nodes": 131827, "pos": 717667, "neg": 123704,
    },
}


class UsageError(SeloError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must look like start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"bad number in range {text!r}") from None
        if step <= 0 or not all(map(math.isfinite, (start, stop, step))):
            raise UsageError(f"range step must be positive and finite, got {text!r}")
        if stop < start:
            raise UsageError(f"range stop < start in {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad value list {text!r}") from None
    if not values:
        raise UsageError("no values given")
    return values


def _beta_arg(text):
    if text == "benchmark":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("beta must be 'benchmark' or a positive number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("beta must be positive")
    return value


def _add_run_flags(p):
    p.add_argument("dataset_path", nargs="?", help="edge-list file (.csv/.txt, optionally .gz)")
    p.add_argument("--from-report", metavar="JSON", help="reuse the config embedded in a report")
    p.add_argument("--sign-rule", choices=SIGN_RULES, default="threshold-at-zero")
    p.add_argument("-k", "--k", type=int, default=5, help="subgraph size (default 5)")
    p.add_argument("--alpha", type=float, default=0.005)
    p.add_argument("--beta", type=_beta_arg, default=None, help="'benchmark' (default) or a value")
    p.add_argument("--variant", choices=VARIANTS, default="concat")
    p.add_argument("--ordering", choices=ORDERINGS, default="selo")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--lr", "--learning-rate", dest="learning_rate", type=float, default=0.001)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=None, help="encoding processes (default: all cores)")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("-o", "--output", dest="output_path", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selo", description="Link sign prediction by signed subgraph encoding.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode every edge of a dataset into a feature file")
    _add_run_flags(p)
    p = sub.add_parser("evaluate", help="repeated split/train/test evaluation, JSON report")
    _add_run_flags(p)
    p = sub.add_parser("scan", help="evaluate over a range of beta or alpha values")
    _add_run_flags(p)
    p.add_argument("--scan", nargs=2, metavar=("PARAM", "RANGE"), required=True,
                   help="e.g. --scan beta 1.0:3.5:0.5")
    sub.add_parser("download-info", help="print dataset sources and expected statistics")
    return parser


def config_from_args(args) -> RunConfig:
    fields = ("dataset_path", "k", "alpha", "beta", "variant", "ordering", "train_fraction", "epochs",
              "batch_size", "learning_rate", "runs", "seed", "threads", "cache_dir", "output_path",
              "sign_rule")
    if args.from_report:
        try:
            with open(args.from_report, encoding="utf-8") as fh:
                embedded = json.load(fh)["config"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config from {args.from_report}: {exc}") from exc
        cfg = RunConfig.from_dict(embedded)
        overrides = {"output_path": args.output_path} if args.output_path else {}
        if args.dataset_path:
            overrides["dataset_path"] = args.dataset_path
        return cfg.replace(**overrides)
    try:
        return RunConfig(**{f: getattr(args, f) for f in fields})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def cmd_encode(cfg: RunConfig) -> Path:
    """Encode all edges (train split first, then test) of split ``cfg.seed``."""
    g, digest = load_dataset(cfg)
    split = split_edges(g, cfg.train_fraction, cfg.seed)
    edges, labels, n_train = _split_records(split)
    enc_cfg = cfg.encoder_config(seed=derive_seed(cfg.seed, "random-ordering"))
    beta = enc_cfg.resolve_beta(split.train)
    header = {"dataset": digest, "split_seed": cfg.seed, "fraction": cfg.train_fraction,
              "k": cfg.k, "alpha": cfg.alpha, "beta": beta, "variant": cfg.variant,
              "ordering": cfg.ordering,
              "ordering_seed": enc_cfg.seed if cfg.ordering == "random" else None}
    if cfg.output_path:
        out = Path(cfg.output_path)
    else:
        out = Path(cfg.cache_dir or ".") / cache.cache_name(header)
    if cache.lookup(out, header) is not None:
        print(f"cache hit: {out} ({len(edges)} edges)")
        return out
    t0 = time.perf_counter()
    enc = encode_edges(split.train, edges, enc_cfg, workers=cfg.threads, beta=beta)
    seconds = time.perf_counter() - t0
    try:
        cache.write_features(out, header, edges, labels, enc.features[cfg.variant], n_train=n_train)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from exc
    print(f"edges={len(edges)} mean_subgraph_size={enc.mean_size:.2f} "
          f"encode_seconds={seconds:.2f} beta={beta:.4f} -> {out}")
    return out


def cmd_evaluate(cfg: RunConfig) -> dict:
    report = run_experiment(cfg.dataset_path, cfg)
    out = report.to_dict()
    print(report.summary(), file=sys.stderr)
    _write_text(cfg.output_path, json.dumps(out, indent=2) + "\n")
    return out


def cmd_scan(cfg: RunConfig, parameter: str, values) -> list[dict]:
    rows = scan(cfg.dataset_path, parameter, values, cfg)
    table = scan_table(rows, parameter)
    path = cfg.output_path
    if path and str(path).endswith(".csv"):
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(table[0]))
                writer.writeheader()
                writer.writerows(table)
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
    else:
        doc = {"parameter": parameter, "config": cfg.to_dict(), "table": table,
               "reports": [r.to_dict() for _, r in rows]}
        _write_text(path, json.dumps(doc, indent=2) + "\n")
    return table


def cmd_download_info() -> None:
    print("Datasets are not downloaded automatically. Fetch them from SNAP:\n")
    for name, d in DATASETS.items():
        print(f"{name}:")
        print(f"  file:      {d['url']}")
        print(f"  page:      {d['page']}")
        print(f"  sign rule: {d['sign_rule']}")
        print(f"  expected:  nodes={d['nodes']} pos={d['pos']} neg={d['neg']} "
              f"edges={d['pos'] + d['neg']}")
    print("\nCompare the loaded graph's n_pos / n_neg against the expected counts "
          "to check the download.")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "download-info":
            cmd_download_info()
            return 0
        cfg = config_from_args(args)
        if cfg.dataset_path is None:
            raise UsageError("a dataset path is required")
        if args.command == "encode":
            cmd_encode(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg)
        elif args.command == "scan":
            parameter, spec = args.scan
            if parameter not in ("beta", "alpha"):
                raise UsageError(f"can only scan beta or alpha, not {parameter!r}")
            values = parse_range(spec)
            if any(v <= 0 for v in values):
                raise UsageError(f"{parameter} values must be positive")
            cmd_scan(cfg, parameter, values)
    except RunFailed as exc:
        cause = exc.cause
        code = getattr(cause, "exit_code", 2 if isinstance(cause, (OSError, ValueError)) else 1)
        print(f"selo: {exc}", file=sys.stderr)
        return code
    except SeloError as exc:
        print(f"selo: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"selo: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"selo: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
