"""Experiment orchestration: repeated splits, ablations and parameter scans."""

from __future__ import annotations

import dataclasses
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache, model
from .encoder import EncoderConfig, encode_edges
from .graph import SignedDigraph, read_edge_list, split_edges
from .metrics import METRIC_NAMES, Metrics, evaluate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str | None = None
    k: int = 5
    alpha: float = 0.005
    beta: float | None = None  # None -> benchmark from the training split
    variant: str = "concat"
    ordering: str = "selo"
    train_fraction: float = 0.8
    epochs: int = 100
    batch_size: int = 512
    learning_rate: float = 0.001
    runs: int = 5
    seed: int = 1
    threads: int | None = None
    cache_dir: str | None = None
    output_path: str | None = None
    sign_rule: str = "threshold-at-zero"

    def __post_init__(self):
        # fail early on bad values
        self.encoder_config()
        self.train_config()
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")

    def encoder_config(self, seed: int = 0) -> EncoderConfig:
        return EncoderConfig(k=self.k, alpha=self.alpha, beta=self.beta, variant=self.variant,
                             ordering=self.ordering, seed=seed)

    def train_config(self, shuffle_seed: int = 0) -> model.TrainConfig:
        return model.TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                                 epochs=self.epochs, shuffle_seed=shuffle_seed)

    @property
    def beta_mode(self) -> str:
        return "benchmark" if self.beta is None else "explicit"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["beta_mode"] = self.beta_mode
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def derive_seed(seed: int, name: str) -> int:
    """Independent named sub-stream of ``seed`` (split, init, shuffle, ...)."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class RunResult:
    seed: int
    metrics: Metrics
    encode_seconds: float
    train_seconds: float
    beta: float
    mean_subgraph_size: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "metrics": self.metrics.to_dict(),
            "encode_seconds": self.encode_seconds,
            "train_seconds": self.train_seconds,
            "beta": self.beta,
            "mean_subgraph_size": self.mean_subgraph_size,
        }


@dataclass
class ExperimentReport:
    dataset: str
    config: RunConfig
    runs: list = field(default_factory=list)

    def _stack(self):
        return {m: np.array([getattr(r.metrics, m) for r in self.runs]) for m in METRIC_NAMES}

    @property
    def mean(self) -> dict:
        return {m: float(v.mean()) for m, v in self._stack().items()}

    @property
    def std(self) -> dict:
        return {m: float(v.std()) for m, v in self._stack().items()}

    def to_dict(self) -> dict:
        cfg = self.config.to_dict()
        if self.runs:
            cfg["beta_value"] = self.runs[0].beta if len({r.beta for r in self.runs}) == 1 else [r.beta for r in self.runs]
        return {
            "dataset": self.dataset,
            "config": cfg,
            "runs": [r.to_dict() for r in self.runs],
            "mean": self.mean,
            "std": self.std,
        }

    def summary(self) -> str:
        mean, std = self.mean, self.std
        return "  ".join(f"{m}={mean[m]:.4f}±{std[m]:.4f}" for m in METRIC_NAMES)


class RunFailed(RuntimeError):
    def __init__(self, run_index, cause):
        super().__init__(f"run {run_index} failed: {cause}")
        self.run_index = run_index
        self.cause = cause


def load_dataset(cfg_or_path, sign_rule="threshold-at-zero") -> tuple[SignedDigraph, str]:
    """Graph plus a content digest used for cache keys."""
    path = cfg_or_path.dataset_path if isinstance(cfg_or_path, RunConfig) else cfg_or_path
    if isinstance(cfg_or_path, RunConfig):
        sign_rule = cfg_or_path.sign_rule
    if path is None:
        raise ValueError("no dataset path given")
    g, report = read_edge_list(path, sign_rule)
    log.info("loaded %s: %r (%d self-loops skipped)", path, g, report.self_loops)
    return g, cache.file_digest(path)


def _resolve(dataset, cfg):
    if isinstance(dataset, SignedDigraph):
        return dataset, cache.graph_digest(dataset), "<in-memory>"
    path = dataset if dataset is not None else cfg.dataset_path
    g, digest = load_dataset(path, cfg.sign_rule)
    return g, digest, str(path)


def _encode_split(g_train, split_key, records, n_train, enc_cfg, variants, workers, cache_dir):
    """Encode every record against ``g_train`` for all ``variants``.

    ``records`` is ``(edges, labels)`` with the ``n_train`` training edges
    first.  Cached feature files are reused when their header matches.
    """
    edges, labels = records
    beta = enc_cfg.resolve_beta(g_train)
    headers = {
        v: dict(split_key, k=enc_cfg.k, alpha=enc_cfg.alpha, beta=beta, variant=v,
                ordering=enc_cfg.ordering,
                ordering_seed=enc_cfg.seed if enc_cfg.ordering == "random" else None)
        for v in variants
    }
    feats, todo = {}, []
    for v in variants:
        hit = None
        if cache_dir:
            hit = cache.lookup(Path(cache_dir) / cache.cache_name(headers[v]), headers[v])
        if hit is not None and len(hit[3]) == len(edges):
            feats[v] = hit[3]
        else:
            todo.append(v)
    sizes = None
    if todo:
        enc = encode_edges(g_train, edges, enc_cfg, variants=todo, workers=workers, beta=beta)
        sizes = enc.sizes
        for v in todo:
            feats[v] = enc.features[v]
            if cache_dir:
                cache.write_features(Path(cache_dir) / cache.cache_name(headers[v]), headers[v],
                                     edges, labels, feats[v], n_train=n_train)
    return {v: (f[:n_train], f[n_train:]) for v, f in feats.items()}, beta, sizes


def _split_records(split):
    train = split.train.edges()
    test = split.test_edges
    edges = [(u, v) for u, v, _ in train] + [(u, v) for u, v, _ in test]
    labels = np.array([s for *_, s in train] + [s for *_, s in test], dtype=np.int64)
    return edges, labels, len(train)


def _run_split(g, digest, cfg: RunConfig, run_index: int, variants):
    split_seed = cfg.seed + run_index
    split = split_edges(g, cfg.train_fraction, split_seed)
    edges, labels, n_train = _split_records(split)
    enc_cfg = cfg.encoder_config(seed=derive_seed(split_seed, "random-ordering"))
    split_key = {"dataset": digest, "split_seed": split_seed, "fraction": cfg.train_fraction}

    t0 = time.perf_counter()
    feats, beta, sizes = _encode_split(split.train, split_key, (edges, labels), n_train,
                                       enc_cfg, variants, cfg.threads, cfg.cache_dir)
    encode_seconds = time.perf_counter() - t0
    mean_size = float(np.mean(sizes)) if sizes is not None and len(sizes) else None

    y_train, y_test = labels[:n_train], labels[n_train:]
    results = {}
    for v in variants:
        x_train, x_test = feats[v]
        t0 = time.perf_counter()
        params = model.init(x_train.shape[1], seed=derive_seed(split_seed, "init"))
        params = model.train(params, x_train, y_train, cfg.train_config(derive_seed(split_seed, "shuffle")))
        train_seconds = time.perf_counter() - t0
        metrics = evaluate(model.predict_proba(params, x_test), y_test)
        results[v] = RunResult(split_seed, metrics, encode_seconds, train_seconds, beta, mean_size)
        log.info("run %d (%s): %s", run_index, v, metrics)
    return results


def run_ablation(dataset, cfg: RunConfig, variants) -> dict[str, ExperimentReport]:
    """One report per encoding variant; each split is encoded only once."""
    g, digest, name = _resolve(dataset, cfg)
    variants = tuple(variants)
    reports = {v: ExperimentReport(name, cfg.replace(variant=v)) for v in variants}
    for r in range(cfg.runs):
        try:
            res = _run_split(g, digest, cfg, r, variants)
        except Exception as exc:
            raise RunFailed(r, exc) from exc
        for v in variants:
            reports[v].runs.append(res[v])
    return reports


def run_experiment(dataset, cfg: RunConfig, n_runs: int | None = None, base_seed: int | None = None) -> ExperimentReport:
    """Repeat split -> encode -> train -> score for ``n_runs`` seeds.

    Run ``r`` uses split seed ``base_seed + r``; the training graph of that
    split supplies beta (unless fixed in ``cfg``) and the subgraphs.
    """
    changes = {}
    if n_runs is not None:
        changes["runs"] = n_runs
    if base_seed is not None:
        changes["seed"] = base_seed
    cfg = cfg.replace(**changes) if changes else cfg
    return run_ablation(dataset, cfg, (cfg.variant,))[cfg.variant]


SCAN_PARAMETERS = ("beta", "alpha")


def scan(dataset, parameter: str, values, cfg: RunConfig) -> list[tuple[float, ExperimentReport]]:
    """Re-run the experiment for each value of ``parameter``, all else fixed."""
    if parameter not in SCAN_PARAMETERS:
        raise ValueError(f"parameter must be one of {SCAN_PARAMETERS}, got {parameter!r}")
    values = list(values)
    if not values:
        raise ValueError("scan needs at least one value")
    if not isinstance(dataset, SignedDigraph):
        dataset, _, _ = _resolve(dataset, cfg)
    return [(float(v), run_experiment(dataset, cfg.replace(**{parameter: float(v)}))) for v in values]


def scan_table(rows, parameter) -> list[dict]:
    table = []
    for value, report in rows:
        row = {parameter: value}
        mean, std = report.mean, report.std
        for m in METRIC_NAMES:
            row[m] = mean[m]
            row[f"{m}_std"] = std[m]
        table.append(row)
    return table
