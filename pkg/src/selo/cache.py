"""On-disk feature cache: one CSV per (dataset, split, encoder config, variant).

File layout::

    # selo-features {"k": 5, "alpha": 0.005, ..., "n_train": 19348}
    src,dst,label,f0,f1,...
    12,40,1,0.0,...

The first line is a JSON header.  A cache file is only reused when its
header matches the requested one exactly (``n_train`` aside).
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = "# selo-features "


def file_digest(path, chunk=1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        while block := fh.read(chunk):
            h.update(block)
    return h.hexdigest()


def graph_digest(g) -> str:
    h = hashlib.sha256()
    h.update(np.int64(g.num_nodes).tobytes())
    for a in (g.src, g.dst, g.sign):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def cache_name(header: dict) -> str:
    blob = json.dumps(header, sort_keys=True).encode()
    return f"features-{hashlib.sha256(blob).hexdigest()[:20]}.csv"


def write_features(path, header: dict, edges, labels, features, n_train: int | None = None) -> None:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    features = np.asarray(features, dtype=float)
    if not (len(edges) == len(labels) == len(features)):
        raise ValueError("edges, labels and features differ in length")
    full = dict(header)
    if n_train is not None:
        full["n_train"] = int(n_train)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    cols = ["src", "dst", "label"] + [f"f{i}" for i in range(features.shape[1])]
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MAGIC + json.dumps(full, sort_keys=True) + "\n")
        fh.write(",".join(cols) + "\n")
        for (u, v), lab, row in zip(edges, labels, features):
            fh.write(f"{u},{v},{lab}," + ",".join(repr(float(x)) for x in row) + "\n")
    os.replace(tmp, path)


def read_header(path) -> dict | None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
    except FileNotFoundError:
        return None
    if not first.startswith(MAGIC):
        return None
    try:
        return json.loads(first[len(MAGIC):])
    except json.JSONDecodeError:
        return None


def read_features(path):
    """Return ``(header, edges, labels, features)``."""
    header = read_header(path)
    if header is None:
        raise DataError(f"{path}: not a feature cache file")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    if data.size == 0:
        return header, np.empty((0, 2), np.int64), np.empty(0, np.int64), np.empty((0, 0))
    edges = data[:, :2].astype(np.int64)
    labels = data[:, 2].astype(np.int64)
    return header, edges, labels, data[:, 3:]


def lookup(path, header: dict):
    """Cached contents if ``path`` exists with a matching header, else ``None``."""
    found = read_header(path)
    if found is None:
        return None
    found = {k: v for k, v in found.items() if k != "n_train"}
    if found != json.loads(json.dumps(header, sort_keys=True)):
        return None
    return read_features(path)
