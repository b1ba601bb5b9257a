"""Signed directed graphs: loading, neighborhood queries and edge splits."""

from __future__ import annotations

import gzip
import io
import logging
import os
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError, ParseError

log = logging.getLogger(__name__)

SIGN_RULES = ("threshold-at-zero", "signed-column")
_SEP = re.compile(r"[,\t ]+")


class SignedDigraph:
    """Immutable directed graph whose edges carry a sign in {+1, -1}.

    Nodes are the dense integers ``0 .. num_nodes - 1``.  ``node_labels``
    optionally keeps the identifiers the nodes had in the source file.
    """

    def __init__(self, num_nodes, src, dst, sign, node_labels=None):
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        sign = np.asarray(sign, dtype=np.int8).reshape(-1)
        if not (len(src) == len(dst) == len(sign)):
            raise ValueError("src, dst and sign must have the same length")
        num_nodes = int(num_nodes)
        if num_nodes < 0:
            raise ValueError("num_nodes must be non-negative")
        if len(src):
            if min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_nodes:
                raise ValueError("node ids must lie in [0, num_nodes)")
            if not np.all(np.abs(sign) == 1):
                raise ValueError("edge signs must be +1 or -1")
            if np.any(src == dst):
                raise ValueError("self-loops are not allowed")
        # canonical edge order: by (src, dst)
        order = np.lexsort((dst, src))
        src, dst, sign = src[order], dst[order], sign[order]
        if len(src) > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate edge ({src[i]}, {dst[i]})")

        self._n = num_nodes
        self._src, self._dst, self._sign = src, dst, sign
        for a in (self._src, self._dst, self._sign):
            a.setflags(write=False)
        self._out = sp.csr_matrix(
            (sign.astype(np.int8), (src, dst)), shape=(num_nodes, num_nodes)
        )
        self._in = self._out.T.tocsr()
        self._out.sort_indices()
        self._in.sort_indices()
        self.node_labels = tuple(node_labels) if node_labels is not None else None

    # -- basic attributes -------------------------------------------------
    @property
    def num_nodes(self) -> int:
        return self._n

    @property
    def num_edges(self) -> int:
        return len(self._src)

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self._sign > 0))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self._sign < 0))

    @property
    def src(self) -> np.ndarray:
        return self._src

    @property
    def dst(self) -> np.ndarray:
        return self._dst

    @property
    def sign(self) -> np.ndarray:
        return self._sign

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Signed adjacency ``A`` as a read-only CSR matrix (rows are sources)."""
        return self._out

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self._src.tolist(), self._dst.tolist(), self._sign.tolist()))

    def edge_set(self) -> set[tuple[int, int, int]]:
        return set(self.edges())

    def _check_node(self, v):
        if not 0 <= v < self._n:
            raise ValueError(f"node {v} out of range [0, {self._n})")

    def out_adj(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Out-neighbors of ``v`` and the signs of the connecting edges."""
        self._check_node(v)
        lo, hi = self._out.indptr[v], self._out.indptr[v + 1]
        return self._out.indices[lo:hi], self._out.data[lo:hi]

    def in_adj(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        self._check_node(v)
        lo, hi = self._in.indptr[v], self._in.indptr[v + 1]
        return self._in.indices[lo:hi], self._in.data[lo:hi]

    def neighbor_array(self, v: int) -> np.ndarray:
        """Sorted array of nodes adjacent to ``v`` in either direction."""
        out, _ = self.out_adj(v)
        inn, _ = self.in_adj(v)
        nb = np.union1d(out, inn)
        return nb[nb != v]

    def sign_of(self, u: int, v: int) -> int:
        """Sign of edge ``(u, v)``, or 0 when absent."""
        self._check_node(u)
        self._check_node(v)
        return int(self._out[u, v])

    def induced(self, nodes: Sequence[int]) -> np.ndarray:
        """Dense signed adjacency of the subgraph induced by ``nodes`` (in that order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        return self._out[nodes][:, nodes].toarray().astype(np.int8)

    def __eq__(self, other):
        if not isinstance(other, SignedDigraph):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._src, other._src)
            and np.array_equal(self._dst, other._dst)
            and np.array_equal(self._sign, other._sign)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"SignedDigraph(num_nodes={self._n}, num_edges={self.num_edges}, "
            f"n_pos={self.n_pos}, n_neg={self.n_neg})"
        )


@dataclass
class LoadReport:
    lines: int = 0
    comments: int = 0
    self_loops: int = 0
    duplicates: int = 0


def _open_text(source):
    """Accept a path, a binary stream or a text stream; transparently gunzip."""
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        try:
            if path.endswith(".gz"):
                return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
            return open(path, "r", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def _parse_value(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(f"value {tok!r} is not a number", lineno) from None
        if not np.isfinite(v):
            raise ParseError(f"value {tok!r} is not finite", lineno)
        return v


def read_edge_list(source, sign_rule: str = "threshold-at-zero") -> tuple[SignedDigraph, LoadReport]:
    """Parse an edge list into a graph plus a report of what was dropped.

    Lines look like ``src<sep>dst<sep>value[<sep>ignored...]`` where the
    separator is a tab, comma or space.  Blank lines and lines starting
    with ``#`` are skipped.  Node identifiers are compacted to a dense
    range in sorted order of the original identifiers.
    """
    if sign_rule not in SIGN_RULES:
        raise ValueError(f"sign_rule must be one of {SIGN_RULES}, got {sign_rule!r}")
    report = LoadReport()
    last: dict[tuple, int] = {}
    with _open_text(source) as fh:
        for lineno, raw in enumerate(fh, start=1):
            report.lines += 1
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                report.comments += 1
                continue
            parts = _SEP.split(line)
            if len(parts) < 3:
                raise ParseError(f"expected 'src dst value', got {line!r}", lineno)
            u, v, tok = parts[0], parts[1], parts[2]
            value = _parse_value(tok, lineno)
            if value == 0:
                raise DataError(f"line {lineno}: edge ({u}, {v}) has value 0, sign undefined")
            if sign_rule == "signed-column" and value not in (1, -1):
                raise DataError(f"line {lineno}: signed-column value must be +1 or -1, got {tok}")
            if u == v:
                report.self_loops += 1
                continue
            key = (u, v)
            if key in last:
                report.duplicates += 1
                del last[key]  # keep insertion order of the last occurrence
            last[key] = 1 if value > 0 else -1

    if report.self_loops:
        log.warning("skipped %d self-loop(s)", report.self_loops)

    labels = {x for pair in last for x in pair}
    try:
        ordered = sorted(labels, key=int)
    except ValueError:
        ordered = sorted(labels)
    index = {lab: i for i, lab in enumerate(ordered)}
    m = len(last)
    src = np.fromiter((index[u] for u, _ in last), dtype=np.int64, count=m)
    dst = np.fromiter((index[v] for _, v in last), dtype=np.int64, count=m)
    sign = np.fromiter(last.values(), dtype=np.int8, count=m)
    labels_out = [int(x) if _is_int(x) else x for x in ordered]
    return SignedDigraph(len(ordered), src, dst, sign, node_labels=labels_out), report


def _is_int(tok):
    try:
        int(tok)
    except ValueError:
        return False
    return True


def load_edge_list(source, sign_rule: str = "threshold-at-zero") -> SignedDigraph:
    return read_edge_list(source, sign_rule)[0]


def write_edge_list(g: SignedDigraph, dest, sep: str = ",") -> None:
    """Write ``g`` as ``src,dst,sign`` lines (original labels when known)."""
    labels = g.node_labels
    lines = []
    for u, v, s in g.edges():
        if labels is not None:
            u, v = labels[u], labels[v]
        lines.append(f"{u}{sep}{v}{sep}{s}\n")
    text = "".join(lines)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text if isinstance(dest, io.TextIOBase) else text.encode("utf-8"))


def neighborhood(g: SignedDigraph, v: int) -> frozenset[int]:
    """1-hop neighborhood: union of out- and in-neighbors, excluding ``v``."""
    return frozenset(g.neighbor_array(v).tolist())


def undirected_distances(adj: Sequence[Iterable[int]], sources: Iterable[int]) -> np.ndarray:
    """Multi-source BFS hop counts over symmetric neighbor lists.

    Unreachable nodes get ``inf``.
    """
    n = len(adj)
    dist = np.full(n, np.inf)
    queue = deque()
    for s in sources:
        if dist[s] != 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] == np.inf:
                dist[w] = du
                queue.append(w)
    return dist


def dense_distances(und: np.ndarray, sources: Iterable[int]) -> np.ndarray:
    """Same as :func:`undirected_distances` for a dense boolean symmetric matrix."""
    und = np.asarray(und, dtype=bool)
    n = und.shape[0]
    dist = np.full(n, np.inf)
    frontier = np.zeros(n, dtype=bool)
    frontier[list(sources)] = True
    seen = frontier.copy()
    dist[frontier] = 0
    d = 0
    while frontier.any():
        d += 1
        frontier = und[frontier].any(axis=0) & ~seen
        dist[frontier] = d
        seen |= frontier
    return dist


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class EdgeSplit:
    train: SignedDigraph
    test_edges: list = field(repr=False)
    fraction: float
    seed: int

    @property
    def train_edges(self) -> list[tuple[int, int, int]]:
        return self.train.edges()


def split_edges(g: SignedDigraph, fraction: float = 0.8, seed: int = 0) -> EdgeSplit:
    """Stratified random split of the edges into a training graph and test edges.

    Each sign class contributes ``round(fraction * n_class)`` edges to the
    training graph, so the sign ratio is preserved.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for s in (1, -1):
        idx = np.flatnonzero(g.sign == s)
        idx = idx[rng.permutation(len(idx))]
        k = _round_half_up(fraction * len(idx))
        train_idx.append(idx[:k])
        test_idx.append(idx[k:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    train = SignedDigraph(g.num_nodes, g.src[tr], g.dst[tr], g.sign[tr], node_labels=g.node_labels)
    test = list(zip(g.src[te].tolist(), g.dst[te].tolist(), g.sign[te].tolist()))
    return EdgeSplit(train=train, test_edges=test, fraction=fraction, seed=seed)
