"""Subgraph encoding: re-weighting, likelihood matrices, node ordering.

An enclosing subgraph is turned into three likelihood matrices obtained
from the closed-form linear-optimization (LO) link predictor applied to the
subgraph's weighted adjacency.  Each matrix is reordered by a per-node
importance score, pruned (or zero padded) to ``k x k`` and flattened.
"""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NumericError
from .graph import SignedDigraph, dense_distances
from .subgraph import EnclosingSubgraph, extract

log = logging.getLogger(__name__)

VARIANTS = ("concat", "adj", "weight", "s1", "s2", "s3")
ORDERINGS = ("selo", "random")
TIE_DIGITS = 9


@dataclass(frozen=True)
class EncoderConfig:
    k: int = 5
    alpha: float = 0.005
    beta: float | None = None  # None -> benchmark value from the graph's sign counts
    variant: str = "concat"
    ordering: str = "selo"
    seed: int = 0  # only used by ordering="random"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta is not None and not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")

    @property
    def beta_mode(self) -> str:
        return "benchmark" if self.beta is None else "explicit"

    def resolve_beta(self, g: SignedDigraph) -> float:
        if self.beta is not None:
            return float(self.beta)
        return benchmark_beta(g.n_pos, g.n_neg)

    def feature_length(self, variant: str | None = None) -> int:
        variant = variant or self.variant
        return (3 if variant == "concat" else 1) * self.k * self.k

    def to_dict(self) -> dict:
        return asdict(self)


def benchmark_beta(n_pos: int, n_neg: int) -> float:
    """Negative-edge scaling factor ``1 + log10(n_pos / n_neg)``."""
    if n_pos < 1 or n_neg < 1:
        raise ValueError(f"need at least one edge of each sign, got n_pos={n_pos}, n_neg={n_neg}")
    beta = 1.0 + float(np.log10(n_pos / n_neg))
    if beta < 1.0:
        warnings.warn(
            f"benchmark beta {beta:.4f} < 1: negative edges outnumber positive ones",
            RuntimeWarning,
            stacklevel=2,
        )
    return beta


@dataclass(frozen=True)
class WeightMatrix:
    """Weighted subgraph adjacency.

    ``edge_dist[i, j]`` is the hop distance used for edge ``(i, j)`` and is
    ``inf`` where there is no edge.
    """

    w: np.ndarray
    beta: float
    edge_dist: np.ndarray = field(repr=False)


def reweight(sg: EnclosingSubgraph, beta: float) -> WeightMatrix:
    """Weight each subgraph edge by sign and distance to the targets.

    An edge's distance is the smaller undirected hop distance of its two
    endpoints to {target 0, target 1}.  Positive edges get ``1/(d+1)``,
    negative edges ``-beta/(d+1)``; unreachable edges get 0.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    adj = sg.adj
    node_dist = dense_distances((adj != 0) | (adj.T != 0), (0, 1))
    pair_dist = np.minimum.outer(node_dist, node_dist)
    edge_dist = np.where(adj != 0, pair_dist, np.inf)
    scale = np.where(adj > 0, 1.0, np.where(adj < 0, -beta, 0.0))
    with np.errstate(invalid="ignore"):
        w = np.where(np.isfinite(edge_dist), scale / (edge_dist + 1.0), 0.0)
    return WeightMatrix(w=w, beta=float(beta), edge_dist=edge_dist)


def _check_finite(w, name="W"):
    if not np.all(np.isfinite(w)):
        raise NumericError(f"{name} contains non-finite entries")


def solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``m @ x = b`` by LU factorization with partial pivoting."""
    try:
        x = np.linalg.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"linear solve failed: {exc}") from exc
    return x


def likelihood_matrices(w: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three LO likelihood matrices of a weighted adjacency ``w``.

    s1 = a W (a W'W + I)^-1 W'W
    s2 = a W' (a WW' + I)^-1 W^2
    s3 = a W^2 (a W'W + I)^-1 W'
    """
    w = np.asarray(w, dtype=float)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
        raise ValueError(f"w must be a non-empty square matrix, got shape {w.shape}")
    _check_finite(w)
    m = w.shape[0]
    eye = np.eye(m)
    wt = w.T
    wtw = wt @ w
    wwt = w @ wt
    w2 = w @ w
    # one factorization of (a W'W + I) serves both s1 and s3
    x13 = solve(alpha * wtw + eye, np.hstack([wtw, wt]))
    s1 = alpha * (w @ x13[:, :m])
    s3 = alpha * (w2 @ x13[:, m:])
    s2 = alpha * (wt @ solve(alpha * wwt + eye, w2))
    for name, s in (("s1", s1), ("s2", s2), ("s3", s3)):
        _check_finite(s, name)
    return s1, s2, s3


def neumann_bound(w: np.ndarray, alpha: float) -> float:
    """Cheap upper bound on ``alpha * lambda_max(W'W)`` (squared Frobenius norm)."""
    return float(alpha * np.sum(np.square(w)))


def neumann_likelihood(w: np.ndarray, alpha: float, terms: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Likelihood matrices from a ``terms``-long truncated Neumann series.

    Falls back to :func:`likelihood_matrices` when the series is not
    guaranteed to converge.
    """
    if terms < 1:
        raise ValueError(f"terms must be at least 1, got {terms}")
    w = np.asarray(w, dtype=float)
    _check_finite(w)
    if neumann_bound(w, alpha) >= 1.0:
        warnings.warn(
            "Neumann series may diverge (alpha * ||W||_F^2 >= 1); using the exact solution",
            RuntimeWarning,
            stacklevel=2,
        )
        return likelihood_matrices(w, alpha)
    wt = w.T
    wtw = wt @ w
    wwt = w @ wt
    p1 = wtw.copy()  # (W'W)^(k+1)
    p3 = wwt.copy()  # (WW')^(k+1)
    s1 = np.zeros_like(w)
    s2 = np.zeros_like(w)
    s3 = np.zeros_like(w)
    coef = alpha
    for k in range(terms):
        s1 += coef * (w @ p1)
        s2 += coef * (p1 @ w)
        s3 += coef * (w @ p3)
        p1 = p1 @ wtw
        p3 = p3 @ wwt
        coef *= -alpha
    return s1, s2, s3


def lo_contribution(a: np.ndarray, alpha: float) -> np.ndarray:
    """Optimal contribution matrix ``Z* = a (a A'A + I)^-1 A'A``."""
    a = np.asarray(a, dtype=float)
    _check_finite(a, "A")
    ata = a.T @ a
    return alpha * solve(alpha * ata + np.eye(a.shape[0]), ata)


def global_lo_scores(a: np.ndarray, alpha: float) -> np.ndarray:
    """Whole-graph LO likelihoods ``S = A Z*``.

    ``S[i, j]`` sums the contributions ``Z[k, j]`` of the out-neighbors ``k``
    of ``i``, weighted by the edge signs.
    """
    a = np.asarray(a, dtype=float)
    return a @ lo_contribution(a, alpha)


class LikelihoodRows:
    """Selected rows of the three likelihood matrices without forming them.

    Uses one LU factorization each of ``a W'W + I`` and ``a WW' + I`` and
    solves only for the requested rows/columns, which is what encoding
    needs (rows/columns of the targets plus the ``k`` kept nodes).
    Agrees with :func:`likelihood_matrices` to rounding error.
    """

    def __init__(self, w: np.ndarray, alpha: float):
        w = np.asarray(w, dtype=float)
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        _check_finite(w)
        m = w.shape[0]
        self.alpha = alpha
        self.w = w
        self.wtw = w.T @ w
        self.w2 = w @ w
        eye = np.eye(m)
        try:
            self._lu1 = sla.lu_factor(alpha * self.wtw + eye, check_finite=False)
            self._lu2 = sla.lu_factor(alpha * (w @ w.T) + eye, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NumericError(f"factorization failed: {exc}") from exc

    def _solve1(self, b):
        return sla.lu_solve(self._lu1, b, check_finite=False)

    def _solve2(self, b):
        return sla.lu_solve(self._lu2, b, check_finite=False)

    # both shifted Gram matrices are symmetric, so row i of (M^-1) X is
    # (M^-1 X^T[:, i])^T
    def rows(self, which: int, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        a, w = self.alpha, self.w
        if which == 0:
            return a * (self._solve1(w[idx].T).T @ self.wtw)
        if which == 1:
            return a * (self._solve2(w[:, idx]).T @ self.w2)
        if which == 2:
            return a * (w @ self._solve1(self.w2[idx].T)).T
        raise ValueError(f"which must be 0, 1 or 2, got {which}")

    def cols(self, which: int, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        a, w = self.alpha, self.w
        if which == 0:
            return a * (w @ self._solve1(self.wtw[:, idx]))
        if which == 1:
            return a * (w.T @ self._solve2(self.w2[:, idx]))
        if which == 2:
            return a * (self.w2 @ self._solve1(w[idx].T))
        raise ValueError(f"which must be 0, 1 or 2, got {which}")

    def scores(self, which: int) -> np.ndarray:
        """Importance scores of nodes 2.. computed from rows/cols 0 and 1 only."""
        r = np.abs(self.rows(which, [0, 1]))
        c = np.abs(self.cols(which, [0, 1]))
        return r[0, 2:] + c[2:, 0] + r[1, 2:] + c[2:, 1]

    def block(self, which: int, keep, k: int) -> np.ndarray:
        """``k x k`` matrix of entries between ``keep`` nodes, zero-padded."""
        keep = np.asarray(keep, dtype=np.int64)[:k]
        out = np.zeros((k, k))
        n = len(keep)
        out[:n, :n] = self.rows(which, keep)[:, keep]
        return out


def importance_scores(s: np.ndarray) -> np.ndarray:
    """Per-node importance: summed absolute likelihood to and from both targets."""
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 2:
        raise ValueError(f"need a square matrix of size >= 2, got shape {s.shape}")
    a = np.abs(s)
    return a[0, 2:] + a[2:, 0] + a[1, 2:] + a[2:, 1]


def node_order(scores, hop_of=None, node_ids=None) -> np.ndarray:
    """Full index order: targets first, then by (score desc, hop asc, id asc)."""
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    hop = np.zeros(n) if hop_of is None else np.asarray(hop_of)[2:]
    ids = np.arange(n) if node_ids is None else np.asarray(node_ids)[2:]
    # scores equal up to rounding noise count as ties
    top = np.max(scores) if n else 0.0
    key = np.round(scores / top, TIE_DIGITS) if top > 0 else scores
    rest = np.lexsort((ids, hop, -key)) + 2
    return np.concatenate([[0, 1], rest]).astype(np.int64)


def permute_prune(s: np.ndarray, order: np.ndarray, k: int) -> np.ndarray:
    """Apply ``order`` to rows and columns, keep the leading ``k`` x ``k`` block."""
    keep = np.asarray(order)[:k]
    out = np.zeros((k, k), dtype=float)
    n = len(keep)
    out[:n, :n] = s[np.ix_(keep, keep)]
    return out


def order_and_prune(s, scores, k, hop_of=None, node_ids=None) -> np.ndarray:
    """Reorder non-target nodes by descending score; truncate or zero-pad to ``k``."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    return permute_prune(np.asarray(s, dtype=float), node_order(scores, hop_of, node_ids), k)


@dataclass(frozen=True)
class LikelihoodTriple:
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    scores: tuple

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.s1.ravel(), self.s2.ravel(), self.s3.ravel()])


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int
    edge: tuple


def _random_order(m, seed, x, y):
    rng = np.random.default_rng([seed, x, y])
    return np.concatenate([[0, 1], rng.permutation(m - 2) + 2]).astype(np.int64)


def encode_subgraph(sg: EnclosingSubgraph, cfg: EncoderConfig, beta: float, variants=None) -> dict[str, np.ndarray]:
    """Encode an extracted subgraph into one feature vector per requested variant."""
    variants = (cfg.variant,) if variants is None else tuple(variants)
    k = cfg.k
    if sg.m < k:
        log.debug("subgraph of (%d, %d) has %d < k=%d nodes; zero-padding",
                  sg.nodes[0], sg.nodes[1], sg.m, k)
    wm = reweight(sg, beta)
    lik = LikelihoodRows(wm.w, cfg.alpha)

    orders = {}

    def order(i):
        if i not in orders:
            if cfg.ordering == "random":
                orders[i] = _random_order(sg.m, cfg.seed, int(sg.nodes[0]), int(sg.nodes[1]))
            else:
                orders[i] = node_order(lik.scores(i), sg.hop_of, sg.nodes)
        return orders[i]

    blocks = {}

    def mat(i):
        if i not in blocks:
            blocks[i] = lik.block(i, order(i), k)
        return blocks[i]

    out = {}
    for v in variants:
        if v == "concat":
            out[v] = np.concatenate([mat(0).ravel(), mat(1).ravel(), mat(2).ravel()])
        elif v in ("s1", "s2", "s3"):
            out[v] = mat(int(v[1]) - 1).ravel()
        elif v == "adj":
            out[v] = permute_prune(sg.adj.astype(float), order(0), k).ravel()
        elif v == "weight":
            out[v] = permute_prune(wm.w, order(0), k).ravel()
        else:
            raise ValueError(f"unknown variant {v!r}")
    return out


def likelihood_triple(g: SignedDigraph, x: int, y: int, cfg: EncoderConfig) -> LikelihoodTriple:
    """Ordered, pruned likelihood matrices of edge ``(x, y)`` (SELO ordering)."""
    sg = extract(g, x, y, cfg.k)
    lik = LikelihoodRows(reweight(sg, cfg.resolve_beta(g)).w, cfg.alpha)
    out, scores = [], []
    for i in range(3):
        b = lik.scores(i)
        order = node_order(b, sg.hop_of, sg.nodes)
        out.append(lik.block(i, order, cfg.k))
        scores.append(b[order[2:cfg.k] - 2])
    return LikelihoodTriple(*out, scores=tuple(scores))


def encode_edge(g_train: SignedDigraph, x: int, y: int, cfg: EncoderConfig, beta: float | None = None) -> np.ndarray:
    """Feature vector of edge ``(x, y)`` against the training graph."""
    if beta is None:
        beta = cfg.resolve_beta(g_train)
    sg = extract(g_train, x, y, cfg.k)
    return encode_subgraph(sg, cfg, beta)[cfg.variant]


@dataclass
class EncodedEdges:
    features: dict  # variant -> (n_edges, feature_length) array
    sizes: np.ndarray  # extracted subgraph size per edge
    beta: float

    @property
    def mean_size(self) -> float:
        return float(self.sizes.mean()) if len(self.sizes) else 0.0


_worker_graph = None


def _init_worker(g):
    global _worker_graph
    _worker_graph = g


def _encode_chunk(args):
    pairs, cfg, beta, variants = args
    return _encode_pairs(_worker_graph, pairs, cfg, beta, variants)


def _encode_pairs(g, pairs, cfg, beta, variants):
    feats = {v: np.empty((len(pairs), cfg.feature_length(v))) for v in variants}
    sizes = np.empty(len(pairs), dtype=np.int64)
    for i, (x, y) in enumerate(pairs):
        sg = extract(g, x, y, cfg.k)
        sizes[i] = sg.m
        enc = encode_subgraph(sg, cfg, beta, variants)
        for v in variants:
            feats[v][i] = enc[v]
    return feats, sizes


def encode_edges(g_train: SignedDigraph, pairs, cfg: EncoderConfig, variants=None,
                 workers: int | None = 1, beta: float | None = None, chunk_size: int = 512) -> EncodedEdges:
    """Encode many ``(x, y)`` pairs, optionally over a process pool.

    Results do not depend on ``workers``: each edge is encoded independently.
    """
    variants = (cfg.variant,) if variants is None else tuple(variants)
    if beta is None:
        beta = cfg.resolve_beta(g_train)
    pairs = [(int(p[0]), int(p[1])) for p in pairs]
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(pairs) <= chunk_size:
        feats, sizes = _encode_pairs(g_train, pairs, cfg, beta, variants)
        return EncodedEdges(feats, sizes, beta)

    chunks = [pairs[i:i + chunk_size] for i in range(0, len(pairs), chunk_size)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(g_train,)) as pool:
        parts = list(pool.map(_encode_chunk, [(c, cfg, beta, variants) for c in chunks]))
    feats = {v: np.concatenate([p[0][v] for p in parts]) for v in variants}
    sizes = np.concatenate([p[1] for p in parts])
    return EncodedEdges(feats, sizes, beta)
