"""Enclosing-subgraph extraction around a target node pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import SignedDigraph


@dataclass(frozen=True)
class EnclosingSubgraph:
    """Nodes around a target pair and their induced signed adjacency.

    ``nodes[0]`` and ``nodes[1]`` are the targets.  ``adj[0, 1]`` is always
    zero: the sign of the target edge must never be visible to the encoder.
    ``hop_of[i]`` is the BFS round at which ``nodes[i]`` was added.
    """

    nodes: np.ndarray
    adj: np.ndarray
    hop_of: np.ndarray

    @property
    def m(self) -> int:
        return len(self.nodes)

    def symmetric_neighbors(self) -> list[np.ndarray]:
        """Neighbor lists of the subgraph with edge direction ignored."""
        und = (self.adj != 0) | (self.adj.T != 0)
        return [np.flatnonzero(row) for row in und]


def extract(g: SignedDigraph, x: int, y: int, k: int) -> EnclosingSubgraph:
    """Grow the node set hop by hop from both targets until it holds ``k`` nodes.

    A whole hop is added at once, so the result may be larger than ``k``.
    When the neighborhoods run out first, the result is smaller.  Within a
    hop, nodes are appended in ascending id order.
    """
    if x == y:
        raise ValueError("target nodes must differ")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    for v in (x, y):
        if not 0 <= v < g.num_nodes:
            raise ValueError(f"node {v} out of range [0, {g.num_nodes})")

    nodes = [x, y]
    hops = [0, 0]
    seen = {x, y}
    fringe = [x, y]
    hop = 0
    while len(nodes) < k:
        hop += 1
        nxt = set()
        for u in fringe:
            nxt.update(g.neighbor_array(u).tolist())
        nxt -= seen
        if not nxt:
            break
        fringe = sorted(nxt)
        seen.update(fringe)
        nodes.extend(fringe)
        hops.extend([hop] * len(fringe))

    nodes = np.array(nodes, dtype=np.int64)
    adj = g.induced(nodes)
    adj[0, 1] = 0
    return EnclosingSubgraph(nodes=nodes, adj=adj, hop_of=np.array(hops, dtype=np.int64))
