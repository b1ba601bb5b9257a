import os
import sys
from pathlib import Path

import numpy as np
import pytest

from selo.graph import SignedDigraph


def make_graph(edges, num_nodes=None):
    """Graph from (src, dst, sign) triples."""
    if num_nodes is None:
        num_nodes = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    if not edges:
        return SignedDigraph(num_nodes, [], [], [])
    src, dst, sign = zip(*edges)
    return SignedDigraph(num_nodes, src, dst, sign)


def faction_graph(n=300, m=2500, seed=0, noise=0.05, neg_keep=0.5):
    """Two planted factions: friendly inside, hostile across, with sign noise."""
    rng = np.random.default_rng(seed)
    group = rng.integers(0, 2, n)
    weight = rng.pareto(2.0, n) + 1
    weight /= weight.sum()
    edges = {}
    while len(edges) < m:
        u, v = rng.choice(n, 2, p=weight)
        if u == v or (u, v) in edges:
            continue
        s = 1 if group[u] == group[v] else -1
        if rng.random() < noise:
            s = -s
        if s < 0 and rng.random() > neg_keep:
            continue
        edges[(int(u), int(v))] = s
    return make_graph([(u, v, s) for (u, v), s in edges.items()], n)


def find_dataset(*names):
    """Locate a real dataset under $SELO_DATA_DIR (or ./data)."""
    roots = [os.environ.get("SELO_DATA_DIR"), "data", str(Path(__file__).resolve().parents[1] / "data")]
    for root in filter(None, roots):
        for name in names:
            p = Path(root) / name
            if p.exists():
                return p
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_factions():
    return faction_graph(n=120, m=700, seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
