"""Shared fixtures and brute-force oracles.

The oracles here recompute quantities from their definitions with plain
Python loops so they share no code with the package.
"""
from __future__ import annotations

from math import log2

import numpy as np
import pytest

from sled.graph import SuperpixelGraph
from sled.superpixel import superpixel_stats


def entropy_oracle(n_nodes, edges, labels) -> float:
    """Two-level structural entropy straight from node degrees, volumes and cuts."""
    deg = [0.0] * n_nodes
    for i, j, w in edges:
        deg[i] += w
        deg[j] += w
    vol_g = sum(deg)
    vol, cut = {}, {}
    for v, m in enumerate(labels):
        vol[m] = vol.get(m, 0.0) + deg[v]
        cut.setdefault(m, 0.0)
    for i, j, w in edges:
        if labels[i] != labels[j]:
            cut[labels[i]] += w
            cut[labels[j]] += w
    h = 0.0
    for v, m in enumerate(labels):
        if deg[v] > 0:
            h -= deg[v] / vol_g * log2(deg[v] / vol[m])
    for m in vol:
        if vol[m] > 0:
            h -= cut[m] / vol_g * log2(vol[m] / vol_g)
    return h


def set_partitions(items):
    """Every partition of ``items`` as a list of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def blocks_to_labels(blocks, n):
    labels = [0] * n
    for k, block in enumerate(blocks):
        for v in block:
            labels[v] = k
    return labels


def exhaustive_optimum(n_nodes, edges):
    best, best_blocks = np.inf, None
    for blocks in set_partitions(range(n_nodes)):
        h = entropy_oracle(n_nodes, edges, blocks_to_labels(blocks, n_nodes))
        if h < best - 1e-12:
            best, best_blocks = h, blocks
    return best, sorted(sorted(b) for b in best_blocks)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.3) -> SuperpixelGraph:
    """Connected random graph: a random spanning path plus Erdos-Renyi edges."""
    order = rng.permutation(n)
    pairs = {tuple(sorted((int(order[k]), int(order[k + 1])))) for k in range(n - 1)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                pairs.add((i, j))
    edges = [(i, j, float(rng.uniform(1e-3, 1.0))) for i, j in sorted(pairs)]
    return SuperpixelGraph.from_edges(n, edges)


def two_cliques(bridge: float = 0.01) -> SuperpixelGraph:
    edges = [(i, j, 1.0) for block in ((0, 1, 2, 3), (4, 5, 6, 7))
             for a, i in enumerate(block) for j in block[a + 1:]]
    edges.append((3, 4, bridge))
    return SuperpixelGraph.from_edges(8, edges)


def block_labeling(img: np.ndarray, block: int):
    """Square-block superpixels, bypassing SLIC."""
    h, w = img.shape[:2]
    rows, cols = np.mgrid[0:h, 0:w]
    per_row = -(-w // block)
    labels = (rows // block) * per_row + cols // block
    return superpixel_stats(img, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def disjoint_edges():
    return SuperpixelGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """``verdict(n, name, ok, detail)`` records and prints one line per criterion, then asserts."""
    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] #{number:>2} {name}: {detail}"
        request.config.stash[ACCEPTANCE_LINES].append(line)
        print(line)
        assert ok, line
    return record
