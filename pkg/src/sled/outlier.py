"""Isolation forest trained on healthy-skin superpixel colors."""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

import numpy as np

from .errors import TooFewSamples
from .superpixel import SuperpixelLabeling

EULER_GAMMA = 0.5772156649
N_TREES = 100
SUBSAMPLE = 256


def average_path_length(n) -> np.ndarray | float:
    """Expected unsuccessful-search depth of a BST with ``n`` points: c(n)."""
    arr = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(arr)
    out[arr == 2] = 1.0
    big = arr > 2
    out[big] = 2.0 * (np.log(arr[big] - 1.0) + EULER_GAMMA) - 2.0 * (arr[big] - 1.0) / arr[big]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IsolationTree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    height_limit: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_depths(self) -> list[int]:
        depths, stack = [], [(0, 0)]
        while stack:
            node, depth = stack.pop()
            if self.feature[node] < 0:
                depths.append(depth)
            else:
                stack.append((self.left[node], depth + 1))
                stack.append((self.right[node], depth + 1))
        return depths


def build_tree(points: np.ndarray, rng: np.random.Generator, height_limit: int) -> IsolationTree:
    feature, threshold, left, right, size = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, points, 0)]
    while stack:
        node, pts, depth = stack.pop()
        size[node] = len(pts)
        if depth >= height_limit or len(pts) <= 1:
            continue
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        # a strictly interior split value must exist
        spread = np.flatnonzero(np.nextafter(lo, hi) < hi)
        if len(spread) == 0:
            continue
        q = int(spread[rng.integers(len(spread))])
        split = rng.uniform(lo[q], hi[q])
        while not lo[q] < split < hi[q]:
            split = rng.uniform(lo[q], hi[q])
        goes_left = pts[:, q] < split
        feature[node], threshold[node] = q, split
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], pts[~goes_left], depth + 1))
        stack.append((left[node], pts[goes_left], depth + 1))
    return IsolationTree(np.array(feature), np.array(threshold), np.array(left),
                         np.array(right), np.array(size), height_limit)


def path_length(tree: IsolationTree, x) -> np.ndarray | float:
    """Depth of the leaf reached by ``x`` plus ``c(leaf size)``; vectorized over rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    node = np.zeros(len(x), dtype=np.intp)
    depth = np.zeros(len(x))
    active = tree.feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        cur = node[idx]
        go_left = x[idx, tree.feature[cur]] < tree.threshold[cur]
        node[idx] = np.where(go_left, tree.left[cur], tree.right[cur])
        depth[idx] += 1
        active = tree.feature[node] >= 0
    out = depth + average_path_length(tree.size[node])
    return float(out[0]) if single else out


@dataclass(frozen=True)
class IsolationForest:
    trees: tuple
    psi: int        # training-set size used in the normaliser
    c_psi: float

    def expected_path_length(self, x) -> np.ndarray:
        return np.mean([path_length(t, x) for t in self.trees], axis=0)

    def score(self, x) -> np.ndarray | float:
        """Outlier score ``2 ** (-E[h(x)] / c(psi))`` in ``(0, 1]``."""
        return 2.0 ** (-self.expected_path_length(x) / self.c_psi)


def fit_forest(healthy_features, n_trees: int = N_TREES, seed: int = 0, *,
               subsample: int | None = SUBSAMPLE) -> IsolationForest:
    """Fit ``n_trees`` iTrees on random subsamples of the healthy features.

    ``subsample=None`` trains every tree on all points. The score normaliser
    always uses the full training-set size.
    """
    data = np.asarray(healthy_features, dtype=np.float64)
    if data.ndim != 2 or len(data) < 2:
        raise TooFewSamples(f"need at least 2 training points, got {len(data)}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    psi = len(data)
    m = psi if subsample is None else min(subsample, psi)
    limit = ceil(log2(m))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        pick = rng.choice(psi, size=m, replace=False) if m < psi else np.arange(psi)
        trees.append(build_tree(data[pick], rng, limit))
    return IsolationForest(tuple(trees), psi, float(average_path_length(psi)))


def score(forest: IsolationForest, x) -> np.ndarray | float:
    return forest.score(x)


def superpixel_scores(forest: IsolationForest, sp: SuperpixelLabeling) -> np.ndarray:
    return np.asarray(forest.score(sp.means))


def score_map(forest: IsolationForest, sp: SuperpixelLabeling) -> np.ndarray:
    """Image-sized map carrying each pixel's superpixel score."""
    return superpixel_scores(forest, sp)[sp.labels]

