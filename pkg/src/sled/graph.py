"""Superpixel similarity graph: spatial threshold, local scaling, K-NN sparsification."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import DisconnectedNode
from .superpixel import SuperpixelLabeling

# exp(-d^2 / (s_i s_j)) underflows for very dissimilar colors; weights stay positive
MIN_WEIGHT = 1e-300


@dataclass(frozen=True)
class SuperpixelGraph:
    """Undirected weighted graph stored as an edge list with ``src < dst``."""

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.intp)
        dst = np.asarray(self.dst, dtype=np.intp)
        weight = np.asarray(self.weight, dtype=np.float64)
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        object.__setattr__(self, "src", lo)
        object.__setattr__(self, "dst", hi)
        object.__setattr__(self, "weight", weight)
        deg = (np.bincount(lo, weights=weight, minlength=self.n_nodes)
               + np.bincount(hi, weights=weight, minlength=self.n_nodes))
        object.__setattr__(self, "degrees", deg)

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "SuperpixelGraph":
        edges = list(edges)
        if not edges:
            return cls(n_nodes, np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0))
        i, j, w = zip(*edges)
        return cls(n_nodes, np.array(i), np.array(j), np.array(w, dtype=np.float64))

    @property
    def n_edges(self) -> int:
        return len(self.weight)

    @property
    def volume(self) -> float:
        return float(self.degrees.sum())

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.weight, self.weight])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        """Per node, its ``(neighbour, weight)`` pairs in ascending neighbour order."""
        m = self.csr
        out = []
        for v in range(self.n_nodes):
            lo, hi = m.indptr[v], m.indptr[v + 1]
            out.append(list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist())))
        return out

    def weight_between(self, i: int, j: int) -> float:
        return float(self.csr[i, j])


def _connectable(sp: SuperpixelLabeling, r: float) -> np.ndarray:
    h, w = sp.shape
    c = sp.centroids
    drow = np.abs(c[:, None, 0] - c[None, :, 0])
    dcol = np.abs(c[:, None, 1] - c[None, :, 1])
    ok = (drow < r * h) & (dcol < r * w)
    np.fill_diagonal(ok, False)
    return ok


def local_scales(dist: np.ndarray, connectable: np.ndarray, sigma_k: int) -> np.ndarray:
    """Distance to the ``sigma_k``-th nearest connectable neighbour, floored at 1.

    Nodes with fewer than ``sigma_k`` candidates use their farthest one.
    """
    n = len(dist)
    d = np.where(connectable, dist, np.inf)
    d.sort(axis=1)
    counts = connectable.sum(axis=1)
    idx = np.minimum(sigma_k, counts) - 1
    sigma = np.ones(n)
    has = counts > 0
    sigma[has] = d[np.flatnonzero(has), idx[has]]
    return np.maximum(sigma, 1.0)


def build_graph(sp: SuperpixelLabeling, r: float, sigma_k: int, *,
                fixed_sigma: bool = False, reconnect: bool = False) -> SuperpixelGraph:
    """Connect spatially close superpixels with locally scaled color similarity.

    With ``fixed_sigma`` every node uses ``sigma_k`` itself as its scale.
    Nodes left without edges raise :class:`DisconnectedNode`, unless
    ``reconnect`` is set, in which case each is joined to its nearest
    centroid with the usual similarity weight.
    """
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if sigma_k < 1:
        raise ValueError("sigma_k must be >= 1")
    colors = sp.means * 255.0
    dist = np.sqrt(((colors[:, None, :] - colors[None, :, :]) ** 2).sum(axis=2))
    ok = _connectable(sp, r)
    if fixed_sigma:
        sigma = np.full(sp.n_superpixels, float(sigma_k))
    else:
        sigma = local_scales(dist, ok, sigma_k)
    weights = np.maximum(np.exp(-dist ** 2 / np.outer(sigma, sigma)), MIN_WEIGHT)

    lonely = np.flatnonzero(~ok.any(axis=1))
    if len(lonely):
        if not reconnect:
            raise DisconnectedNode(lonely)
        c = sp.centroids
        for v in lonely:
            gap = ((c - c[v]) ** 2).sum(axis=1)
            gap[v] = np.inf
            u = int(np.argmin(gap))
            ok[v, u] = ok[u, v] = True

    i, j = np.nonzero(np.triu(ok, k=1))
    return SuperpixelGraph(sp.n_superpixels, i, j, weights[i, j])


def knn_sparsify(g: SuperpixelGraph, k: int) -> SuperpixelGraph:
    """Keep an edge iff it is among the ``k`` heaviest edges of either endpoint.

    Ties in weight are broken toward the lower neighbour id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = g.n_edges
    if m == 0:
        return g
    eid = np.arange(m)
    node = np.concatenate([g.src, g.dst])
    other = np.concatenate([g.dst, g.src])
    w = np.concatenate([g.weight, g.weight])
    eids = np.concatenate([eid, eid])
    order = np.lexsort((other, -w, node))
    node, eids = node[order], eids[order]
    starts = np.searchsorted(node, node, side="left")
    rank = np.arange(len(node)) - starts
    keep = np.zeros(m, dtype=bool)
    keep[eids[rank < k]] = True
    return SuperpixelGraph(g.n_nodes, g.src[keep], g.dst[keep], g.weight[keep])


def write_edge_list(g: SuperpixelGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in g.edges:
            fh.write(f"{i} {j} {w!r}\n")
