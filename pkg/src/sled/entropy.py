"""Two-dimensional structural entropy and its merge-then-refine minimization.

A :class:`Partition` is the flat encoding tree root -> modules -> nodes. With
``f(X) = (vol(X) - cut(X)) / vol(G) * log2(vol(X) / vol(G))`` and ``f(empty) = 0``,
the entropy of a partition is a constant (depending only on the degrees)
plus ``sum_X f(X)``; every delta below is a difference of ``f`` terms.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import log2

import numpy as np

from .errors import EmptyGraph
from .graph import SuperpixelGraph

MIN_GAIN = 1e-12
MAX_SWEEPS = 100


def _module_term(vol: float, cut: float, vol_g: float) -> float:
    if vol <= 0.0:
        return 0.0
    return (vol - cut) / vol_g * log2(vol / vol_g)


def _require_edges(g: SuperpixelGraph) -> float:
    vol_g = g.volume
    if g.n_edges == 0 or vol_g <= 0:
        raise EmptyGraph("graph has no edges")
    return vol_g


@dataclass
class Partition:
    """Node-to-module assignment with cached module volume and cut."""

    assignment: list[int]
    members: dict[int, set[int]]
    vol: dict[int, float]
    cut: dict[int, float]

    @classmethod
    def from_labels(cls, g: SuperpixelGraph, labels) -> "Partition":
        labels = [int(x) for x in labels]
        if len(labels) != g.n_nodes:
            raise ValueError("one label per node required")
        lab = np.asarray(labels, dtype=np.intp)
        members: dict[int, set[int]] = {}
        for v, m in enumerate(labels):
            members.setdefault(m, set()).add(v)
        size = int(lab.max()) + 1 if len(lab) else 0
        vol = np.bincount(lab, weights=g.degrees, minlength=size)
        ls, ld = lab[g.src], lab[g.dst]
        cross = ls != ld
        cut = (np.bincount(ls[cross], weights=g.weight[cross], minlength=size)
               + np.bincount(ld[cross], weights=g.weight[cross], minlength=size))
        return cls(labels, members,
                   {m: float(vol[m]) for m in members},
                   {m: float(cut[m]) for m in members})

    @classmethod
    def singletons(cls, g: SuperpixelGraph) -> "Partition":
        return cls.from_labels(g, range(g.n_nodes))

    def copy(self) -> "Partition":
        return Partition(list(self.assignment), {m: set(s) for m, s in self.members.items()},
                         dict(self.vol), dict(self.cut))

    @property
    def n_modules(self) -> int:
        return len(self.members)

    @property
    def modules(self) -> list[list[int]]:
        """Module node lists ordered by their smallest node id."""
        return sorted((sorted(s) for s in self.members.values()), key=lambda s: s[0])

    def labels(self) -> np.ndarray:
        """Canonical labels ``0..L-1`` numbered by smallest member."""
        out = np.empty(len(self.assignment), dtype=np.intp)
        for k, nodes in enumerate(self.modules):
            out[nodes] = k
        return out

    def module_stats(self) -> dict[int, tuple[float, float]]:
        return {m: (self.vol[m], self.cut[m]) for m in sorted(self.members)}

    def merged(self, x: int, y: int, g: SuperpixelGraph) -> "Partition":
        labels = [x if m == y else m for m in self.assignment]
        return Partition.from_labels(g, labels)

    def moved(self, v: int, y: int, g: SuperpixelGraph) -> "Partition":
        labels = list(self.assignment)
        labels[v] = y
        return Partition.from_labels(g, labels)


def structural_entropy(g: SuperpixelGraph, p: Partition) -> float:
    """Entropy of ``g`` under ``p`` computed from scratch (not from the cache)."""
    vol_g = _require_edges(g)
    lab = np.asarray(p.assignment, dtype=np.intp)
    d = g.degrees
    size = int(lab.max()) + 1
    vol = np.bincount(lab, weights=d, minlength=size)
    ls, ld = lab[g.src], lab[g.dst]
    cross = ls != ld
    cut = (np.bincount(ls[cross], weights=g.weight[cross], minlength=size)
           + np.bincount(ld[cross], weights=g.weight[cross], minlength=size))
    nz = d > 0
    node_term = -np.sum(d[nz] / vol_g * np.log2(d[nz] / vol[lab[nz]]))
    occ = vol > 0
    cut_term = -np.sum(cut[occ] / vol_g * np.log2(vol[occ] / vol_g))
    return float(node_term + cut_term)


def _weight_to_module(g: SuperpixelGraph, p: Partition, v: int, module: int) -> float:
    return sum(w for u, w in g.adjacency[v] if p.assignment[u] == module and u != v)


def delta_merge(g: SuperpixelGraph, p: Partition, x: int, y: int) -> float:
    """Entropy decrease from merging modules ``x`` and ``y`` (positive = better)."""
    if x == y:
        raise ValueError("cannot merge a module with itself")
    vol_g = _require_edges(g)
    lab = np.asarray(p.assignment)
    between = ((lab[g.src] == x) & (lab[g.dst] == y)) | ((lab[g.src] == y) & (lab[g.dst] == x))
    w_xy = float(g.weight[between].sum())
    vx, cx, vy, cy = p.vol[x], p.cut[x], p.vol[y], p.cut[y]
    return _merge_gain(vx, cx, vy, cy, w_xy, vol_g, log2(vol_g))


def _merge_gain(vx, cx, vy, cy, w_xy, vol_g, log_vol_g):
    vxy = vx + vy
    cxy = cx + cy - 2.0 * w_xy
    acc = (cx + cy - cxy) * log_vol_g
    if vx > 0:
        acc += (vx - cx) * log2(vx)
    if vy > 0:
        acc += (vy - cy) * log2(vy)
    if vxy > 0:
        acc -= (vxy - cxy) * log2(vxy)
    return acc / vol_g


def delta_remove(g: SuperpixelGraph, p: Partition, x: int, v: int) -> float:
    """Entropy decrease from taking ``v`` out of its module ``x``."""
    if p.assignment[v] != x:
        raise ValueError(f"node {v} is not in module {x}")
    vol_g = _require_edges(g)
    d = float(g.degrees[v])
    vx, cx = p.vol[x], p.cut[x]
    if len(p.members[x]) == 1:
        rest_vol = rest_cut = 0.0
    else:
        w_in = _weight_to_module(g, p, v, x)
        rest_vol, rest_cut = vx - d, cx - d + 2.0 * w_in
    return _module_term(vx, cx, vol_g) - _module_term(rest_vol, rest_cut, vol_g)


def delta_insert(g: SuperpixelGraph, p: Partition, y: int, v: int) -> float:
    """Entropy increase from inserting a free node ``v`` into module ``y``.

    An unknown ``y`` is treated as an empty module.
    """
    if p.assignment[v] == y:
        raise ValueError(f"node {v} is already in module {y}")
    vol_g = _require_edges(g)
    d = float(g.degrees[v])
    vy, cy = p.vol.get(y, 0.0), p.cut.get(y, 0.0)
    w_y = _weight_to_module(g, p, v, y) if y in p.members else 0.0
    return _module_term(vy + d, cy + d - 2.0 * w_y, vol_g) - _module_term(vy, cy, vol_g)


def merge_stage(g: SuperpixelGraph, on_merge=None) -> Partition:
    """Greedy merging from singletons while some adjacent pair lowers the entropy.

    Candidate pairs live in a max-heap keyed by the merge gain; entries are
    invalidated lazily through per-module version counters.
    ``on_merge(kept, absorbed, gain)`` is called after every merge.
    """
    vol_g = _require_edges(g)
    log_vol_g = log2(vol_g)
    n = g.n_nodes
    vol = g.degrees.astype(float).tolist()
    cut = list(vol)
    links: list[dict[int, float]] = [dict(row) for row in g.adjacency]
    members: list[list[int] | None] = [[v] for v in range(n)]
    version = [0] * n
    own = [0.0] * n  # (vol - cut) * log2(vol); zero for singletons

    # a pair's gain only changes when one of its modules does, so pairs that
    # cannot improve are left out until a merge touches them
    heap = []
    for i, j, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
        gain = _merge_gain(vol[i], cut[i], vol[j], cut[j], w, vol_g, log_vol_g)
        if gain > MIN_GAIN:
            heap.append((-gain, i, j, 0, 0))
    heapq.heapify(heap)
    limit = max(4 * len(heap), 1024)

    while heap:
        neg, x, y, vx_, vy_ = heapq.heappop(heap)
        if members[x] is None or members[y] is None or version[x] != vx_ or version[y] != vy_:
            continue
        if -neg <= MIN_GAIN:
            break
        if len(links[x]) < len(links[y]):
            x, y = y, x
        w_xy = links[x].pop(y)
        del links[y][x]
        for u, w in links[y].items():
            links[x][u] = links[x].get(u, 0.0) + w
            row = links[u]
            row[x] = row.get(x, 0.0) + row.pop(y)
        links[y] = {}
        vol[x] += vol[y]
        cut[x] = cut[x] + cut[y] - 2.0 * w_xy
        members[x].extend(members[y])
        members[y] = None
        version[x] += 1
        if on_merge is not None:
            on_merge(x, y, -neg)
        vx, cx = vol[x], cut[x]
        own[x] = (vx - cx) * log2(vx) if vx > 0 else 0.0
        tx = own[x]
        for u, w in links[x].items():
            vxy = vx + vol[u]
            cxy = cx + cut[u] - 2.0 * w
            gain = (tx + own[u] - (vxy - cxy) * log2(vxy) + 2.0 * w * log_vol_g) / vol_g
            if gain > MIN_GAIN:
                a, b = (x, u) if x < u else (u, x)
                heapq.heappush(heap, (-gain, a, b, version[a], version[b]))
        if len(heap) > limit:
            heap = [e for e in heap if version[e[1]] == e[3] and version[e[2]] == e[4]
                    and members[e[1]] is not None and members[e[2]] is not None]
            heapq.heapify(heap)
            limit = max(4 * len(heap), 1024)

    labels = [0] * n
    for m, nodes in enumerate(members):
        if nodes is not None:
            for v in nodes:
                labels[v] = m
    return Partition.from_labels(g, labels)


def refine_stage(g: SuperpixelGraph, p: Partition, max_iters: int = MAX_SWEEPS, *,
                 exhaustive: bool = False, on_sweep=None) -> Partition:
    """Sweep nodes in id order, moving each to the module with the best gain.

    The gain of moving ``v`` from ``X`` to ``Y`` is ``delta_remove - delta_insert``;
    staying has gain 0 and a move needs a gain above ``MIN_GAIN``. Candidates
    are modules sharing an edge with ``v`` (all modules when ``exhaustive``).
    Stops after a sweep without moves or after ``max_iters`` sweeps.
    ``on_sweep(sweep, partition, n_moves)`` is called after every sweep.
    """
    p = p.copy()
    if max_iters <= 0:
        return p
    vol_g = _require_edges(g)
    assign = p.assignment
    vol, cut, members = p.vol, p.cut, p.members
    deg = g.degrees.tolist()
    adjacency = g.adjacency
    term = _module_term

    for sweep in range(max_iters):
        moves = 0
        for v in range(g.n_nodes):
            x = assign[v]
            d = deg[v]
            to_module: dict[int, float] = {}
            for u, w in adjacency[v]:
                m = assign[u]
                to_module[m] = to_module.get(m, 0.0) + w
            vx, cx = vol[x], cut[x]
            if len(members[x]) == 1:
                rest_vol = rest_cut = 0.0
            else:
                rest_vol, rest_cut = vx - d, cx - d + 2.0 * to_module.get(x, 0.0)
            removal = term(vx, cx, vol_g) - term(rest_vol, rest_cut, vol_g)

            candidates = members.keys() if exhaustive else to_module.keys()
            best, best_gain = x, 0.0
            for y in sorted(candidates):
                if y == x or not members[y]:
                    continue
                vy, cy = vol[y], cut[y]
                w_y = to_module.get(y, 0.0)
                insertion = term(vy + d, cy + d - 2.0 * w_y, vol_g) - term(vy, cy, vol_g)
                gain = removal - insertion
                if gain > best_gain:
                    best, best_gain = y, gain
            if best == x or best_gain <= MIN_GAIN:
                continue
            w_y = to_module.get(best, 0.0)
            vol[x], cut[x] = rest_vol, rest_cut
            vol[best] += d
            cut[best] = cut[best] + d - 2.0 * w_y
            members[x].discard(v)
            members[best].add(v)
            assign[v] = best
            moves += 1
        for m in [m for m, s in members.items() if not s]:
            del members[m], vol[m], cut[m]
        if on_sweep is not None:
            on_sweep(sweep, p, moves)
        if moves == 0:
            break
    return p


def minimize(g: SuperpixelGraph, max_iters: int = MAX_SWEEPS, *, exhaustive: bool = False,
             on_merge=None, on_sweep=None) -> Partition:
    """Merge stage followed by refinement; the module count comes out adaptively."""
    merged = merge_stage(g, on_merge=on_merge)
    return refine_stage(g, merged, max_iters, exhaustive=exhaustive, on_sweep=on_sweep)


def write_partition(p: Partition, path) -> None:
    labels = p.labels()
    with open(path, "w", encoding="utf-8") as fh:
        for v, m in enumerate(labels.tolist()):
            fh.write(f"{v} {m}\n")
