"""SLIC superpixels and per-superpixel statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.color import rgb2lab
from skimage.measure import label as _label_regions

from .errors import DegenerateImage, EmptySuperpixel
from .preprocess import check_rgb

COMPACTNESS = 10.0
N_ITERATIONS = 10


@dataclass(frozen=True)
class SuperpixelLabeling:
    labels: np.ndarray      # (H, W) int, ids in [0, N)
    means: np.ndarray       # (N, 3) mean RGB in [0, 1]
    centroids: np.ndarray   # (N, 2) mean (row, col)
    sizes: np.ndarray       # (N,) pixel counts

    @property
    def n_superpixels(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


def superpixel_stats(img: np.ndarray, labels: np.ndarray) -> SuperpixelLabeling:
    img = check_rgb(img)
    labels = np.asarray(labels)
    if labels.shape != img.shape[:2]:
        raise ValueError("label grid and image differ in shape")
    flat = labels.ravel().astype(np.intp)
    if flat.size and flat.min() < 0:
        raise ValueError("negative superpixel id")
    n = int(flat.max()) + 1
    sizes = np.bincount(flat, minlength=n)
    if np.any(sizes == 0):
        missing = np.flatnonzero(sizes == 0)
        raise EmptySuperpixel(f"superpixel ids without pixels: {missing[:10].tolist()}")
    means = np.stack([np.bincount(flat, weights=img[..., c].ravel(), minlength=n)
                      for c in range(3)], axis=1) / sizes[:, None]
    rows, cols = np.indices(labels.shape)
    centroids = np.stack([np.bincount(flat, weights=rows.ravel(), minlength=n),
                          np.bincount(flat, weights=cols.ravel(), minlength=n)],
                         axis=1) / sizes[:, None]
    return SuperpixelLabeling(labels=flat.reshape(labels.shape), means=means,
                              centroids=centroids, sizes=sizes)


def _gradient(lab: np.ndarray) -> np.ndarray:
    padded = np.pad(lab, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return (dx ** 2).sum(axis=2) + (dy ** 2).sum(axis=2)


def _initial_centers(lab: np.ndarray, n_target: int):
    h, w = lab.shape[:2]
    step = np.sqrt(h * w / n_target)
    ny = max(1, min(h, int(round(h / step))))
    nx = max(1, min(w, int(round(w / step))))
    ys = (np.arange(ny) + 0.5) * h / ny - 0.5
    xs = (np.arange(nx) + 0.5) * w / nx - 0.5
    cy, cx = np.meshgrid(ys, xs, indexing="ij")
    cy, cx = cy.ravel(), cx.ravel()

    grad = _gradient(lab)
    iy = np.clip(np.rint(cy).astype(int), 0, h - 1)
    ix = np.clip(np.rint(cx).astype(int), 0, w - 1)
    best = grad[iy, ix]
    ny_pos, nx_pos = cy.copy(), cx.copy()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            yy, xx = iy + dy, ix + dx
            ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            g = np.full(len(cy), np.inf)
            g[ok] = grad[yy[ok], xx[ok]]
            better = g < best
            best = np.where(better, g, best)
            ny_pos = np.where(better, yy, ny_pos)
            nx_pos = np.where(better, xx, nx_pos)
    iy = np.clip(np.rint(ny_pos).astype(int), 0, h - 1)
    ix = np.clip(np.rint(nx_pos).astype(int), 0, w - 1)
    centers = np.column_stack([lab[iy, ix], ny_pos, nx_pos])
    return centers, step


def _assign(lab, centers, step, compactness):
    """Assign pixels to the closest center within each center's 2S x 2S window."""
    h, w = lab.shape[:2]
    scale = (compactness / step) ** 2
    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    dist = np.full((h, w), np.inf)
    label = np.full((h, w), -1, dtype=np.intp)
    for k, (l_, a_, b_, y, x) in enumerate(centers):
        y0, y1 = max(int(np.ceil(y - step)), 0), min(int(np.floor(y + step)) + 1, h)
        x0, x1 = max(int(np.ceil(x - step)), 0), min(int(np.floor(x + step)) + 1, w)
        if y0 >= y1 or x0 >= x1:
            continue
        win = lab[y0:y1, x0:x1]
        d = ((win[..., 0] - l_) ** 2 + (win[..., 1] - a_) ** 2 + (win[..., 2] - b_) ** 2
             + ((rows[y0:y1, None] - y) ** 2 + (cols[None, x0:x1] - x) ** 2) * scale)
        sub = dist[y0:y1, x0:x1]
        closer = d < sub
        sub[closer] = d[closer]
        label[y0:y1, x0:x1][closer] = k
    orphan = label < 0
    if orphan.any():
        # pixels outside every window go to the spatially nearest center
        py, px = np.nonzero(orphan)
        d2 = (py[:, None] - centers[None, :, 3]) ** 2 + (px[:, None] - centers[None, :, 4]) ** 2
        label[py, px] = np.argmin(d2, axis=1)
    return label


def _update(lab, label, centers):
    h, w = label.shape
    n = len(centers)
    flat = label.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    rows, cols = np.indices((h, w))
    feats = [lab[..., 0], lab[..., 1], lab[..., 2], rows, cols]
    sums = np.stack([np.bincount(flat, weights=f.ravel(), minlength=n) for f in feats], axis=1)
    occupied = counts > 0
    new = centers.copy()
    new[occupied] = sums[occupied] / counts[occupied, None]
    return new


def _adjacent_pairs(comps: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Directed pairs (a, b) of distinct 4-adjacent pieces, both orientations."""
    a = np.concatenate([comps[:, :-1].ravel(), comps[:-1, :].ravel()])
    b = np.concatenate([comps[:, 1:].ravel(), comps[1:, :].ravel()])
    keep = a != b
    a, b = a[keep], b[keep]
    code = np.unique(np.concatenate([a * n + b, b * n + a]))
    return code // n, code % n


def _enforce_connectivity(label: np.ndarray, min_size: float) -> np.ndarray:
    """Split labels into 4-connected pieces and merge small pieces away.

    Every piece smaller than ``min_size`` is absorbed into its largest
    adjacent piece; rounds repeat until no small piece has a neighbour.
    Output ids are contiguous in raster order of first appearance.
    """
    comps = _label_regions(label + 1, connectivity=1, background=0) - 1
    while True:
        n = int(comps.max()) + 1
        sizes = np.bincount(comps.ravel(), minlength=n)
        small = sizes < min_size
        if not small.any() or n == 1:
            break
        a, b = _adjacent_pairs(comps, n)
        # only point at strictly larger (size, -id) neighbours: no cycles
        pick = small[a] & ((sizes[b] > sizes[a]) | ((sizes[b] == sizes[a]) & (b < a)))
        a, b = a[pick], b[pick]
        if len(a) == 0:
            break
        # per source piece, the neighbour with the largest (size, -id)
        order = np.lexsort((b, -sizes[b], a))
        a, b = a[order], b[order]
        first = np.ones(len(a), dtype=bool)
        first[1:] = a[1:] != a[:-1]
        target = np.arange(n)
        target[a[first]] = b[first]
        while True:
            nxt = target[target]
            if np.array_equal(nxt, target):
                break
            target = nxt
        _, comps = np.unique(target[comps], return_inverse=True)
        comps = comps.reshape(label.shape)
    _, first_seen = np.unique(comps.ravel(), return_index=True)
    remap = np.empty(len(first_seen), dtype=np.intp)
    remap[np.argsort(first_seen)] = np.arange(len(first_seen))
    return remap[comps]


def slic_segment(img: np.ndarray, n_target: int, compactness: float = COMPACTNESS,
                 n_iterations: int = N_ITERATIONS) -> SuperpixelLabeling:
    """SLIC superpixels in CIELAB + xy space with enforced 4-connectivity."""
    img = check_rgb(img)
    h, w = img.shape[:2]
    if n_target < 2:
        raise ValueError("n_target must be at least 2")
    if n_target > h * w:
        raise DegenerateImage(f"{h * w} pixels cannot hold {n_target} superpixels")
    lab = rgb2lab(img)
    centers, step = _initial_centers(lab, n_target)
    label = None
    for _ in range(n_iterations):
        label = _assign(lab, centers, step, compactness)
        centers = _update(lab, label, centers)
    label = _enforce_connectivity(label, step * step / 4.0)
    return superpixel_stats(img, label)
