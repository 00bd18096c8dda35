"""Score-map binarization, hole filling and final component selection.

Thresholds are reported as split indices ``k``: class 0 holds bins ``0..k``.
Only splits ending on an occupied bin with mass on both sides are scanned, so
splits that differ only by empty bins collapse onto their lowest index; any
remaining ties also go to the lowest index. :func:`bin_boundary` converts ``k`` to a score value.
"""
from __future__ import annotations

from math import log

import numpy as np
from scipy import ndimage

from .errors import DegenerateHistogram, EmptyMask

N_BINS = 256
GHT_TAU = 0.1
GHT_OMEGA = 0.5
GHT_PRIOR_FRACTION = 0.1   # nu = kappa = fraction * pixel count
FALLBACK_THRESHOLD = 0.5
_CROSS = ndimage.generate_binary_structure(2, 1)
_TINY = 1e-30


def score_histogram(score_map: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    counts, _ = np.histogram(np.asarray(score_map).ravel(), bins=n_bins, range=(0.0, 1.0))
    return counts.astype(np.float64)


def bin_centers(n_bins: int = N_BINS) -> np.ndarray:
    return (np.arange(n_bins) + 0.5) / n_bins


def bin_boundary(k: int, n_bins: int = N_BINS) -> float:
    """Score value separating bin ``k`` from bin ``k + 1``."""
    return (k + 1) / n_bins


def _candidate_splits(hist: np.ndarray) -> np.ndarray:
    occupied = np.flatnonzero(np.asarray(hist) > 0)
    if len(occupied) < 2:
        raise DegenerateHistogram("need at least two occupied bins")
    return occupied[:-1]


def _class_scatter(n: np.ndarray, x: np.ndarray):
    """Mass and centered scatter of bins ``0..k`` for every ``k``.

    Computed from centered sums rather than cumulative moments, which lose
    all precision for narrow classes.
    """
    lower = np.tri(len(n), dtype=bool)           # row k selects bins 0..k
    mass = lower @ n
    mean = (lower @ (n * x)) / np.maximum(mass, _TINY)
    scatter = np.where(lower, n * (x[None, :] - mean[:, None]) ** 2, 0.0).sum(axis=1)
    return mass, scatter


def ght_threshold(hist, nu: float | None = None, tau: float = GHT_TAU,
                  kappa: float | None = None, omega: float = GHT_OMEGA,
                  x: np.ndarray | None = None) -> int:
    """Generalized histogram thresholding (Barron, 2020).

    Each class is a Gaussian whose variance has a scaled inverse chi-squared
    prior (strength ``nu``, scale ``tau``) and the class weight a beta prior
    (strength ``kappa``, mode ``omega``). ``nu -> inf`` with small ``tau``
    recovers Otsu's method; ``nu = kappa = 0`` recovers minimum error
    thresholding. ``None`` for ``nu``/``kappa`` means 10% of the pixel count.
    """
    n = np.asarray(hist, dtype=np.float64)
    cands = _candidate_splits(n)
    total = n.sum()
    nu = GHT_PRIOR_FRACTION * total if nu is None else nu
    kappa = GHT_PRIOR_FRACTION * total if kappa is None else kappa
    if nu < 0 or tau < 0 or kappa < 0 or not 0 <= omega <= 1:
        raise ValueError("invalid GHT hyperparameters")
    x = bin_centers(len(n)) if x is None else np.asarray(x, dtype=np.float64)

    w0, d0 = _class_scatter(n, x)
    w1, d1 = (a[::-1] for a in _class_scatter(n[::-1], x[::-1]))
    w0, w1 = np.maximum(w0[:-1], _TINY), np.maximum(w1[1:], _TINY)
    # flooring the scatter (not the variance) keeps the nu = 0 case equal to MET
    d0, d1 = np.maximum(d0[:-1], w0 * _TINY), np.maximum(d1[1:], w1 * _TINY)
    p0, p1 = w0 / (w0 + w1), w1 / (w0 + w1)
    v0 = (p0 * nu * tau ** 2 + d0) / (p0 * nu + w0)
    v1 = (p1 * nu * tau ** 2 + d1) / (p1 * nu + w1)
    f0 = -d0 / v0 - w0 * np.log(v0) + 2.0 * (w0 + kappa * omega) * np.log(w0)
    f1 = -d1 / v1 - w1 * np.log(v1) + 2.0 * (w1 + kappa * (1.0 - omega)) * np.log(w1)
    return int(cands[np.argmax((f0 + f1)[cands])])


def otsu_threshold(hist, x: np.ndarray | None = None) -> int:
    """Brute-force Otsu: maximize ``w0 * w1 * (mu0 - mu1)^2`` split by split."""
    n = np.asarray(hist, dtype=np.float64)
    x = bin_centers(len(n)) if x is None else np.asarray(x, dtype=np.float64)
    best_k, best = None, -np.inf
    for k in _candidate_splits(n).tolist():
        a, b = n[:k + 1], n[k + 1:]
        wa, wb = a.sum(), b.sum()
        ma, mb = (a @ x[:k + 1]) / wa, (b @ x[k + 1:]) / wb
        value = wa * wb * (ma - mb) ** 2
        if value > best:
            best_k, best = k, value
    return best_k


def met_threshold(hist, x: np.ndarray | None = None) -> int:
    """Brute-force minimum error thresholding (Kittler-Illingworth criterion)."""
    n = np.asarray(hist, dtype=np.float64)
    x = bin_centers(len(n)) if x is None else np.asarray(x, dtype=np.float64)
    best_k, best = None, np.inf
    for k in _candidate_splits(n).tolist():
        cost = 0.0
        for part, xs in ((n[:k + 1], x[:k + 1]), (n[k + 1:], x[k + 1:])):
            w = part.sum()
            mean = (part @ xs) / w
            var = max((part @ (xs - mean) ** 2) / w, _TINY)
            cost += w * log(var) - 2.0 * w * log(w)
        if cost < best:
            best_k, best = k, cost
    return best_k


def binarize(score_map: np.ndarray, nu=None, tau=GHT_TAU, kappa=None, omega=GHT_OMEGA) -> np.ndarray:
    """Threshold a score map with GHT; falls back to 0.5 on a flat histogram."""
    try:
        cut = bin_boundary(ght_threshold(score_histogram(score_map), nu, tau, kappa, omega))
    except DegenerateHistogram:
        cut = FALLBACK_THRESHOLD
    return np.asarray(score_map) >= cut


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set background regions not 4-connected to the border to foreground."""
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool), structure=_CROSS)


def component_scores(mask: np.ndarray):
    """Label 4-connected components and sum a centered Gaussian over each."""
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_CROSS)
    h, w = mask.shape
    sigma = 0.5 * min(h, w)
    rows = (np.arange(h) - (h - 1) / 2.0) ** 2
    cols = (np.arange(w) - (w - 1) / 2.0) ** 2
    gauss = np.exp(-(rows[:, None] + cols[None, :]) / (2.0 * sigma ** 2))
    scores = np.bincount(labels.ravel(), weights=gauss.ravel(), minlength=n + 1)[1:]
    return labels, scores


def select_component(mask: np.ndarray) -> np.ndarray:
    """Keep only the component with the largest centre-weighted area."""
    labels, scores = component_scores(mask)
    if len(scores) == 0:
        raise EmptyMask("mask has no foreground")
    # summation order differs between mirrored components; treat near-equal as tied
    best = int(np.flatnonzero(scores >= scores.max() * (1.0 - 1e-12))[0]) + 1
    return labels == best


def postprocess(mask: np.ndarray) -> np.ndarray:
    """Hole filling then component selection; an empty mask stays empty."""
    filled = fill_holes(mask)
    try:
        return select_component(filled)
    except EmptyMask:
        return filled
