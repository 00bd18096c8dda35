"""Confidence-weighted fusion of single-scale outlier score maps."""
from __future__ import annotations

from dataclasses import dataclass
from math import exp

import numpy as np

from .errors import AllScalesDegenerate

MIN_FLOOR = 1e-6
MAX_EXPONENT = 50.0


@dataclass(frozen=True)
class ScaleResult:
    scale: int
    score_map: np.ndarray | None
    sigma2_b: float
    degenerate: bool = False


def scale_weight(sigma2_b: float, min_sigma2_b: float) -> float:
    """``exp((s - min) / min)`` with a floored denominator and a capped exponent."""
    if min_sigma2_b < 0:
        raise ValueError("min_sigma2_b must be non-negative")
    exponent = (sigma2_b - min_sigma2_b) / max(min_sigma2_b, MIN_FLOOR)
    return exp(min(exponent, MAX_EXPONENT))


def scale_weights(results: list[ScaleResult]) -> list[float]:
    """Weights aligned with ``results``; degenerate scales get 0."""
    live = [r.sigma2_b for r in results if not r.degenerate]
    if not live:
        raise AllScalesDegenerate("no usable scale")
    lowest = min(live)
    return [0.0 if r.degenerate else scale_weight(r.sigma2_b, lowest) for r in results]


def integrate(results: list[ScaleResult]) -> np.ndarray:
    """Weighted mean of the non-degenerate score maps."""
    weights = scale_weights(results)
    live = [(w, r) for w, r in zip(weights, results) if not r.degenerate]
    shape = live[0][1].score_map.shape
    if any(r.score_map.shape != shape for _, r in live):
        raise ValueError("score maps differ in shape")
    # fixed summation order keeps the output independent of input order
    live.sort(key=lambda wr: wr[1].scale)
    total = sum(w for w, _ in live)
    fused = np.zeros(shape)
    for w, r in live:
        fused += w * r.score_map
    return np.clip(fused / total, 0.0, 1.0)
