"""Two-class split of segmented regions by between-class variance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import Partition
from .errors import SingleRegion
from .superpixel import SuperpixelLabeling

CHANNELS = ("R", "G", "B")


@dataclass(frozen=True)
class RegionIntensity:
    region: int
    omega: float   # pixel fraction
    mu: float      # mean channel intensity


@dataclass(frozen=True)
class BisectionResult:
    channel: int                  # 0, 1, 2 for R, G, B
    threshold: float
    lesion_regions: frozenset     # darker class
    healthy_regions: frozenset
    sigma2_b: float

    @property
    def channel_name(self) -> str:
        return CHANNELS[self.channel]


def pixel_regions(sp: SuperpixelLabeling, p: Partition) -> np.ndarray:
    """Per-pixel canonical region id."""
    return p.labels()[sp.labels]


def region_intensities(img: np.ndarray, sp: SuperpixelLabeling, p: Partition,
                       channel: int) -> list[RegionIntensity]:
    regions = pixel_regions(sp, p).ravel()
    n = int(regions.max()) + 1
    counts = np.bincount(regions, minlength=n)
    sums = np.bincount(regions, weights=img[..., channel].ravel(), minlength=n)
    total = regions.size
    return [RegionIntensity(k, counts[k] / total, sums[k] / counts[k])
            for k in range(n) if counts[k] > 0]


def between_class_variance(omega, mu, lower: np.ndarray) -> float:
    """Between-class variance for the split given by the boolean ``lower`` mask."""
    omega, mu = np.asarray(omega, float), np.asarray(mu, float)
    mu_t = float(np.sum(omega * mu))
    out = 0.0
    for cls in (lower, ~lower):
        w = float(omega[cls].sum())
        if w > 0:
            m = float(np.sum(omega[cls] * mu[cls])) / w
            out += w * (m - mu_t) ** 2
    return out


def bisect(regions: list[RegionIntensity]):
    """Scan every split of the mean-sorted regions; keep the best variance.

    Returns ``(threshold, sigma2_b, lower_ids, upper_ids)``. Ties go to the
    lowest split.
    """
    if len(regions) < 2:
        raise SingleRegion("need at least two regions to bisect")
    ordered = sorted(regions, key=lambda r: (r.mu, r.region))
    omega = np.array([r.omega for r in ordered])
    mu = np.array([r.mu for r in ordered])
    total = omega.sum()
    omega = omega / total
    mu_t = float(np.sum(omega * mu))
    w0 = np.cumsum(omega)[:-1]
    s0 = np.cumsum(omega * mu)[:-1]
    w1 = 1.0 - w0
    m0 = s0 / w0
    m1 = (mu_t - s0) / np.where(w1 > 0, w1, 1.0)
    sigma = w0 * (m0 - mu_t) ** 2 + w1 * (m1 - mu_t) ** 2
    k = int(np.argmax(sigma)) + 1
    lower = frozenset(r.region for r in ordered[:k])
    upper = frozenset(r.region for r in ordered[k:])
    threshold = 0.5 * (mu[k - 1] + mu[k])
    return threshold, float(sigma[k - 1]), lower, upper


def select_channel(img: np.ndarray, sp: SuperpixelLabeling, p: Partition) -> BisectionResult:
    """Bisect on each RGB channel and keep the one with the largest variance."""
    best = None
    for c in range(3):
        tau, s2, lower, upper = bisect(region_intensities(img, sp, p, c))
        if best is None or s2 > best.sigma2_b:
            best = BisectionResult(c, tau, lower, upper, s2)
    return best


def lesion_superpixels(sp: SuperpixelLabeling, p: Partition, result: BisectionResult) -> np.ndarray:
    """Boolean per superpixel: does it belong to the darker class."""
    labels = p.labels()
    return np.isin(labels, sorted(result.lesion_regions))
