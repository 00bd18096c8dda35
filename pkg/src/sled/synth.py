"""Synthetic dermoscopy-like images with exact ground-truth masks."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .preprocess import save_gray, save_image

DEFAULT_SIZE = (256, 192)   # (width, height)


@dataclass(frozen=True)
class SyntheticSpec:
    """Everything needed to render one image deterministically.

    ``offsets`` are added to the background color, outermost ellipse first;
    inner subregions shrink concentrically.
    """

    width: int = DEFAULT_SIZE[0]
    height: int = DEFAULT_SIZE[1]
    center: tuple[float, float] = (96.0, 128.0)   # (row, col)
    axes: tuple[float, float] = (50.0, 70.0)      # (row semi-axis, col semi-axis) before rotation
    rotation: float = 0.0                          # radians
    offsets: tuple[float, ...] = (-0.4,)
    background: tuple[float, float, float] = (0.8, 0.7, 0.6)
    noise_sigma: float = 0.0
    vignette: float = 0.0
    n_hairs: int = 0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= len(self.offsets) <= 4:
            raise ValueError("between 1 and 4 subregions")
        r, c = self.center
        reach = max(self.axes)
        if not (reach <= r < self.height - reach and reach <= c < self.width - reach):
            raise ValueError("lesion must lie inside the image")

    @property
    def n_subregions(self) -> int:
        return len(self.offsets)


def _ellipse_radius(spec: SyntheticSpec) -> np.ndarray:
    """Normalized elliptical radius per pixel; < 1 means inside the lesion."""
    rows, cols = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    dr, dc = rows - spec.center[0], cols - spec.center[1]
    cos, sin = np.cos(spec.rotation), np.sin(spec.rotation)
    u = cos * dr + sin * dc
    v = -sin * dr + cos * dc
    return np.sqrt((u / spec.axes[0]) ** 2 + (v / spec.axes[1]) ** 2)


def subregion_scales(n: int) -> np.ndarray:
    return 1.0 - 0.7 * np.arange(n) / n


def _draw_hairs(img: np.ndarray, rng: np.random.Generator, count: int) -> None:
    h, w = img.shape[:2]
    t = np.linspace(0.0, 1.0, 4 * (h + w))[:, None]
    for _ in range(count):
        p0, p1, p2 = rng.uniform((0, 0), (h, w), size=(3, 2))
        curve = (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2
        color = rng.uniform(0.05, 0.15)
        for dr, dc in ((0, 0), (0, 1), (1, 0)):
            r = np.clip(np.round(curve[:, 0]).astype(int) + dr, 0, h - 1)
            c = np.clip(np.round(curve[:, 1]).astype(int) + dc, 0, w - 1)
            img[r, c] = color


def generate(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render ``(rgb image in [0,1], boolean lesion mask)``."""
    rng = np.random.default_rng(spec.seed)
    radius = _ellipse_radius(spec)
    img = np.empty((spec.height, spec.width, 3))
    img[:] = spec.background
    for scale, offset in zip(subregion_scales(spec.n_subregions), spec.offsets):
        img[radius < scale] = np.asarray(spec.background) + offset
    if spec.vignette:
        rows, cols = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
        dr = rows - (spec.height - 1) / 2.0
        dc = cols - (spec.width - 1) / 2.0
        rho2 = (dr ** 2 + dc ** 2) / (dr[0, 0] ** 2 + dc[0, 0] ** 2)
        img *= (1.0 - spec.vignette * rho2)[..., None]
    if spec.noise_sigma:
        img += rng.normal(0.0, spec.noise_sigma, img.shape)
    if spec.n_hairs:
        _draw_hairs(img, rng, spec.n_hairs)
    return np.clip(img, 0.0, 1.0), radius < 1.0


def random_spec(rng: np.random.Generator, width: int = DEFAULT_SIZE[0], height: int = DEFAULT_SIZE[1],
                *, noise_sigma: float = 0.02, vignette: float = 0.15, max_hairs: int = 0,
                seed: int | None = None) -> SyntheticSpec:
    """Draw a plausible lesion: skin-toned background, 1-4 darker plateaus."""
    bg = np.sort(rng.uniform(0.65, 0.85, 3))[::-1]          # R >= G >= B
    n = int(rng.integers(1, 5))
    outer = rng.uniform(-0.35, -0.25)
    offsets = outer - np.sort(rng.uniform(0.0, 0.25, n - 1)) if n > 1 else np.empty(0)
    offsets = (outer,) + tuple(float(o) for o in offsets)
    a = rng.uniform(0.18, 0.32) * height
    b = rng.uniform(0.18, 0.32) * width
    reach = max(a, b)
    center = (rng.uniform(reach, height - reach), rng.uniform(reach, width - reach))
    return SyntheticSpec(
        width=width, height=height, center=center, axes=(a, b),
        rotation=float(rng.uniform(0.0, np.pi)), offsets=tuple(offsets),
        background=tuple(float(x) for x in bg), noise_sigma=noise_sigma,
        vignette=vignette, n_hairs=int(rng.integers(0, max_hairs + 1)),
        seed=int(rng.integers(2 ** 31)) if seed is None else seed,
    )


def corpus(n: int, seed: int = 0, **kwargs) -> list[SyntheticSpec]:
    rng = np.random.default_rng(seed)
    return [random_spec(rng, **kwargs) for _ in range(n)]


def write_corpus(out_dir, n: int, seed: int = 0, **kwargs) -> list[tuple[Path, Path]]:
    """Write ``img_###.png`` / ``gt_###.png`` pairs and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, spec in enumerate(corpus(n, seed, **kwargs)):
        img, mask = generate(spec)
        ip, gp = out / f"img_{i:03d}.png", out / f"gt_{i:03d}.png"
        save_image(img, ip)
        save_gray(mask.astype(np.uint8) * 255, gp)
        paths.append((ip, gp))
    return paths
