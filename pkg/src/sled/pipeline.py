"""End-to-end segmentation: single scale, multi-scale fusion and batch runs."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.transform import resize as _sk_resize

from . import metrics
from .bisection import BisectionResult, lesion_superpixels, select_channel
from .config import PipelineConfig
from .entropy import Partition, minimize
from .errors import AllScalesDegenerate, SingleRegion, SledError, TooFewSamples
from .graph import build_graph, knn_sparsify
from .multiscale import ScaleResult, integrate
from .outlier import fit_forest, score_map
from .postprocess import binarize, postprocess
from .preprocess import load_image, load_mask, preprocess, save_gray, save_image
from .superpixel import SuperpixelLabeling, slic_segment

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif"}
GT_SUFFIXES = ("", "_segmentation", "_Segmentation", "_lesion", "_mask")
# below this the region means are indistinguishable and no split is meaningful
DEGENERATE_SIGMA2 = 1e-12
OVERLAY_COLOR = (0.0, 1.0, 0.0)


@dataclass
class ScaleOutputBundle:
    scale: int
    superpixels: SuperpixelLabeling
    partition: Partition | None
    bisection: BisectionResult | None
    healthy: np.ndarray            # superpixel ids in the healthy class
    score_map: np.ndarray | None
    sigma2_b: float
    degenerate: bool

    def as_scale_result(self) -> ScaleResult:
        return ScaleResult(self.scale, self.score_map, self.sigma2_b, self.degenerate)

    def lesion_pixels(self) -> np.ndarray:
        """Pixel mask of the darker class straight from the bisection."""
        if self.degenerate:
            return np.zeros(self.superpixels.shape, dtype=bool)
        return lesion_superpixels(self.superpixels, self.partition, self.bisection)[self.superpixels.labels]


@dataclass
class SegmentationResult:
    mask: np.ndarray
    score_map: np.ndarray
    mode: str
    bundles: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _degenerate(scale, sp, partition=None, bisection=None, sigma2=0.0) -> ScaleOutputBundle:
    return ScaleOutputBundle(scale, sp, partition, bisection, np.empty(0, np.intp), None, sigma2, True)


def run_single_scale(img: np.ndarray, scale: int, cfg: PipelineConfig) -> ScaleOutputBundle:
    """Superpixels, graph, entropy minimization, bisection, then outlier scores."""
    sp = slic_segment(img, scale)
    g = build_graph(sp, cfg.r, cfg.sigma_k, fixed_sigma=cfg.fixed_sigma, reconnect=True)
    g = knn_sparsify(g, cfg.knn_k)
    p = minimize(g, cfg.refine_max_iters, exhaustive=cfg.exhaustive_refine)
    try:
        result = select_channel(img, sp, p)
    except SingleRegion:
        return _degenerate(scale, sp, p)
    if result.sigma2_b <= DEGENERATE_SIGMA2:
        return _degenerate(scale, sp, p, result, result.sigma2_b)
    healthy = np.flatnonzero(~lesion_superpixels(sp, p, result))
    try:
        forest = fit_forest(sp.means[healthy], cfg.n_trees, cfg.seed + scale,
                            subsample=cfg.forest_subsample)
    except TooFewSamples:
        return _degenerate(scale, sp, p, result, result.sigma2_b)
    return ScaleOutputBundle(scale, sp, p, result, healthy, score_map(forest, sp),
                             result.sigma2_b, False)


def _threshold_and_clean(fused: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    raw = binarize(fused, cfg.ght_nu, cfg.ght_tau, cfg.ght_kappa, cfg.ght_omega)
    return postprocess(raw)


def run_multi_scale(img: np.ndarray, cfg: PipelineConfig) -> SegmentationResult:
    bundles = [run_single_scale(img, s, cfg) for s in cfg.ms_scales]
    try:
        fused = integrate([b.as_scale_result() for b in bundles])
    except AllScalesDegenerate:
        log.warning("every scale is degenerate; returning an empty mask")
        empty = np.zeros(img.shape[:2])
        return SegmentationResult(empty.astype(bool), empty, "ms", bundles, ["all_scales_degenerate"])
    return SegmentationResult(_threshold_and_clean(fused, cfg), fused, "ms", bundles)


def run_ss(img: np.ndarray, cfg: PipelineConfig) -> SegmentationResult:
    """Single-scale result: the bisection's darker class, hole-filled, one component."""
    bundle = run_single_scale(img, cfg.ss_scale, cfg)
    scores = bundle.score_map if bundle.score_map is not None else np.zeros(img.shape[:2])
    warnings = ["degenerate_scale"] if bundle.degenerate else []
    if warnings:
        log.warning("scale %d is degenerate; returning an empty mask", cfg.ss_scale)
    return SegmentationResult(postprocess(bundle.lesion_pixels()), scores, "ss", [bundle], warnings)


def segment_image(raw: np.ndarray, cfg: PipelineConfig) -> SegmentationResult:
    """Preprocess once, segment at working size, and map results back to ``raw``'s size."""
    h, w = raw.shape[:2]
    img = preprocess(raw, cfg.target_w, cfg.target_h)
    result = run_ss(img, cfg) if cfg.mode == "ss" else run_multi_scale(img, cfg)
    if result.mask.shape != (h, w):
        result.mask = _sk_resize(result.mask.astype(np.float64), (h, w), order=0,
                                 anti_aliasing=False) > 0.5
        result.score_map = np.clip(_sk_resize(result.score_map, (h, w), order=1,
                                              anti_aliasing=False), 0.0, 1.0)
    return result


def mask_to_png(mask: np.ndarray) -> np.ndarray:
    return np.where(mask, 255, 0).astype(np.uint8)


def score_to_png(scores: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(scores, 0.0, 1.0) * 255.0).astype(np.uint8)


def overlay(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Input image with the mask's 1-px inner boundary drawn in green."""
    edge = mask & ~ndimage.binary_erosion(mask, ndimage.generate_binary_structure(2, 1),
                                          border_value=0)
    out = np.array(img, dtype=np.float64, copy=True)
    out[edge] = OVERLAY_COLOR
    return out


def write_outputs(result: SegmentationResult, raw: np.ndarray, out_dir, stem: str) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"mask": out / f"{stem}_mask.png", "score": out / f"{stem}_score.png",
             "overlay": out / f"{stem}_overlay.png"}
    save_gray(mask_to_png(result.mask), paths["mask"])
    save_gray(score_to_png(result.score_map), paths["score"])
    save_image(overlay(raw, result.mask), paths["overlay"])
    return paths


def list_images(directory) -> list[Path]:
    d = Path(directory)
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _gt_candidates(stem: str) -> list[str]:
    names = [stem + suffix for suffix in GT_SUFFIXES]
    if stem.startswith("img_"):
        names.append("gt_" + stem[4:])
    return names


def find_ground_truth(stem: str, gt_files: dict, exclude=None) -> Path | None:
    """Look up ``stem``'s mask in a ``{stem: path}`` index of the GT directory.

    ``exclude`` is the image itself, for when images and masks share a folder.
    """
    for name in _gt_candidates(stem):
        path = gt_files.get(name)
        if path is not None and path != exclude:
            return path
    return None


def _index(paths) -> dict:
    return {p.stem: p for p in paths}


def ground_truth_index(gt_dir) -> dict:
    """``{stem: path}`` of mask files; images that have their own mask alongside are dropped."""
    index = _index(list_images(gt_dir))
    return {stem: p for stem, p in index.items()
            if find_ground_truth(stem, index, exclude=p) is None}


def _process_one(task):
    path, gt_path, out_dir, cfg = task
    stem = Path(path).stem
    try:
        raw = load_image(path)
        result = segment_image(raw, cfg)
        write_outputs(result, raw, out_dir, stem)
    except (SledError, OSError, ValueError) as exc:
        log.error("%s failed: %s", path, exc)
        return stem, f"error:{type(exc).__name__}", None
    if gt_path is None:
        return stem, "no_gt", result.warnings
    try:
        report = metrics.evaluate(result.mask, load_mask(gt_path))
    except (SledError, OSError) as exc:
        log.error("%s: cannot score against %s: %s", stem, gt_path, exc)
        return stem, f"error:{type(exc).__name__}", result.warnings
    return stem, report, result.warnings


def batch_tasks(input_dir, gt_dir, out_dir, cfg: PipelineConfig) -> list:
    images = list_images(input_dir)
    gt_index = ground_truth_index(gt_dir) if gt_dir is not None else {}
    tasks = []
    gts = {p: find_ground_truth(p.stem, gt_index, exclude=p) for p in images}
    matched = set(gts.values()) - {None}
    for p in images:
        if p in matched:
            continue    # a ground-truth file sharing the input directory
        gt = gts[p]
        tasks.append((p, gt, Path(out_dir), cfg))
    return tasks


def run_batch(input_dir, gt_dir, out_dir, cfg: PipelineConfig, jobs: int = 1):
    """Segment every image in ``input_dir``; write masks and, with GT, a CSV report.

    Returns ``(rows, mean_report)`` where rows pair each stem with a
    :class:`~sled.metrics.MetricsReport` or a status string.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = batch_tasks(input_dir, gt_dir, out, cfg)
    if not tasks:
        log.warning("no images found in %s", input_dir)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process_one, tasks))
    else:
        results = [_process_one(t) for t in tasks]
    rows = [(stem, outcome) for stem, outcome, _ in results]
    mean = None
    if gt_dir is not None:
        mean = metrics.write_report(out / "metrics.csv", rows)
    return rows, mean


def evaluate_dirs(pred_dir, gt_dir, report_path):
    """Score existing ``*_mask.png`` (or plain) predictions against a GT directory."""
    gt_index = ground_truth_index(gt_dir)
    rows = []
    for p in list_images(pred_dir):
        stem = p.stem
        if stem.endswith("_score") or stem.endswith("_overlay"):
            continue
        if stem.endswith("_mask"):
            stem = stem[: -len("_mask")]
        gt = find_ground_truth(stem, gt_index)
        if gt is None:
            rows.append((stem, "no_gt"))
            continue
        try:
            rows.append((stem, metrics.evaluate(load_mask(p), load_mask(gt))))
        except (SledError, OSError) as exc:
            rows.append((stem, f"error:{type(exc).__name__}"))
    return rows, metrics.write_report(report_path, rows)
