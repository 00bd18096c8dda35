"""Unsupervised skin-lesion segmentation.

Superpixel graphs are partitioned by minimizing two-dimensional structural
entropy, regions are split into lesion and healthy skin by between-class
variance, and isolation-forest outlier scores from several superpixel
scales are fused into the final mask.
"""
from .config import PipelineConfig, load_config, parse_config
from .entropy import Partition, minimize, structural_entropy
from .graph import SuperpixelGraph, build_graph, knn_sparsify
from .metrics import MetricsReport, compute, confusion
from .preprocess import load_image
from .pipeline import run_batch, run_multi_scale, run_single_scale, segment_image
from .superpixel import SuperpixelLabeling, slic_segment

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig", "load_config", "parse_config", "Partition", "minimize",
    "structural_entropy", "SuperpixelGraph", "build_graph", "knn_sparsify",
    "MetricsReport", "compute", "confusion", "run_batch", "run_multi_scale",
    "run_single_scale", "segment_image", "load_image", "SuperpixelLabeling", "slic_segment",
]
