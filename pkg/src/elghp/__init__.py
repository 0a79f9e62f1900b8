"""Extended Local Gradient Hexa Pattern face descriptor and verification system."""

from ._backend import BACKEND
from .descriptor import DescriptorConfig, extract_features
from .imageio import GrayImage, load_pgm, read_pgm, resize_to_canonical
from .matcher import Gallery, GalleryEntry, MatchResult, SplitSpec, l1_distance, nearest, run_experiment
from .pipeline import PipelineConfig, run_pipeline

__all__ = [
    "BACKEND",
    "DescriptorConfig",
    "Gallery",
    "GalleryEntry",
    "GrayImage",
    "MatchResult",
    "PipelineConfig",
    "SplitSpec",
    "extract_features",
    "l1_distance",
    "load_pgm",
    "nearest",
    "read_pgm",
    "resize_to_canonical",
    "run_experiment",
    "run_pipeline",
]
