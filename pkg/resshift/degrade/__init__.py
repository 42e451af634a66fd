"""
Degradation operators and toy data for ResShift
"""

from resshift.degrade.base import BaseDegradation, DegradedPair
from resshift.degrade.blur import apply_blur, gaussian_kernel, kernel_moments, sample_blur_kernel
from resshift.degrade.datasets import (
    DatasetSpec,
    ToyImageDataset,
    ToyKind,
    make_pairs,
    make_point_cloud,
)
from resshift.degrade.masks import generate_mask, is_binary
from resshift.degrade.noise import add_noise
from resshift.degrade.operators import degrade_inpaint, degrade_superres
from resshift.degrade.registry import DegradationRegistry, apply_degradation
from resshift.degrade.resample import downsample, upsample_nearest
from resshift.degrade.spec import (
    BlurSpec,
    DegradationKind,
    DegradationSpec,
    HalfSide,
    MaskKind,
    MaskSpec,
    NoiseSpec,
    Resampler,
)

__all__ = [
    "BaseDegradation",
    "DegradedPair",
    "DegradationRegistry",
    "apply_degradation",
    "apply_blur",
    "gaussian_kernel",
    "sample_blur_kernel",
    "kernel_moments",
    "downsample",
    "upsample_nearest",
    "degrade_superres",
    "degrade_inpaint",
    "add_noise",
    "generate_mask",
    "is_binary",
    "DatasetSpec",
    "ToyImageDataset",
    "ToyKind",
    "make_pairs",
    "make_point_cloud",
    "BlurSpec",
    "DegradationKind",
    "DegradationSpec",
    "HalfSide",
    "MaskKind",
    "MaskSpec",
    "NoiseSpec",
    "Resampler",
]
