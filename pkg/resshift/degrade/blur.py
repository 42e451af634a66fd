"""
Blur - Discretised Gaussian kernels and reflect-padded convolution
"""

from typing import Tuple

import numpy as np
from scipy import ndimage

from resshift.degrade.spec import BlurSpec


def gaussian_kernel(sigma_x: float, sigma_y: float, window: int = 13) -> np.ndarray:
    """Axis-aligned Gaussian sampled on the integer grid of a window x window patch, unit sum"""
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError(f"Kernel widths must be positive, got ({sigma_x}, {sigma_y})")
    half = (window - 1) / 2.0
    grid = np.arange(window, dtype=np.float64) - half
    y, x = np.meshgrid(grid, grid, indexing="ij")
    k = np.exp(-(x * x) / (2 * sigma_x**2) - (y * y) / (2 * sigma_y**2))
    return k / k.sum()


def sample_blur_kernel(spec: BlurSpec, rng: np.random.Generator) -> np.ndarray:
    """Isotropic with probability iso_prob, otherwise independent widths per axis"""
    lo, hi = spec.width_range
    if rng.random() < spec.iso_prob:
        sigma = rng.uniform(lo, hi)
        return gaussian_kernel(sigma, sigma, spec.window)
    sigma_x, sigma_y = rng.uniform(lo, hi, size=2)
    return gaussian_kernel(sigma_x, sigma_y, spec.window)


def kernel_moments(k: np.ndarray) -> Tuple[float, float]:
    """Variances of the column (x) and row (y) marginals of a kernel"""
    half = (k.shape[0] - 1) / 2.0
    grid = np.arange(k.shape[0], dtype=np.float64) - half
    var_x = float(np.sum(k.sum(axis=0) * grid**2))
    var_y = float(np.sum(k.sum(axis=1) * grid**2))
    return var_x, var_y


def apply_blur(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Convolve every channel of a (C, H, W) image with k using reflect padding"""
    return np.stack([ndimage.convolve(channel, k, mode="reflect") for channel in x])
