"""
Resampling - Integer-factor downsampling (nearest / bilinear / area) and nearest upsampling
"""

import numpy as np
from scipy import ndimage

from resshift.core.errors import DegradationError
from resshift.degrade.spec import Resampler


def _check_divisible(x: np.ndarray, scale: int) -> None:
    if scale < 1:
        raise DegradationError(f"scale must be >= 1, got {scale}")
    h, w = x.shape[-2:]
    if h % scale or w % scale:
        raise DegradationError(f"Spatial size {h}x{w} is not divisible by scale {scale}")


def downsample(x: np.ndarray, scale: int, mode: Resampler) -> np.ndarray:
    """(C, H, W) -> (C, H/scale, W/scale)"""
    _check_divisible(x, scale)
    if scale == 1:
        return x.copy()
    c, h, w = x.shape
    ho, wo = h // scale, w // scale
    if mode == Resampler.AREA:
        return x.reshape(c, ho, scale, wo, scale).mean(axis=(2, 4))
    if mode == Resampler.NEAREST:
        return x[:, ::scale, ::scale].copy()
    # Pixel-centre aligned sample positions
    rows = (np.arange(ho) + 0.5) * scale - 0.5
    cols = (np.arange(wo) + 0.5) * scale - 0.5
    grid = np.stack(np.meshgrid(rows, cols, indexing="ij"))
    return np.stack(
        [ndimage.map_coordinates(channel, grid, order=1, mode="nearest") for channel in x]
    )


def upsample_nearest(x: np.ndarray, scale: int) -> np.ndarray:
    """(C, h, w) -> (C, h*scale, w*scale) by pixel replication"""
    if scale < 1:
        raise DegradationError(f"scale must be >= 1, got {scale}")
    return np.repeat(np.repeat(x, scale, axis=-2), scale, axis=-1)
