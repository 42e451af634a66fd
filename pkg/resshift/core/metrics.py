"""
Image Metrics - MSE, PSNR and a global-statistics SSIM on [0, 1] signals
"""

import math

import numpy as np

from resshift.core.kernel import as_tensor, check_same_shape

# Reported in place of +inf when the two signals are identical
PSNR_CAP_DB = 99.0

SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    diff = a - b
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float) -> float:
    if value < 0:
        raise ValueError(f"MSE must be >= 0, got {value}")
    if value == 0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / value), PSNR_CAP_DB)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE) for unit peak signals, capped at PSNR_CAP_DB"""
    return psnr_from_mse(mse(a, b))


def ssim_global(a: np.ndarray, b: np.ndarray) -> float:
    """SSIM computed once from whole-image means, variances and covariance

    This is a single global window, not the Gaussian or 7x7 sliding-window mean of
    skimage.metrics.structural_similarity, so values differ from windowed SSIM on
    images with local structure. Equal to 1 only for identical images.
    """
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = np.mean((a - mu_a) * (b - mu_b))
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(num / den)
