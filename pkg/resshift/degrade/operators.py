"""
Degradation Operators - Super-resolution and inpainting pipelines plus the identity operator
"""

import logging
from typing import Optional

import numpy as np

from resshift.core.errors import DegradationError, ShapeError
from resshift.core.rng import STREAM_MASK, make_rng
from resshift.degrade.base import BaseDegradation, DegradedPair
from resshift.degrade.blur import apply_blur, sample_blur_kernel
from resshift.degrade.masks import generate_mask, is_binary
from resshift.degrade.noise import add_noise
from resshift.degrade.resample import downsample, upsample_nearest
from resshift.degrade.spec import DegradationKind, DegradationSpec

logger = logging.getLogger(__name__)

INPAINT_FILL = 0.5


def degrade_superres(
    x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
) -> np.ndarray:
    """Blur, downsample, add noise, clamp, then nearest-upsample back to the HQ shape"""
    x = np.asarray(x0, dtype=np.float64)
    h, w = x.shape[-2:]
    if h % spec.scale or w % spec.scale:
        raise DegradationError(f"Spatial size {h}x{w} is not divisible by scale {spec.scale}")

    if spec.blur.enabled:
        x = apply_blur(x, sample_blur_kernel(spec.blur, rng))
    mode = spec.resample[int(rng.integers(0, len(spec.resample)))]
    low = np.clip(downsample(x, spec.scale, mode), 0.0, 1.0)
    low = add_noise(low, spec.noise, rng, clamp=True)
    return upsample_nearest(low, spec.scale)


def degrade_inpaint(
    x0: np.ndarray, mask: np.ndarray, fill: float = INPAINT_FILL
) -> np.ndarray:
    """Replace masked pixels with a constant fill value"""
    x0 = np.asarray(x0, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != x0.shape[-2:] and mask.shape != x0.shape:
        raise ShapeError(f"Mask shape {mask.shape} does not match image shape {x0.shape}")
    if not is_binary(mask):
        raise DegradationError("Inpainting mask must contain only 0 and 1")
    return x0 * (1.0 - mask) + fill * mask


class SuperResDegradation(BaseDegradation):
    name = "superres"
    description = "Gaussian blur, downsampling, Gaussian/Poisson noise, nearest upsampling"
    kind = DegradationKind.SUPERRES

    def apply(
        self, x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
    ) -> DegradedPair:
        return DegradedPair(y=degrade_superres(self.validate_input(x0), spec, rng))


class InpaintDegradation(BaseDegradation):
    name = "inpaint"
    description = "Box, irregular, half or expand masks filled with mid-gray"
    kind = DegradationKind.INPAINT

    def apply(
        self, x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
    ) -> DegradedPair:
        x0 = self.validate_input(x0)
        mask_rng = rng if spec.mask.seed is None else make_rng(spec.mask.seed, STREAM_MASK)
        mask = generate_mask(spec.mask, x0.shape[-2:], mask_rng)
        logger.debug(f"{spec.mask.type.value} mask covers {mask.mean():.3f} of the image")
        return DegradedPair(y=degrade_inpaint(x0, mask, spec.fill), mask=mask)


class IdentityDegradation(BaseDegradation):
    name = "identity"
    description = "y = x0"
    kind = DegradationKind.IDENTITY

    def apply(
        self, x0: np.ndarray, spec: DegradationSpec, rng: Optional[np.random.Generator] = None
    ) -> DegradedPair:
        return DegradedPair(y=self.validate_input(x0).copy())
