"""
Inpainting Masks - Box, irregular stroke, half-image and border-expansion masks

Masks are float arrays of shape (H, W) holding exactly 0 (kept) or 1 (missing).
"""

from typing import Callable, Dict, Tuple

import numpy as np

from resshift.degrade.spec import HalfSide, MaskKind, MaskSpec

Shape2D = Tuple[int, int]


def _box(spec: MaskSpec, shape: Shape2D, rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape)
    area = rng.uniform(*spec.box_area) * h * w
    aspect = rng.uniform(0.5, 2.0)
    bh = int(np.clip(round(np.sqrt(area * aspect)), 1, h))
    bw = int(np.clip(round(area / bh), 1, w))
    top = int(rng.integers(0, h - bh + 1))
    left = int(rng.integers(0, w - bw + 1))
    mask[top : top + bh, left : left + bw] = 1.0
    return mask


def _irregular(spec: MaskSpec, shape: Shape2D, rng: np.random.Generator) -> np.ndarray:
    """Random-walk brush strokes"""
    h, w = shape
    mask = np.zeros(shape)
    strokes = int(rng.integers(spec.stroke_count[0], spec.stroke_count[1] + 1))
    for _ in range(strokes):
        width = int(rng.integers(spec.stroke_width[0], spec.stroke_width[1] + 1))
        pad = max(width // 2, 1)
        y = int(rng.integers(0, h))
        x = int(rng.integers(0, w))
        for direction in rng.integers(0, 4, size=spec.stroke_steps):
            if direction == 0:
                y -= pad
            elif direction == 1:
                y += pad
            elif direction == 2:
                x -= pad
            else:
                x += pad
            y = int(np.clip(y, 0, h - 1))
            x = int(np.clip(x, 0, w - 1))
            mask[max(y - pad, 0) : y + pad + 1, max(x - pad, 0) : x + pad + 1] = 1.0
    return mask


def _half(spec: MaskSpec, shape: Shape2D, rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape)
    sides = list(HalfSide)
    side = spec.half_side if spec.half_side is not None else sides[int(rng.integers(0, 4))]
    if side == HalfSide.LEFT:
        mask[:, : w // 2] = 1.0
    elif side == HalfSide.RIGHT:
        mask[:, w - w // 2 :] = 1.0
    elif side == HalfSide.TOP:
        mask[: h // 2, :] = 1.0
    else:
        mask[h - h // 2 :, :] = 1.0
    return mask


def _expand(spec: MaskSpec, shape: Shape2D, rng: np.random.Generator) -> np.ndarray:
    """Mask a border on every side (outpainting)"""
    h, w = shape
    mask = np.zeros(shape)
    top, bottom, left, right = rng.uniform(*spec.expand_border, size=4)
    mask[: int(round(top * h)), :] = 1.0
    mask[h - int(round(bottom * h)) :, :] = 1.0
    mask[:, : int(round(left * w))] = 1.0
    mask[:, w - int(round(right * w)) :] = 1.0
    return mask


_GENERATORS: Dict[MaskKind, Callable[[MaskSpec, Shape2D, np.random.Generator], np.ndarray]] = {
    MaskKind.BOX: _box,
    MaskKind.IRREGULAR: _irregular,
    MaskKind.HALF: _half,
    MaskKind.EXPAND: _expand,
}


def generate_mask(spec: MaskSpec, shape: Shape2D, rng: np.random.Generator) -> np.ndarray:
    """Binary (H, W) mask of the configured type"""
    h, w = shape
    if h < 1 or w < 1:
        raise ValueError(f"Mask shape must be positive, got {shape}")
    return _GENERATORS[spec.type](spec, (h, w), rng)


def is_binary(mask: np.ndarray) -> bool:
    return bool(np.all((mask == 0) | (mask == 1)))
