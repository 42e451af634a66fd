"""
Toy Datasets - Procedural HQ images, 2-D point clouds and paired (LQ, HQ) test sets

Every item is generated from its own keyed stream, so item i is the same no matter which
items were generated before it or on which worker.
"""

from collections.abc import Sequence
from enum import Enum
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from resshift.core.rng import STREAM_DATASET, STREAM_DEGRADE, make_rng
from resshift.degrade.registry import apply_degradation
from resshift.degrade.spec import DegradationSpec


class ToyKind(str, Enum):
    BLOBS = "blobs"
    STRIPES = "stripes"
    CHECKERBOARD = "checkerboard"
    MIXED = "mixed"


class DatasetSpec(BaseModel):
    """Procedural HQ image source"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ToyKind = ToyKind.BLOBS
    size: int = 32
    channels: int = 1
    count: int = 256
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "DatasetSpec":
        if self.size < 1 or self.channels < 1 or self.count < 1:
            raise ValueError(
                f"size, channels and count must be >= 1, got "
                f"{self.size}, {self.channels}, {self.count}"
            )
        return self


def _blobs(size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    img = np.zeros((size, size))
    for _ in range(int(rng.integers(1, 5))):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        width = rng.uniform(0.06, 0.25)
        amp = rng.uniform(0.4, 1.0)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
    return img / max(img.max(), 1.0)


def _stripes(size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = rng.uniform(0, np.pi)
    period = rng.uniform(4.0, size / 2.0)
    phase = rng.uniform(0, 2 * np.pi)
    u = xx * np.cos(theta) + yy * np.sin(theta)
    return 0.5 + 0.4 * np.sin(2 * np.pi * u / period + phase)


def _checkerboard(size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = rng.uniform(0, np.pi / 2)
    period = rng.uniform(4.0, size / 2.0)
    py, px = rng.uniform(0, period, size=2)
    u = xx * np.cos(theta) + yy * np.sin(theta) + px
    v = -xx * np.sin(theta) + yy * np.cos(theta) + py
    cells = (np.floor(u / period) + np.floor(v / period)) % 2
    return 0.2 + 0.6 * cells


_PATTERNS = {
    ToyKind.BLOBS: _blobs,
    ToyKind.STRIPES: _stripes,
    ToyKind.CHECKERBOARD: _checkerboard,
}


class ToyImageDataset(Sequence):
    """Deterministic procedural images of shape (channels, size, size) in [0, 1]"""

    def __init__(
        self,
        kind: ToyKind = ToyKind.BLOBS,
        size: int = 32,
        channels: int = 1,
        count: int = 256,
        seed: int = 0,
    ):
        self.spec = DatasetSpec(kind=kind, size=size, channels=channels, count=count, seed=seed)

    @classmethod
    def from_spec(cls, spec: DatasetSpec) -> "ToyImageDataset":
        return cls(spec.kind, spec.size, spec.channels, spec.count, spec.seed)

    def __len__(self) -> int:
        return self.spec.count

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(f"Index {index} out of range for {len(self)} items")
        return self.generate(index)

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self.generate(i)

    def generate(self, index: int) -> np.ndarray:
        rng = make_rng(self.spec.seed, STREAM_DATASET, index)
        kind = self.spec.kind
        if kind == ToyKind.MIXED:
            kind = list(_PATTERNS)[int(rng.integers(0, len(_PATTERNS)))]
        base = _PATTERNS[kind](self.spec.size, rng)
        if self.spec.channels == 1:
            return np.clip(base, 0.0, 1.0)[None]
        gains = rng.uniform(0.5, 1.0, size=self.spec.channels)
        offsets = rng.uniform(0.0, 0.5, size=self.spec.channels) * (1.0 - gains)
        return np.clip(gains[:, None, None] * base + offsets[:, None, None], 0.0, 1.0)


def make_point_cloud(
    n: int, rng: np.random.Generator, centers: Optional[np.ndarray] = None, std: float = 0.1
) -> np.ndarray:
    """(n, 2) samples from an equal-weight Gaussian mixture"""
    if centers is None:
        centers = np.array([[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
    centers = np.asarray(centers, dtype=np.float64)
    labels = rng.integers(0, len(centers), size=n)
    return centers[labels] + std * rng.standard_normal((n, 2))


def make_pairs(dataset: Sequence[np.ndarray], spec: DegradationSpec, seed: int) -> np.ndarray:
    """(N, 2, C, H, W) array; index 0 of axis 1 is the LQ image, index 1 the HQ image"""
    if len(dataset) == 0:
        raise ValueError("Cannot build pairs from an empty dataset")
    pairs = []
    for i, x0 in enumerate(dataset):
        x0 = np.asarray(x0, dtype=np.float64)
        y = apply_degradation(x0, spec, make_rng(seed, STREAM_DEGRADE, i)).y
        pairs.append(np.stack([y, x0]))
    return np.stack(pairs)
