"""
Degradation Specs - Parameter models for blur, resampling, noise and inpainting masks
"""

from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

PROB_TOL = 1e-9


class DegradationKind(str, Enum):
    SUPERRES = "superres"
    INPAINT = "inpaint"
    IDENTITY = "identity"


class Resampler(str, Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"
    AREA = "area"


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"


class MaskKind(str, Enum):
    BOX = "box"
    IRREGULAR = "irregular"
    HALF = "half"
    EXPAND = "expand"


class HalfSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"


def _check_range(name: str, bounds: Tuple[float, float], lower: float = 0.0) -> None:
    lo, hi = bounds
    if lo < lower or hi < lo:
        raise ValueError(f"{name} must satisfy {lower} <= low <= high, got {bounds}")


class BlurSpec(BaseModel):
    """Isotropic / anisotropic Gaussian blur kernels on a square window"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    iso_prob: float = 0.6
    aniso_prob: float = 0.4
    window: int = 13
    width_range: Tuple[float, float] = (0.2, 0.8)

    @model_validator(mode="after")
    def _check(self) -> "BlurSpec":
        if self.iso_prob < 0 or self.aniso_prob < 0:
            raise ValueError("Blur probabilities must be nonnegative")
        if abs(self.iso_prob + self.aniso_prob - 1.0) > PROB_TOL:
            raise ValueError(
                f"Blur probabilities must sum to 1, got {self.iso_prob} + {self.aniso_prob}"
            )
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"Blur window must be a positive odd size, got {self.window}")
        if not self.width_range[0] > 0:
            raise ValueError(f"Blur widths must be positive, got {self.width_range}")
        _check_range("width_range", self.width_range)
        return self


class NoiseSpec(BaseModel):
    """Gaussian (level in 1/255 units) or Poisson shot noise, one of them per draw"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    gaussian_prob: float = 0.5
    poisson_prob: float = 0.5
    gaussian_level: Tuple[float, float] = (1.0, 15.0)
    poisson_scale: Tuple[float, float] = (0.05, 0.3)

    @model_validator(mode="after")
    def _check(self) -> "NoiseSpec":
        if self.gaussian_prob < 0 or self.poisson_prob < 0:
            raise ValueError("Noise probabilities must be nonnegative")
        if abs(self.gaussian_prob + self.poisson_prob - 1.0) > PROB_TOL:
            raise ValueError(
                f"Noise probabilities must sum to 1, got {self.gaussian_prob} + {self.poisson_prob}"
            )
        _check_range("gaussian_level", self.gaussian_level)
        _check_range("poisson_scale", self.poisson_scale)
        return self

    @classmethod
    def gaussian(cls, level: float) -> "NoiseSpec":
        """Always Gaussian at a fixed level (in 1/255 units)"""
        return cls(gaussian_prob=1.0, poisson_prob=0.0, gaussian_level=(level, level))

    @classmethod
    def poisson(cls, scale: float) -> "NoiseSpec":
        """Always Poisson at a fixed scale"""
        return cls(gaussian_prob=0.0, poisson_prob=1.0, poisson_scale=(scale, scale))


class MaskSpec(BaseModel):
    """Geometry of an inpainting mask; 1 marks a missing pixel"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    type: MaskKind = MaskKind.BOX
    seed: Optional[int] = Field(None, description="Overrides the per-sample mask stream")
    box_area: Tuple[float, float] = (0.1, 0.4)
    stroke_count: Tuple[int, int] = (1, 4)
    stroke_width: Tuple[int, int] = (2, 6)
    stroke_steps: int = 40
    half_side: Optional[HalfSide] = None
    expand_border: Tuple[float, float] = (0.1, 0.25)

    @model_validator(mode="after")
    def _check(self) -> "MaskSpec":
        _check_range("box_area", self.box_area)
        if self.box_area[1] > 1:
            raise ValueError(f"box_area fractions must be <= 1, got {self.box_area}")
        _check_range("stroke_count", self.stroke_count, lower=1)
        _check_range("stroke_width", self.stroke_width, lower=1)
        if self.stroke_steps < 1:
            raise ValueError(f"stroke_steps must be >= 1, got {self.stroke_steps}")
        _check_range("expand_border", self.expand_border)
        if self.expand_border[1] >= 0.5:
            raise ValueError(f"expand_border fractions must be < 0.5, got {self.expand_border}")
        return self


class DegradationSpec(BaseModel):
    """Everything needed to turn an HQ signal into its LQ observation"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: DegradationKind = DegradationKind.SUPERRES
    blur: BlurSpec = Field(default_factory=BlurSpec)
    scale: int = 4
    resample: Tuple[Resampler, ...] = (Resampler.NEAREST, Resampler.BILINEAR, Resampler.AREA)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    mask: MaskSpec = Field(default_factory=MaskSpec)
    fill: float = 0.5

    @model_validator(mode="after")
    def _check(self) -> "DegradationSpec":
        if self.scale < 1:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        if not self.resample:
            raise ValueError("At least one resampler is required")
        if not 0.0 <= self.fill <= 1.0:
            raise ValueError(f"fill must lie in [0, 1], got {self.fill}")
        return self

    @classmethod
    def identity(cls) -> "DegradationSpec":
        return cls(
            kind=DegradationKind.IDENTITY,
            blur=BlurSpec(enabled=False),
            scale=1,
            noise=NoiseSpec(enabled=False),
        )
