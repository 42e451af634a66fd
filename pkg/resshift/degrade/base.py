"""
Base Degradation Class - Foundation for all HQ -> LQ operators
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from resshift.core.errors import DegradationError
from resshift.degrade.spec import DegradationKind, DegradationSpec


@dataclass(eq=False)
class DegradedPair:
    """LQ observation y (same shape as x0) and, for inpainting, the mask used"""

    y: np.ndarray
    mask: Optional[np.ndarray] = None


class BaseDegradation(ABC):
    """Base class for all degradation operators"""

    # Operator metadata (must be overridden)
    name: str = ""
    description: str = ""
    kind: Optional[DegradationKind] = None

    @abstractmethod
    def apply(
        self, x0: np.ndarray, spec: DegradationSpec, rng: np.random.Generator
    ) -> DegradedPair:
        """
        Degrade one HQ signal

        Args:
            x0: (C, H, W) image with values in [0, 1]
            spec: Degradation parameters
            rng: Generator owned by this sample; all draws come from it

        Returns:
            DegradedPair with y in [0, 1] and the same shape as x0
        """

    def validate_input(self, x0: np.ndarray) -> np.ndarray:
        """Check shape and range of an HQ signal"""
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.ndim != 3:
            raise DegradationError(f"Expected a (C, H, W) image, got shape {x0.shape}")
        if not np.all(np.isfinite(x0)):
            raise DegradationError("Input image contains non-finite values")
        if x0.min() < 0.0 or x0.max() > 1.0:
            raise DegradationError(
                f"Input image must lie in [0, 1], got range [{x0.min():.4g}, {x0.max():.4g}]"
            )
        return x0

    def __repr__(self) -> str:
        return f"<Degradation: {self.name}>"
