"""
Noise - Additive Gaussian and Poisson shot noise on [0, 1] signals
"""

import numpy as np

from resshift.core.errors import DegradationError
from resshift.degrade.spec import NoiseKind, NoiseSpec

# Photon count of a unit-intensity pixel
POISSON_PEAK = 255.0


def _check_unit_range(x: np.ndarray) -> None:
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DegradationError(
            f"Noise expects signals in [0, 1], got range [{x.min():.4g}, {x.max():.4g}]"
        )


def gaussian_noise(x: np.ndarray, level: float, rng: np.random.Generator) -> np.ndarray:
    """x + (level / 255) xi"""
    return x + (level / 255.0) * rng.standard_normal(x.shape)


def poisson_noise(x: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Shot noise whose variance grows with intensity; zero pixels stay zero"""
    counts = rng.poisson(x * POISSON_PEAK)
    return x + scale * (counts / POISSON_PEAK - x)


def add_noise(
    x: np.ndarray, cfg: NoiseSpec, rng: np.random.Generator, clamp: bool = True
) -> np.ndarray:
    """Draw a noise type and strength from cfg and apply it"""
    x = np.asarray(x, dtype=np.float64)
    _check_unit_range(x)
    if not cfg.enabled:
        return x.copy()
    kind = NoiseKind.GAUSSIAN if rng.random() < cfg.gaussian_prob else NoiseKind.POISSON
    if kind == NoiseKind.GAUSSIAN:
        y = gaussian_noise(x, rng.uniform(*cfg.gaussian_level), rng)
    else:
        y = poisson_noise(x, rng.uniform(*cfg.poisson_scale), rng)
    return np.clip(y, 0.0, 1.0) if clamp else y
