"""
Residual-Shifting Kernels - Closed-form Gaussians of the HQ -> LQ Markov chain

All covariances are isotropic, so a Gaussian is carried as (mean tensor, scalar variance).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from resshift.core.errors import ShapeError
from resshift.core.schedule import Schedule

logger = logging.getLogger(__name__)

Tensor = np.ndarray


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """Isotropic Gaussian N(mean, var * I)"""

    mean: Tensor
    var: float

    def __post_init__(self):
        if self.var < 0:
            raise ValueError(f"Variance must be >= 0, got {self.var}")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)


@dataclass(frozen=True)
class ElboWeight:
    """Per-step weight of the ELBO data term; t = 1 is a defined-as-1 sentinel"""

    value: float
    is_sentinel: bool = False

    def __float__(self) -> float:
        return self.value


def as_tensor(x) -> Tensor:
    return np.asarray(x, dtype=np.float64)


def check_same_shape(*tensors: Tensor) -> None:
    shapes = {np.shape(x) for x in tensors}
    if len(shapes) > 1:
        raise ShapeError(f"Shape mismatch: {sorted(shapes)}")


def _draw(shape, rng: Optional[np.random.Generator], noise: Optional[Tensor]) -> Tensor:
    if noise is not None:
        noise = as_tensor(noise)
        if noise.shape != tuple(shape):
            raise ShapeError(f"Noise shape {noise.shape} does not match {tuple(shape)}")
        return noise
    if rng is None:
        raise ValueError("Either a generator or an explicit noise tensor is required")
    return rng.standard_normal(shape)


def forward_transition_params(
    x_prev: Tensor, x0: Tensor, y0: Tensor, t: int, s: Schedule
) -> GaussianParams:
    """q(x_t | x_{t-1}, y_0) = N(x_{t-1} + alpha_t e_0, kappa^2 alpha_t I)"""
    x_prev, x0, y0 = as_tensor(x_prev), as_tensor(x0), as_tensor(y0)
    check_same_shape(x_prev, x0, y0)
    alpha_t = s.alpha_at(t)
    return GaussianParams(mean=x_prev + alpha_t * (y0 - x0), var=s.kappa**2 * alpha_t)


def marginal_params(x0: Tensor, y0: Tensor, t: int, s: Schedule) -> GaussianParams:
    """q(x_t | x_0, y_0) = N(x_0 + eta_t e_0, kappa^2 eta_t I)"""
    x0, y0 = as_tensor(x0), as_tensor(y0)
    check_same_shape(x0, y0)
    eta_t = s.eta_at(s.check_step(t))
    return GaussianParams(mean=x0 + eta_t * (y0 - x0), var=s.kappa**2 * eta_t)


def sample_marginal(
    x0: Tensor,
    y0: Tensor,
    t: int,
    s: Schedule,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[Tensor] = None,
) -> Tensor:
    """Draw x_t = x_0 + eta_t e_0 + kappa sqrt(eta_t) xi"""
    q = marginal_params(x0, y0, t, s)
    xi = _draw(q.mean.shape, rng, noise)
    return q.mean + q.std * xi


def forward_chain(
    x0: Tensor, y0: Tensor, t: int, s: Schedule, rng: np.random.Generator
) -> Tensor:
    """Compose forward transitions 1..t starting from x_0"""
    x0, y0 = as_tensor(x0), as_tensor(y0)
    x = x0.copy()
    for step in range(1, s.check_step(t) + 1):
        q = forward_transition_params(x, x0, y0, step, s)
        x = q.mean + q.std * rng.standard_normal(x.shape)
    return x


def posterior_params(x_t: Tensor, x0: Tensor, t: int, s: Schedule) -> GaussianParams:
    """q(x_{t-1} | x_t, x_0, y_0); y_0 cancels out of the closed form"""
    x_t, x0 = as_tensor(x_t), as_tensor(x0)
    check_same_shape(x_t, x0)
    t = s.check_step(t)
    eta_t = s.eta_at(t)
    eta_prev = s.eta_at(t - 1)
    alpha_t = s.alpha_at(t)
    mean = (eta_prev / eta_t) * x_t + (alpha_t / eta_t) * x0
    return GaussianParams(mean=mean, var=s.kappa**2 * (eta_prev / eta_t) * alpha_t)


def reverse_step(
    x_t: Tensor,
    x0_hat: Tensor,
    t: int,
    s: Schedule,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[Tensor] = None,
) -> Tensor:
    """One ancestral step x_t -> x_{t-1} with the predicted x_0 plugged into the posterior"""
    q = posterior_params(x_t, x0_hat, t, s)
    if t == 1:
        # eta_0 = 0 makes the last step deterministic
        return q.mean
    eps = _draw(q.mean.shape, rng, noise)
    return q.mean + q.std * eps


def elbo_weight(t: int, s: Schedule) -> ElboWeight:
    """w_t = alpha_t / (2 kappa^2 eta_t eta_{t-1})"""
    t = s.check_step(t)
    if t == 1:
        logger.debug("ELBO weight at t=1 divides by eta_0 = 0; using the sentinel 1.0")
        return ElboWeight(value=1.0, is_sentinel=True)
    w = s.alpha_at(t) / (2 * s.kappa**2 * s.eta_at(t) * s.eta_at(t - 1))
    return ElboWeight(value=w)
