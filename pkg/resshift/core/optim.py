"""
Optimizer - Adam with bias correction and a cosine-annealed learning rate
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from resshift.core.errors import NonFiniteGradientError, ShapeError
from resshift.core.predictor import Gradient, PredictorParams

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass(eq=False)
class AdamState:
    """First/second moment estimates and the number of steps taken"""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), step=0)


def sgd_adam_step(
    params: PredictorParams,
    grad: Gradient,
    opt_state: Optional[AdamState],
    lr: float,
) -> Tuple[PredictorParams, AdamState]:
    """One Adam update; returns new params and state, inputs are left untouched"""
    if opt_state is None:
        opt_state = AdamState.zeros(params.theta.size)
    if grad.d_theta.shape != params.theta.shape or opt_state.m.shape != params.theta.shape:
        raise ShapeError(
            f"Gradient {grad.d_theta.shape} / moments {opt_state.m.shape} do not match "
            f"theta {params.theta.shape}"
        )
    if lr < 0:
        raise ValueError(f"Learning rate must be >= 0, got {lr}")
    if not grad.is_finite:
        raise NonFiniteGradientError(
            f"Rejected Adam step {opt_state.step + 1}: non-finite gradient"
        )

    g = grad.d_theta
    step = opt_state.step + 1
    m = BETA1 * opt_state.m + (1 - BETA1) * g
    v = BETA2 * opt_state.v + (1 - BETA2) * g * g
    m_hat = m / (1 - BETA1**step)
    v_hat = v / (1 - BETA2**step)
    theta = params.theta - lr * m_hat / (np.sqrt(v_hat) + EPS)
    return PredictorParams(params.layout, theta), AdamState(m=m, v=v, step=step)


def cosine_lr(step: int, total_steps: int, lr_max: float, lr_min: float) -> float:
    """Cosine annealing from lr_max at step 0 to lr_min at step total_steps - 1"""
    if total_steps <= 1:
        return lr_max
    progress = min(max(step, 0), total_steps - 1) / (total_steps - 1)
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * progress))
