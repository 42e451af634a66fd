"""
Training Objectives - Data term (L2 / L1, optionally ELBO-weighted) plus a perceptual regularizer

Every loss returns (value, d value / d x0_hat) so the predictor can backpropagate through it.
The perceptual distance is measured in the unit-normalised feature space of a fixed, randomly
initialised convolution stack.
"""

from enum import Enum
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resshift.core.errors import ShapeError
from resshift.core.kernel import as_tensor, check_same_shape, elbo_weight
from resshift.core.ops import avg_pool2, avg_pool2_backward, col2im, im2col
from resshift.core.rng import make_rng
from resshift.core.schedule import Schedule

NORM_EPS = 1e-10

LossAndGrad = Tuple[float, np.ndarray]


class DataTerm(str, Enum):
    """Fidelity term between x0_hat and x_0"""
    L2 = "L2"
    L1 = "L1"


class PerceptualSpec(BaseModel):
    """Fixed random-feature stack used as the perceptual distance"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    widths: Tuple[int, ...] = (8, 16, 16)
    kernel: int = 3
    seed: int = 0
    per_layer_weights: Tuple[float, ...] = (1.0, 1.0, 1.0)

    @model_validator(mode="after")
    def _check(self) -> "PerceptualSpec":
        if not self.widths or any(w < 1 for w in self.widths):
            raise ValueError("Feature widths must be a non-empty list of positive integers")
        if len(self.per_layer_weights) != len(self.widths):
            raise ValueError("per_layer_weights needs one entry per feature layer")
        if any(w < 0 for w in self.per_layer_weights):
            raise ValueError("per_layer_weights must be nonnegative")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be a positive odd number, got {self.kernel}")
        return self

    @property
    def min_size(self) -> int:
        """Smallest spatial side the stack accepts"""
        return self.kernel * 2 ** (len(self.widths) - 1)


class ObjectiveSpec(BaseModel):
    """Which data term, whether to weight it, and the perceptual regularizer strength"""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    data_term: DataTerm = DataTerm.L2
    use_elbo_weights: bool = False
    lambda_: float = Field(1.0, alias="lambda")
    perceptual: Optional[PerceptualSpec] = Field(default_factory=PerceptualSpec)

    @model_validator(mode="after")
    def _check(self) -> "ObjectiveSpec":
        if self.lambda_ < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        return self

    @property
    def perceptual_active(self) -> bool:
        return self.lambda_ > 0 and self.perceptual is not None


@lru_cache(maxsize=32)
def _feature_weights(
    spec: PerceptualSpec, channels: int
) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    rng = make_rng(spec.seed, "perceptual", channels)
    layers = []
    width = channels
    for out in spec.widths:
        fan_in = spec.kernel**2 * width
        w = rng.standard_normal((fan_in, out)) / np.sqrt(fan_in)
        b = 0.5 * rng.standard_normal(out)
        w.setflags(write=False)
        b.setflags(write=False)
        layers.append((w, b))
        width = out
    return tuple(layers)


def _features(image: np.ndarray, spec: PerceptualSpec) -> List[dict]:
    """Run the stack on a (C, H, W) image, keeping what the backward pass needs"""
    x = image.transpose(1, 2, 0)
    records = []
    weights = _feature_weights(spec, image.shape[0])
    for i, (w, b) in enumerate(weights):
        if i > 0:
            x = avg_pool2(records[-1]["f"])
        h, wd, _ = x.shape
        cols = im2col(x, spec.kernel)
        f = np.tanh(cols @ w + b).reshape(h, wd, -1)
        norm = np.sqrt(np.sum(f * f, axis=-1, keepdims=True) + NORM_EPS)
        records.append({"x_shape": x.shape, "cols": cols, "f": f, "norm": norm, "unit": f / norm})
    return records


def _check_spatial(x: np.ndarray, spec: PerceptualSpec) -> None:
    if x.ndim != 3:
        raise ShapeError(f"Perceptual loss expects (C, H, W) signals, got shape {x.shape}")
    if min(x.shape[1:]) < spec.min_size:
        raise ShapeError(
            f"Signal {x.shape[1:]} is too small for the feature stack's receptive field "
            f"(needs >= {spec.min_size} per side)"
        )


def data_loss(
    x0_hat: np.ndarray, x0: np.ndarray, t: int, spec: ObjectiveSpec, s: Schedule
) -> LossAndGrad:
    """Mean squared (or absolute) error, optionally scaled by the ELBO weight w_t"""
    x0_hat, x0 = as_tensor(x0_hat), as_tensor(x0)
    check_same_shape(x0_hat, x0)
    diff = x0_hat - x0
    n = diff.size
    if spec.data_term == DataTerm.L2:
        value = float(np.mean(diff * diff))
        grad = 2.0 * diff / n
    else:
        value = float(np.mean(np.abs(diff)))
        grad = np.sign(diff) / n
    if spec.use_elbo_weights:
        w = elbo_weight(t, s).value
        value *= w
        grad = grad * w
    return value, grad


def perceptual_loss(x0_hat: np.ndarray, x0: np.ndarray, pspec: PerceptualSpec) -> LossAndGrad:
    """Weighted sum over layers of the mean squared distance between unit-normalised features"""
    x0_hat, x0 = as_tensor(x0_hat), as_tensor(x0)
    check_same_shape(x0_hat, x0)
    _check_spatial(x0_hat, pspec)

    feats_a = _features(x0_hat, pspec)
    feats_b = _features(x0, pspec)
    weights = _feature_weights(pspec, x0_hat.shape[0])

    value = 0.0
    unit_grads = []
    for ra, rb, lw in zip(feats_a, feats_b, pspec.per_layer_weights):
        diff = ra["unit"] - rb["unit"]
        value += lw * float(np.mean(diff * diff))
        unit_grads.append(lw * 2.0 * diff / diff.size)

    # Backward through normalisation, tanh, convolution and pooling
    g = None
    for i in reversed(range(len(feats_a))):
        rec = feats_a[i]
        unit, norm = rec["unit"], rec["norm"]
        g_unit = unit_grads[i]
        g_f = (g_unit - unit * np.sum(unit * g_unit, axis=-1, keepdims=True)) / norm
        if g is not None:
            g_f = g_f + g
        g_z = g_f * (1.0 - rec["f"] ** 2)
        w, _ = weights[i]
        g_x = col2im(g_z.reshape(-1, g_z.shape[-1]) @ w.T, rec["x_shape"], pspec.kernel)
        if i > 0:
            g = avg_pool2_backward(g_x, feats_a[i - 1]["f"].shape)
        else:
            g = g_x
    return value, g.transpose(2, 0, 1)


def total_loss(
    x0_hat: np.ndarray, x0: np.ndarray, t: int, spec: ObjectiveSpec, s: Schedule
) -> LossAndGrad:
    """data_loss + lambda * perceptual_loss"""
    value, grad = data_loss(x0_hat, x0, t, spec, s)
    if spec.perceptual_active:
        p_value, p_grad = perceptual_loss(x0_hat, x0, spec.perceptual)
        value += spec.lambda_ * p_value
        grad = grad + spec.lambda_ * p_grad
    return value, grad
