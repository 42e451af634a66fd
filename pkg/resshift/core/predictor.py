"""
Predictor - The x_0 estimator f_theta(x_t, y_0, t) with hand-written reverse-mode gradients

The network works on per-pixel feature maps. Its input is the channel concatenation of x_t,
y_0 and a broadcast sinusoidal embedding of t; its output is added to x_t, so a network whose
head is zero is the identity on x_t.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resshift.core.errors import NonFiniteLossError, ShapeError
from resshift.core.objective import ObjectiveSpec, total_loss
from resshift.core.ops import ACTIVATIONS, col2im, im2col
from resshift.core.rng import STREAM_INIT, make_rng
from resshift.core.schedule import Schedule

LAYOUT_VERSION = 1


class LayerKind(str, Enum):
    """Spatial extent of a layer"""
    AFFINE = "affine"  # per pixel
    CONV = "conv"      # kernel x kernel neighbourhood


class Activation(str, Enum):
    TANH = "tanh"
    SILU = "silu"
    IDENTITY = "identity"


class LayerSpec(BaseModel):
    """One affine/conv layer followed by a smooth nonlinearity"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LayerKind = LayerKind.AFFINE
    width: int
    kernel: int = 1
    activation: Activation = Activation.TANH
    residual: bool = False
    concat_signal: bool = False

    @model_validator(mode="after")
    def _check(self) -> "LayerSpec":
        if self.width < 1:
            raise ValueError(f"Layer width must be >= 1, got {self.width}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"Kernel size must be a positive odd number, got {self.kernel}")
        if self.kind == LayerKind.AFFINE and self.kernel != 1:
            raise ValueError("Affine layers have kernel size 1")
        return self


class PredictorLayout(BaseModel):
    """Ordered layer descriptors plus the signal geometry they expect"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    channels: int = Field(1, description="Channels of x_t / y_0 / output")
    t_embed_dim: int = Field(32, description="Width of the sinusoidal timestep embedding")
    layers: List[LayerSpec]

    @model_validator(mode="after")
    def _check(self) -> "PredictorLayout":
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        if self.t_embed_dim < 0:
            raise ValueError(f"t_embed_dim must be >= 0, got {self.t_embed_dim}")
        if not self.layers:
            raise ValueError("Layout needs at least one layer")
        if self.layers[-1].width != self.channels:
            raise ValueError(
                f"Output layer width {self.layers[-1].width} must equal channels {self.channels}"
            )
        width = self.input_width
        for i, layer in enumerate(self.layers):
            if layer.residual and layer.width != width:
                raise ValueError(f"Residual layer {i} must keep its width ({width})")
            width = layer.width
        return self

    @property
    def signal_width(self) -> int:
        return 2 * self.channels

    @property
    def input_width(self) -> int:
        return self.signal_width + self.t_embed_dim

    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(fan_in, fan_out) of every layer's weight matrix"""
        shapes = []
        width = self.input_width
        for layer in self.layers:
            fan_in = (width + (self.signal_width if layer.concat_signal else 0)) * layer.kernel**2
            shapes.append((fan_in, layer.width))
            width = layer.width
        return shapes

    @property
    def param_count(self) -> int:
        return sum(fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_shapes())

    def to_descriptor(self) -> str:
        return json.dumps(
            {"version": LAYOUT_VERSION, "layout": self.model_dump(mode="json")}, sort_keys=True
        )

    @classmethod
    def from_descriptor(cls, text: str) -> "PredictorLayout":
        data = json.loads(text)
        if data.get("version") != LAYOUT_VERSION:
            raise ValueError(f"Unsupported layout version: {data.get('version')}")
        return cls.model_validate(data["layout"])


def reference_layout(
    channels: int = 1,
    hidden_width: int = 32,
    t_embed_dim: int = 32,
    first_kernel: int = 5,
) -> PredictorLayout:
    """Conv stem, two residual blocks and a zero-initialised head that also sees (x_t, y_0)"""
    return PredictorLayout(
        channels=channels,
        t_embed_dim=t_embed_dim,
        layers=[
            LayerSpec(kind=LayerKind.CONV, width=hidden_width, kernel=first_kernel),
            LayerSpec(width=hidden_width, residual=True),
            LayerSpec(width=hidden_width, residual=True),
            LayerSpec(width=channels, activation=Activation.IDENTITY, concat_signal=True),
        ],
    )


@dataclass(eq=False)
class PredictorParams:
    """Flat parameter vector theta laid out per PredictorLayout"""

    layout: PredictorLayout
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1 or self.theta.size != self.layout.param_count:
            raise ShapeError(
                f"theta has {self.theta.size} entries, layout needs {self.layout.param_count}"
            )

    def layer_views(
        self, vector: Optional[np.ndarray] = None
    ) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(weight, bias) views into theta (or into a same-length vector)"""
        vector = self.theta if vector is None else vector
        views = []
        offset = 0
        for fan_in, fan_out in self.layout.layer_shapes():
            w = vector[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = vector[offset : offset + fan_out]
            offset += fan_out
            views.append((w, b))
        return views

    def copy(self) -> "PredictorParams":
        return PredictorParams(self.layout, self.theta.copy())


@dataclass(eq=False)
class Gradient:
    """Gradient of a scalar loss with respect to theta"""

    d_theta: np.ndarray

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.d_theta)))


@dataclass(eq=False)
class TrainingExample:
    """One (x_t, y_0, t, x_0) tuple of a training batch"""

    x_t: np.ndarray
    y0: np.ndarray
    t: int
    x0: np.ndarray


@dataclass(eq=False)
class _Cache:
    x_t: np.ndarray
    layers: List[Dict[str, Any]] = field(default_factory=list)


def init_params(layout: PredictorLayout, seed: int = 0) -> PredictorParams:
    """Scaled-normal weights, zero biases and a zero output head"""
    rng = make_rng(seed, STREAM_INIT)
    params = PredictorParams(layout, np.zeros(layout.param_count))
    views = params.layer_views()
    for w, _ in views[:-1]:
        w[...] = rng.standard_normal(w.shape) / math.sqrt(w.shape[0])
    return params


def timestep_embedding(t: float, dim: int, max_period: float = 10000.0) -> np.ndarray:
    """Sinusoidal embedding [sin(t w_k), cos(t w_k)] over a geometric frequency ladder"""
    if dim == 0:
        return np.zeros(0)
    half = dim // 2
    freqs = np.exp(-math.log(max_period) * np.arange(half) / max(half, 1))
    args = float(t) * freqs
    emb = np.concatenate([np.sin(args), np.cos(args)])
    if dim % 2:
        emb = np.concatenate([emb, np.zeros(1)])
    return emb


def _check_inputs(params: PredictorParams, x_t: np.ndarray, y0: np.ndarray) -> None:
    if x_t.shape != y0.shape:
        raise ShapeError(f"x_t {x_t.shape} and y0 {y0.shape} must have the same shape")
    if x_t.ndim != 3 or x_t.shape[0] != params.layout.channels:
        raise ShapeError(
            f"Expected a (C={params.layout.channels}, H, W) tensor, got shape {x_t.shape}"
        )


def _forward(
    params: PredictorParams, x_t: np.ndarray, y0: np.ndarray, t: int
) -> Tuple[np.ndarray, _Cache]:
    layout = params.layout
    h_dim, w_dim = x_t.shape[1:]
    signal = np.concatenate([x_t.transpose(1, 2, 0), y0.transpose(1, 2, 0)], axis=-1)
    emb = np.broadcast_to(
        timestep_embedding(t, layout.t_embed_dim), (h_dim, w_dim, layout.t_embed_dim)
    )
    h = np.concatenate([signal, emb], axis=-1)

    cache = _Cache(x_t=x_t)
    for spec, (w, b) in zip(layout.layers, params.layer_views()):
        inp = np.concatenate([h, signal], axis=-1) if spec.concat_signal else h
        cols = im2col(inp, spec.kernel)
        z = cols @ w + b
        act, _ = ACTIVATIONS[spec.activation.value]
        a = act(z).reshape(h_dim, w_dim, spec.width)
        out = h + a if spec.residual else a
        cache.layers.append({"cols": cols, "z": z, "in_shape": inp.shape, "h_width": h.shape[-1]})
        h = out

    return x_t + h.transpose(2, 0, 1), cache


def _backward(params: PredictorParams, cache: _Cache, d_out: np.ndarray) -> np.ndarray:
    """Accumulate d(loss)/d(theta) given d(loss)/d(x0_hat)"""
    d_theta = np.zeros_like(params.theta)
    grad_views = params.layer_views(d_theta)
    g = d_out.transpose(1, 2, 0)
    layers = list(zip(params.layout.layers, params.layer_views(), cache.layers, grad_views))
    for spec, (w, _), entry, (dw, db) in reversed(layers):
        _, act_grad = ACTIVATIONS[spec.activation.value]
        dz = g.reshape(-1, spec.width) * act_grad(entry["z"])
        dw += entry["cols"].T @ dz
        db += dz.sum(axis=0)
        d_inp = col2im(dz @ w.T, entry["in_shape"], spec.kernel)
        d_h = d_inp[..., : entry["h_width"]]
        g = d_h + g if spec.residual else d_h
    return d_theta


def predict(
    params: PredictorParams, x_t: np.ndarray, y0: np.ndarray, t: int, s: Schedule
) -> np.ndarray:
    """x0_hat = f_theta(x_t, y_0, t)"""
    x_t = np.asarray(x_t, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    _check_inputs(params, x_t, y0)
    x0_hat, _ = _forward(params, x_t, y0, s.check_step(t))
    return x0_hat


def loss_and_gradient(
    params: PredictorParams,
    batch: Sequence[TrainingExample],
    objective: ObjectiveSpec,
    s: Schedule,
    workers: int = 1,
) -> Tuple[float, Gradient]:
    """Mean objective over the batch and its exact gradient with respect to theta"""
    if not batch:
        raise ValueError("Batch must not be empty")

    def run(indexed: Tuple[int, TrainingExample]) -> Tuple[float, np.ndarray]:
        index, ex = indexed
        x_t = np.asarray(ex.x_t, dtype=np.float64)
        y0 = np.asarray(ex.y0, dtype=np.float64)
        _check_inputs(params, x_t, y0)
        x0_hat, cache = _forward(params, x_t, y0, s.check_step(ex.t))
        value, d_x0_hat = total_loss(x0_hat, ex.x0, ex.t, objective, s)
        if not math.isfinite(value):
            raise NonFiniteLossError(index, value)
        return value, _backward(params, cache, d_x0_hat)

    items = list(enumerate(batch))
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]

    # Fixed index order keeps the reduction bit-reproducible
    total = 0.0
    d_theta = np.zeros_like(params.theta)
    for value, grad in results:
        total += value
        d_theta += grad
    n = len(results)
    return total / n, Gradient(d_theta / n)
