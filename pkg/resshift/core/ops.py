"""
Numeric building blocks - im2col convolution, pooling and activations with adjoints

Feature maps are (H, W, C) arrays; convolutions use zero padding and stride 1.
"""

from typing import Callable, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x: np.ndarray, kernel: int) -> np.ndarray:
    """(H, W, C) -> (H*W, kernel*kernel*C) patch matrix"""
    if kernel == 1:
        return x.reshape(-1, x.shape[-1])
    h, w, c = x.shape
    pad = kernel // 2
    padded = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    windows = sliding_window_view(padded, (kernel, kernel), axis=(0, 1))
    # (H, W, C, k, k) -> (H, W, k, k, C)
    return np.ascontiguousarray(windows.transpose(0, 1, 3, 4, 2)).reshape(h * w, -1)


def col2im(cols: np.ndarray, shape: Tuple[int, int, int], kernel: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add patch gradients back to an (H, W, C) map"""
    h, w, c = shape
    if kernel == 1:
        return cols.reshape(h, w, c)
    pad = kernel // 2
    cols = cols.reshape(h, w, kernel, kernel, c)
    out = np.zeros((h + 2 * pad, w + 2 * pad, c))
    for i in range(kernel):
        for j in range(kernel):
            out[i : i + h, j : j + w] += cols[:, :, i, j]
    return out[pad : pad + h, pad : pad + w]


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, kernel: int) -> np.ndarray:
    """Same-size convolution; weight has shape (kernel*kernel*C_in, C_out)"""
    h, w, _ = x.shape
    return (im2col(x, kernel) @ weight + bias).reshape(h, w, -1)


def avg_pool2(x: np.ndarray) -> np.ndarray:
    """2x2 average pooling; odd trailing rows/columns are dropped"""
    h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    return x[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2, c).mean(axis=(1, 3))


def avg_pool2_backward(grad: np.ndarray, shape: Tuple[int, int, int]) -> np.ndarray:
    h2, w2, c = grad.shape
    out = np.zeros(shape)
    spread = np.repeat(np.repeat(grad, 2, axis=0), 2, axis=1) / 4.0
    out[: 2 * h2, : 2 * w2] = spread
    return out


def _tanh_grad(z: np.ndarray) -> np.ndarray:
    return 1.0 - np.tanh(z) ** 2


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _silu(z: np.ndarray) -> np.ndarray:
    return z * _sigmoid(z)


def _silu_grad(z: np.ndarray) -> np.ndarray:
    sig = _sigmoid(z)
    return sig * (1.0 + z * (1.0 - sig))


ArrayFn = Callable[[np.ndarray], np.ndarray]

ACTIVATIONS: Dict[str, Tuple[ArrayFn, ArrayFn]] = {
    "tanh": (np.tanh, _tanh_grad),
    "silu": (_silu, _silu_grad),
    "identity": (lambda z: z, np.ones_like),
}
