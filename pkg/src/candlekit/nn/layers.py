"""Layer specs with forward/backward passes on numpy arrays.

Tensors are plain ndarrays laid out N x C x H x W for images, N x C x L for
sequences, and N x F flat. Convolution is cross-correlation (no kernel
flip) with zero padding; max-pool ties break to the first index in
row-major window order so the backward routing is deterministic. Training
runs in float32; gradient checking builds float64 parameters.

Output dims follow floor((in + 2*pad - kernel) / stride) + 1; a stack that
would reach a nonpositive dim fails at build time with InvalidShape rather
than at some later forward pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import BadSpec, InvalidShape, ShapeMismatch
from ..rng import Rng


@dataclass(frozen=True)
class Conv2D:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    pad: int = 0


@dataclass(frozen=True)
class Conv1D:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    pad: int = 0


@dataclass(frozen=True)
class MaxPool2D:
    k: int
    stride: int


@dataclass(frozen=True)
class MaxPool1D:
    k: int
    stride: int


@dataclass(frozen=True)
class Dense:
    n_in: int
    n_out: int


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class Sigmoid:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Reshape:
    shape: tuple[int, ...]


@dataclass(frozen=True)
class NearestUpsample2D:
    factor: int


LayerSpec = (
    Conv2D
    | Conv1D
    | MaxPool2D
    | MaxPool1D
    | Dense
    | ReLU
    | Sigmoid
    | Flatten
    | Reshape
    | NearestUpsample2D
)


def _out_dim(n: int, k: int, s: int, p: int) -> int:
    return (n + 2 * p - k) // s + 1


def output_shape(spec: LayerSpec, in_shape: tuple[int, ...]) -> tuple[int, ...]:
    """Per-sample output shape (batch dim excluded); raises InvalidShape."""
    if isinstance(spec, Conv2D):
        if len(in_shape) != 3 or in_shape[0] != spec.in_ch:
            raise InvalidShape(f"Conv2D({spec.in_ch}ch) cannot take input {in_shape}")
        oh = _out_dim(in_shape[1], spec.kernel, spec.stride, spec.pad)
        ow = _out_dim(in_shape[2], spec.kernel, spec.stride, spec.pad)
        if oh < 1 or ow < 1:
            raise InvalidShape(f"Conv2D would produce {oh}x{ow} from {in_shape}")
        return (spec.out_ch, oh, ow)
    if isinstance(spec, Conv1D):
        if len(in_shape) != 2 or in_shape[0] != spec.in_ch:
            raise InvalidShape(f"Conv1D({spec.in_ch}ch) cannot take input {in_shape}")
        ol = _out_dim(in_shape[1], spec.kernel, spec.stride, spec.pad)
        if ol < 1:
            raise InvalidShape(f"Conv1D would produce length {ol} from {in_shape}")
        return (spec.out_ch, ol)
    if isinstance(spec, MaxPool2D):
        if len(in_shape) != 3:
            raise InvalidShape(f"MaxPool2D needs CxHxW input, got {in_shape}")
        oh = _out_dim(in_shape[1], spec.k, spec.stride, 0)
        ow = _out_dim(in_shape[2], spec.k, spec.stride, 0)
        if oh < 1 or ow < 1:
            raise InvalidShape(f"MaxPool2D would produce {oh}x{ow} from {in_shape}")
        return (in_shape[0], oh, ow)
    if isinstance(spec, MaxPool1D):
        if len(in_shape) != 2:
            raise InvalidShape(f"MaxPool1D needs CxL input, got {in_shape}")
        ol = _out_dim(in_shape[1], spec.k, spec.stride, 0)
        if ol < 1:
            raise InvalidShape(f"MaxPool1D would produce length {ol} from {in_shape}")
        return (in_shape[0], ol)
    if isinstance(spec, Dense):
        if len(in_shape) != 1 or in_shape[0] != spec.n_in:
            raise InvalidShape(f"Dense({spec.n_in}) cannot take input {in_shape}")
        return (spec.n_out,)
    if isinstance(spec, (ReLU, Sigmoid)):
        return in_shape
    if isinstance(spec, Flatten):
        return (int(np.prod(in_shape)),)
    if isinstance(spec, Reshape):
        if int(np.prod(in_shape)) != int(np.prod(spec.shape)):
            raise InvalidShape(f"cannot reshape {in_shape} into {spec.shape}")
        return tuple(spec.shape)
    if isinstance(spec, NearestUpsample2D):
        if len(in_shape) != 3:
            raise InvalidShape(f"NearestUpsample2D needs CxHxW input, got {in_shape}")
        return (in_shape[0], in_shape[1] * spec.factor, in_shape[2] * spec.factor)
    raise BadSpec(f"unknown layer spec {spec!r}")


class Params:
    """Weight/bias with same-shape gradient and Adam-moment buffers."""

    __slots__ = ("weight", "bias", "grad_w", "grad_b", "m_w", "v_w", "m_b", "v_b", "step")

    def __init__(self, weight: np.ndarray | None, bias: np.ndarray | None) -> None:
        self.weight = weight
        self.bias = bias
        self.grad_w = np.zeros_like(weight) if weight is not None else None
        self.grad_b = np.zeros_like(bias) if bias is not None else None
        self.m_w = np.zeros_like(weight) if weight is not None else None
        self.v_w = np.zeros_like(weight) if weight is not None else None
        self.m_b = np.zeros_like(bias) if bias is not None else None
        self.v_b = np.zeros_like(bias) if bias is not None else None
        self.step = 0

    @property
    def has_params(self) -> bool:
        return self.weight is not None


def _he_uniform(shape: tuple[int, ...], fan_in: int, seed: int, dtype) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    rng = Rng(seed)
    flat = np.array(
        [(2.0 * rng.uniform() - 1.0) * bound for _ in range(int(np.prod(shape)))]
    )
    return flat.reshape(shape).astype(dtype)


def init_params(spec: LayerSpec, seed: int, dtype=np.float32) -> Params:
    """He-uniform weights (U(-b, b), b = sqrt(6/fan_in)), zero biases."""
    if isinstance(spec, Conv2D):
        if min(spec.in_ch, spec.out_ch, spec.kernel, spec.stride) < 1 or spec.pad < 0:
            raise BadSpec(f"bad Conv2D spec {spec}")
        fan_in = spec.in_ch * spec.kernel * spec.kernel
        w = _he_uniform((spec.out_ch, spec.in_ch, spec.kernel, spec.kernel), fan_in, seed, dtype)
        return Params(w, np.zeros(spec.out_ch, dtype=dtype))
    if isinstance(spec, Conv1D):
        if min(spec.in_ch, spec.out_ch, spec.kernel, spec.stride) < 1 or spec.pad < 0:
            raise BadSpec(f"bad Conv1D spec {spec}")
        fan_in = spec.in_ch * spec.kernel
        w = _he_uniform((spec.out_ch, spec.in_ch, spec.kernel), fan_in, seed, dtype)
        return Params(w, np.zeros(spec.out_ch, dtype=dtype))
    if isinstance(spec, Dense):
        if min(spec.n_in, spec.n_out) < 1:
            raise BadSpec(f"bad Dense spec {spec}")
        w = _he_uniform((spec.n_in, spec.n_out), spec.n_in, seed, dtype)
        return Params(w, np.zeros(spec.n_out, dtype=dtype))
    if isinstance(spec, (MaxPool2D, MaxPool1D)):
        if min(spec.k, spec.stride) < 1:
            raise BadSpec(f"bad pool spec {spec}")
        return Params(None, None)
    if isinstance(spec, NearestUpsample2D) and spec.factor < 1:
        raise BadSpec(f"bad upsample factor {spec.factor}")
    return Params(None, None)


def _im2col2d(xp: np.ndarray, k: int, s: int, oh: int, ow: int) -> np.ndarray:
    """Padded input (N,C,Hp,Wp) -> patch matrix (N*oh*ow, C*k*k)."""
    v = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
    return v.transpose(0, 2, 3, 1, 4, 5).reshape(xp.shape[0] * oh * ow, -1)


def _im2col1d(xp: np.ndarray, k: int, s: int, ol: int) -> np.ndarray:
    v = sliding_window_view(xp, k, axis=2)[:, :, ::s]
    return v.transpose(0, 2, 1, 3).reshape(xp.shape[0] * ol, -1)


def forward(spec: LayerSpec, params: Params, x: np.ndarray):
    """Returns (output, cache); cache feeds the matching backward call."""
    if isinstance(spec, Conv2D):
        if x.ndim != 4 or x.shape[1] != spec.in_ch:
            raise ShapeMismatch(f"Conv2D expected (N,{spec.in_ch},H,W), got {x.shape}")
        n, _, h, w = x.shape
        k, s, p = spec.kernel, spec.stride, spec.pad
        oh, ow = _out_dim(h, k, s, p), _out_dim(w, k, s, p)
        if oh < 1 or ow < 1:
            raise ShapeMismatch(f"Conv2D output would be {oh}x{ow}")
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        cols = _im2col2d(xp, k, s, oh, ow)
        w_mat = params.weight.reshape(spec.out_ch, -1)
        out = cols @ w_mat.T + params.bias
        y = np.ascontiguousarray(out.reshape(n, oh, ow, spec.out_ch).transpose(0, 3, 1, 2))
        return y, (x.shape, xp)
    if isinstance(spec, Conv1D):
        if x.ndim != 3 or x.shape[1] != spec.in_ch:
            raise ShapeMismatch(f"Conv1D expected (N,{spec.in_ch},L), got {x.shape}")
        n, _, length = x.shape
        k, s, p = spec.kernel, spec.stride, spec.pad
        ol = _out_dim(length, k, s, p)
        if ol < 1:
            raise ShapeMismatch(f"Conv1D output would be length {ol}")
        xp = np.pad(x, ((0, 0), (0, 0), (p, p))) if p else x
        cols = _im2col1d(xp, k, s, ol)
        w_mat = params.weight.reshape(spec.out_ch, -1)
        out = cols @ w_mat.T + params.bias
        y = np.ascontiguousarray(out.reshape(n, ol, spec.out_ch).transpose(0, 2, 1))
        return y, (x.shape, xp)
    if isinstance(spec, MaxPool2D):
        if x.ndim != 4:
            raise ShapeMismatch(f"MaxPool2D expected 4-d input, got {x.shape}")
        k, s = spec.k, spec.stride
        v = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        vf = v.reshape(*v.shape[:4], k * k)
        idx = vf.argmax(axis=-1)
        y = np.take_along_axis(vf, idx[..., None], axis=-1)[..., 0]
        return np.ascontiguousarray(y), (x.shape, idx)
    if isinstance(spec, MaxPool1D):
        if x.ndim != 3:
            raise ShapeMismatch(f"MaxPool1D expected 3-d input, got {x.shape}")
        k, s = spec.k, spec.stride
        v = sliding_window_view(x, k, axis=2)[:, :, ::s]
        idx = v.argmax(axis=-1)
        y = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
        return np.ascontiguousarray(y), (x.shape, idx)
    if isinstance(spec, Dense):
        if x.ndim != 2 or x.shape[1] != spec.n_in:
            raise ShapeMismatch(f"Dense expected (N,{spec.n_in}), got {x.shape}")
        return x @ params.weight + params.bias, x
    if isinstance(spec, ReLU):
        mask = x > 0
        return np.where(mask, x, 0), mask
    if isinstance(spec, Sigmoid):
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        np.clip(y, 1e-7, 1.0 - 1e-7, out=y)
        return y, y
    if isinstance(spec, Flatten):
        return x.reshape(x.shape[0], -1), x.shape
    if isinstance(spec, Reshape):
        return x.reshape((x.shape[0],) + tuple(spec.shape)), x.shape
    if isinstance(spec, NearestUpsample2D):
        if x.ndim != 4:
            raise ShapeMismatch(f"NearestUpsample2D expected 4-d input, got {x.shape}")
        f = spec.factor
        return x.repeat(f, axis=2).repeat(f, axis=3), x.shape
    raise BadSpec(f"unknown layer spec {spec!r}")


def backward(spec: LayerSpec, params: Params, cache, grad_out: np.ndarray) -> np.ndarray:
    """Exact reverse-mode gradient; accumulates into params.grad_w/grad_b."""
    if isinstance(spec, Conv2D):
        x_shape, xp = cache
        n, _, h, w = x_shape
        k, s, p = spec.kernel, spec.stride, spec.pad
        oh, ow = grad_out.shape[2], grad_out.shape[3]
        cols = _im2col2d(xp, k, s, oh, ow)
        dout = grad_out.transpose(0, 2, 3, 1).reshape(-1, spec.out_ch)
        params.grad_w += (dout.T @ cols).reshape(params.weight.shape)
        params.grad_b += dout.sum(axis=0)
        w_mat = params.weight.reshape(spec.out_ch, -1)
        dcols = (dout @ w_mat).reshape(n, oh, ow, spec.in_ch, k, k)
        dxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * oh : s, j : j + s * ow : s] += dcols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        return dxp[:, :, p : p + h, p : p + w] if p else dxp
    if isinstance(spec, Conv1D):
        x_shape, xp = cache
        n, _, length = x_shape
        k, s, p = spec.kernel, spec.stride, spec.pad
        ol = grad_out.shape[2]
        cols = _im2col1d(xp, k, s, ol)
        dout = grad_out.transpose(0, 2, 1).reshape(-1, spec.out_ch)
        params.grad_w += (dout.T @ cols).reshape(params.weight.shape)
        params.grad_b += dout.sum(axis=0)
        w_mat = params.weight.reshape(spec.out_ch, -1)
        dcols = (dout @ w_mat).reshape(n, ol, spec.in_ch, k)
        dxp = np.zeros_like(xp)
        for i in range(k):
            dxp[:, :, i : i + s * ol : s] += dcols[:, :, :, i].transpose(0, 2, 1)
        return dxp[:, :, p : p + length] if p else dxp
    if isinstance(spec, MaxPool2D):
        x_shape, idx = cache
        k, s = spec.k, spec.stride
        n, c, oh, ow = grad_out.shape
        n_i, c_i, oh_i, ow_i = np.indices((n, c, oh, ow), sparse=True)
        rows = oh_i * s + idx // k
        cols = ow_i * s + idx % k
        dx = np.zeros(x_shape, dtype=grad_out.dtype)
        np.add.at(dx, (n_i, c_i, rows, cols), grad_out)
        return dx
    if isinstance(spec, MaxPool1D):
        x_shape, idx = cache
        s = spec.stride
        n, c, ol = grad_out.shape
        n_i, c_i, ol_i = np.indices((n, c, ol), sparse=True)
        pos = ol_i * s + idx
        dx = np.zeros(x_shape, dtype=grad_out.dtype)
        np.add.at(dx, (n_i, c_i, pos), grad_out)
        return dx
    if isinstance(spec, Dense):
        x = cache
        params.grad_w += x.T @ grad_out
        params.grad_b += grad_out.sum(axis=0)
        return grad_out @ params.weight.T
    if isinstance(spec, ReLU):
        mask = cache
        return grad_out * mask
    if isinstance(spec, Sigmoid):
        y = cache
        return grad_out * y * (1.0 - y)
    if isinstance(spec, (Flatten, Reshape)):
        return grad_out.reshape(cache)
    if isinstance(spec, NearestUpsample2D):
        f = spec.factor
        n, c, h, w = cache
        return grad_out.reshape(n, c, h, f, w, f).sum(axis=(3, 5))
    raise BadSpec(f"unknown layer spec {spec!r}")
