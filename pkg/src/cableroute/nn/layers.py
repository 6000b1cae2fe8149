"""Minimal layer zoo with hand-written backward passes.

Everything is float64 and single-threaded numpy; reductions keep a fixed
order so repeated runs produce bit-identical parameters.  Each layer
caches what its backward pass needs, so forward/backward pairs must be
called in matching order.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    pass


class IndexOutOfVocabulary(IndexError):
    pass


class Param:
    """A named tensor with gradient buffer and a trainable flag."""

    def __init__(self, value: np.ndarray, trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    @property
    def shape(self):
        return self.value.shape


class Layer:
    def params(self) -> dict:
        return {}

    def zero_grad(self):
        for p in self.params().values():
            p.grad[:] = 0.0


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 zero_init: bool = False):
        if zero_init:
            w = np.zeros((n_in, n_out))
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        self.w = Param(w)
        self.b = Param(np.zeros(n_out))
        self._x = None

    def params(self):
        return {"w": self.w, "b": self.b}

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.w.value.shape[0]:
            raise ShapeMismatch(f"dense expects (B,{self.w.value.shape[0]}), got {x.shape}")
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.w.grad += self._x.T @ dy
        self.b.grad += dy.sum(axis=0)
        return dy @ self.w.value.T


class ReLU(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, 0.0)


class Flatten(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy.reshape(self._shape)


class Conv2d(Layer):
    """3x3 convolution, stride 2, pad 1, via explicit patch gather."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 kernel: int = 3, stride: int = 2, pad: int = 1):
        self.c_in, self.c_out = c_in, c_out
        self.k, self.stride, self.pad = kernel, stride, pad
        fan_in = c_in * kernel * kernel
        self.w = Param(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, c_out)))
        self.b = Param(np.zeros(c_out))
        self._cols = None
        self._in_shape = None

    def params(self):
        return {"w": self.w, "b": self.b}

    def out_hw(self, h: int, w: int):
        oh = (h + 2 * self.pad - self.k) // self.stride + 1
        ow = (w + 2 * self.pad - self.k) // self.stride + 1
        return oh, ow

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ShapeMismatch(f"conv expects (B,{self.c_in},H,W), got {x.shape}")
        B, C, H, W = x.shape
        oh, ow = self.out_hw(H, W)
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad), (self.pad, self.pad)))
        cols = np.empty((B, oh, ow, C, self.k, self.k))
        s = self.stride
        for ky in range(self.k):
            for kx in range(self.k):
                cols[:, :, :, :, ky, kx] = xp[
                    :, :, ky:ky + s * oh:s, kx:kx + s * ow:s].transpose(0, 2, 3, 1)
        self._cols = cols.reshape(B * oh * ow, C * self.k * self.k)
        self._in_shape = (B, C, H, W)
        out = self._cols @ self.w.value + self.b.value
        return out.reshape(B, oh, ow, self.c_out).transpose(0, 3, 1, 2)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        B, C, H, W = self._in_shape
        oh, ow = self.out_hw(H, W)
        dflat = dy.transpose(0, 2, 3, 1).reshape(B * oh * ow, self.c_out)
        self.w.grad += self._cols.T @ dflat
        self.b.grad += dflat.sum(axis=0)
        dcols = (dflat @ self.w.value.T).reshape(B, oh, ow, C, self.k, self.k)
        dxp = np.zeros((B, C, H + 2 * self.pad, W + 2 * self.pad))
        s = self.stride
        for ky in range(self.k):
            for kx in range(self.k):
                dxp[:, :, ky:ky + s * oh:s, kx:kx + s * ow:s] += \
                    dcols[:, :, :, :, ky, kx].transpose(0, 3, 1, 2)
        if self.pad:
            return dxp[:, :, self.pad:-self.pad, self.pad:-self.pad]
        return dxp


class Embedding(Layer):
    """Token table; forward concatenates looked-up rows per sample."""

    def __init__(self, vocab: int, dim: int, rng: np.random.Generator):
        self.vocab = vocab
        self.table = Param(rng.normal(0.0, 1.0, size=(vocab, dim)))
        self._idx = None

    def params(self):
        return {"table": self.table}

    def forward(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices)
        if idx.min() < 0 or idx.max() >= self.vocab:
            raise IndexOutOfVocabulary(f"index outside [0,{self.vocab})")
        self._idx = idx
        out = self.table.value[idx]            # (B, slots, dim)
        return out.reshape(idx.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        d = dy.reshape(self._idx.shape[0], self._idx.shape[1], -1)
        np.add.at(self.table.grad, self._idx, d)
        return np.zeros_like(d, dtype=np.float64)  # indices carry no gradient
