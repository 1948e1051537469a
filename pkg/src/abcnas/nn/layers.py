"""Layer primitives with exact analytic backward passes (float64, NHWC)."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def he_normal(rng: np.random.Generator, shape, fan_in: int, gain: float = 2.0) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(gain / fan_in), size=shape)


class Layer:
    kind = "layer"
    tag = 0

    def __init__(self):
        self.params: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.params))

    def forward(self, x: np.ndarray, training: bool = False, rng=None, reuse_masks: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self):
        self.grads = [np.zeros_like(p) for p in self.params]


class Identity(Layer):
    kind = "identity"
    tag = 1

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        return x

    def backward(self, dout):
        return dout


class Flatten(Layer):
    kind = "flatten"
    tag = 2

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Dense(Layer):
    """Affine map, optionally followed by ReLU."""

    kind = "dense"
    tag = 3

    def __init__(self, in_features: int, units: int, rng: np.random.Generator, relu: bool = True):
        super().__init__()
        gain = 2.0 if relu else 1.0
        self.params = [he_normal(rng, (in_features, units), in_features, gain), np.zeros(units)]
        self.relu = relu
        self.zero_grads()

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        w, b = self.params
        self._x = x
        z = x @ w + b
        if self.relu:
            self._mask = z > 0
            return z * self._mask
        return z

    def backward(self, dout):
        w, _ = self.params
        dz = dout * self._mask if self.relu else dout
        self.grads[0] += self._x.T @ dz
        self.grads[1] += dz.sum(axis=0)
        return dz @ w.T


class Conv2D(Layer):
    """Stride-1 convolution with zero 'same' padding, optionally followed by ReLU."""

    kind = "conv"
    tag = 4

    def __init__(self, in_channels: int, filters: int, kernel: int, rng: np.random.Generator, relu: bool = True):
        super().__init__()
        fan_in = kernel * kernel * in_channels
        self.kernel = kernel
        self.relu = relu
        self.params = [he_normal(rng, (kernel, kernel, in_channels, filters), fan_in), np.zeros(filters)]
        self.zero_grads()

    def _cols(self, x):
        k, p = self.kernel, self.kernel // 2
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        # (N, H, W, C, k, k) -> (N, H, W, k, k, C)
        win = sliding_window_view(xp, (k, k), axis=(1, 2)).transpose(0, 1, 2, 4, 5, 3)
        n, h, w = x.shape[:3]
        return win.reshape(n * h * w, -1)

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        wt, b = self.params
        self._xshape = x.shape
        self._cols_cache = self._cols(x)
        n, h, w = x.shape[:3]
        z = (self._cols_cache @ wt.reshape(-1, wt.shape[-1]) + b).reshape(n, h, w, -1)
        if self.relu:
            self._mask = z > 0
            return z * self._mask
        return z

    def backward(self, dout):
        wt, _ = self.params
        k, p = self.kernel, self.kernel // 2
        n, h, w, c = self._xshape
        dz = dout * self._mask if self.relu else dout
        d2 = dz.reshape(n * h * w, -1)
        self.grads[0] += (self._cols_cache.T @ d2).reshape(wt.shape)
        self.grads[1] += d2.sum(axis=0)
        dcols = (d2 @ wt.reshape(-1, wt.shape[-1]).T).reshape(n, h, w, k, k, c)
        dxp = np.zeros((n, h + 2 * p, w + 2 * p, c))
        for i in range(k):
            for j in range(k):
                dxp[:, i : i + h, j : j + w, :] += dcols[:, :, :, i, j, :]
        return dxp[:, p : p + h, p : p + w, :]


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""

    kind = "maxpool"
    tag = 5

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        n, h, w, c = x.shape
        h2, w2 = h // 2, w // 2
        self._xshape = x.shape
        blocks = x[:, : 2 * h2, : 2 * w2, :].reshape(n, h2, 2, w2, 2, c).transpose(0, 1, 3, 5, 2, 4)
        blocks = blocks.reshape(n, h2, w2, c, 4)
        self._argmax = blocks.argmax(axis=-1)
        return blocks.max(axis=-1)

    def backward(self, dout):
        n, h, w, c = self._xshape
        h2, w2 = h // 2, w // 2
        routed = np.zeros((n, h2, w2, c, 4))
        np.put_along_axis(routed, self._argmax[..., None], dout[..., None], axis=-1)
        routed = routed.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * h2, 2 * w2, c)
        dx = np.zeros(self._xshape)
        dx[:, : 2 * h2, : 2 * w2, :] = routed
        return dx


class Dropout(Layer):
    """Inverted dropout; active only in training mode."""

    kind = "dropout"
    tag = 6

    def __init__(self, rate: float):
        super().__init__()
        self.rate = rate
        self._mask = None

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        if not training:
            self._mask = None
            return x
        if not (reuse_masks and self._mask is not None and self._mask.shape == x.shape):
            if rng is None:
                raise ValueError("dropout in training mode needs an rng")
            self._mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


class ResidualBlock(Layer):
    """conv -> ReLU -> conv, added to a skip path (1x1 projection when channels differ).

    No activation follows the addition, so zero conv weights give the identity map.
    """

    kind = "residual_block"
    tag = 7

    def __init__(self, in_channels: int, filters: int, rng: np.random.Generator, kernel: int = 3):
        super().__init__()
        self.conv1 = Conv2D(in_channels, filters, kernel, rng, relu=True)
        self.conv2 = Conv2D(filters, filters, kernel, rng, relu=False)
        self.proj = Conv2D(in_channels, filters, 1, rng, relu=False) if in_channels != filters else None
        self.sublayers = [l for l in (self.conv1, self.conv2, self.proj) if l is not None]
        self.params = [p for l in self.sublayers for p in l.params]
        self.zero_grads()

    def zero_grads(self):
        for l in getattr(self, "sublayers", []):
            l.zero_grads()
        self.grads = [g for l in getattr(self, "sublayers", []) for g in l.grads]

    def forward(self, x, training=False, rng=None, reuse_masks=False):
        main = self.conv2.forward(self.conv1.forward(x))
        skip = self.proj.forward(x) if self.proj is not None else x
        return main + skip

    def backward(self, dout):
        dx = self.conv1.backward(self.conv2.backward(dout))
        dx = dx + (self.proj.backward(dout) if self.proj is not None else dout)
        return dx
