"""Layers of the raw-epoch network, with hand-written backward passes.

Every layer caches what its backward pass needs during forward. Tensors
are [batch, channels, height, width] except for the shift/scale layer,
which sees [batch, electrodes, time].
"""

from __future__ import annotations

import numpy as np


class Layer:
    def params(self):
        return []

    def grads(self):
        return []

    def out_shape(self, in_shape):
        return in_shape

    def param_count(self):
        return sum(p.size for p in self.params())


class ShiftScale(Layer):
    """Learned shift/scale normalization of each electrode row.

    With per-channel mean m = x.mean(time) and shifted = x - (W_sh m),
    the output is shifted * (W_sc sigma) broadcast over time, where sigma
    is the per-channel population standard deviation of shifted. With
    W_sh = I and W_sc diagonal with entries 1/sigma_c^2 this reduces to a
    per-channel z-score.
    """

    def __init__(self, n_channels: int, dtype=np.float32):
        self.w_shift = np.eye(n_channels, dtype=dtype)
        self.w_scale = np.eye(n_channels, dtype=dtype)
        self.d_shift = np.zeros_like(self.w_shift)
        self.d_scale = np.zeros_like(self.w_scale)

    def params(self):
        return [self.w_shift, self.w_scale]

    def grads(self):
        return [self.d_shift, self.d_scale]

    def forward(self, x, train=False, rng=None):
        xbar = x.mean(axis=2)  # [B, C]
        shifted = x - (xbar @ self.w_shift.T)[:, :, None]
        mu = shifted.mean(axis=2)
        var = (shifted * shifted).mean(axis=2) - mu * mu
        sigma = np.sqrt(np.maximum(var, 0.0))
        gain = sigma @ self.w_scale.T
        self._cache = (xbar, shifted, mu, sigma, gain)
        return shifted * gain[:, :, None]

    def backward(self, dy):
        xbar, shifted, mu, sigma, gain = self._cache
        t = shifted.shape[2]
        d_gain = np.sum(dy * shifted, axis=2)  # [B, C]
        self.d_scale[:] = d_gain.T @ sigma
        d_sigma = d_gain @ self.w_scale
        ds = dy * gain[:, :, None]
        safe = sigma > 0
        coef = np.where(safe, d_sigma / (t * np.where(safe, sigma, 1.0)), 0.0)
        ds += coef[:, :, None] * (shifted - mu[:, :, None])
        dm = -ds.sum(axis=2)
        self.d_shift[:] = dm.T @ xbar
        dxbar = dm @ self.w_shift
        return ds + (dxbar / t)[:, :, None]


class Conv(Layer):
    """Valid 2-D convolution, stride 1; kernel height must be 1 or the full input height.

    The work is organized as large matrix products: when the reduction
    depth cin*kh is large the kernel is applied as one [cout*kw, cin*kh]
    GEMM followed by shifted accumulation; otherwise windows along time
    are gathered into a column matrix.
    """

    MAX_TEMP_BYTES = 96 * 2**20

    def __init__(self, cin, cout, kh, kw, rng, dtype=np.float32):
        fan_in = cin * kh * kw
        fan_out = cout * kh * kw
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        self.weight = rng.uniform(-limit, limit, size=(cout, cin, kh, kw)).astype(dtype)
        self.bias = np.zeros(cout, dtype=dtype)
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.d_weight, self.d_bias]

    def out_shape(self, in_shape):
        cin, h, w = in_shape
        cout, cin_k, kh, kw = self.weight.shape
        if cin != cin_k:
            raise ValueError(f"expected {cin_k} input channels, got {cin}")
        if kh not in (1, h) or kh > h or kw > w:
            raise ValueError(f"kernel {kh}x{kw} incompatible with input {h}x{w}")
        return (cout, h - kh + 1, w - kw + 1)

    # [B, Cin, H, W] -> folded [Ce, Be, T] where Ce is the reduction depth
    def _fold(self, x):
        b, cin, h, w = x.shape
        kh = self.weight.shape[2]
        if kh == h and kh != 1:
            return np.ascontiguousarray(x.reshape(b, cin * h, w).transpose(1, 0, 2))
        return np.ascontiguousarray(x.transpose(1, 0, 2, 3).reshape(cin, b * h, w))

    def _unfold(self, v, x_shape):
        b, cin, h, w = x_shape
        kh = self.weight.shape[2]
        if kh == h and kh != 1:
            return np.ascontiguousarray(v.transpose(1, 0, 2)).reshape(b, cin, h, w)
        return np.ascontiguousarray(v.reshape(cin, b, h, w).transpose(1, 0, 2, 3))

    def _deep(self):
        cout, cin, kh, kw = self.weight.shape
        return cin * kh >= kw

    def forward(self, x, train=False, rng=None):
        b, cin, h, w = x.shape
        cout, _, kh, kw = self.weight.shape
        self.out_shape((cin, h, w))
        wo = w - kw + 1
        self._x_shape = x.shape
        xf = self._fold(x)
        self._xf = xf
        ce, be, t = xf.shape
        dtype = x.dtype
        if self._deep():
            wall = np.ascontiguousarray(
                self.weight.reshape(cout, ce, kw).transpose(0, 2, 1)).reshape(cout * kw, ce)
            out = np.empty((cout, be, wo), dtype)
            step = max(1, self.MAX_TEMP_BYTES // (cout * kw * t * x.itemsize))
            for s in range(0, be, step):
                e = min(be, s + step)
                full = (wall @ xf[:, s:e].reshape(ce, -1)).reshape(cout, kw, e - s, t)
                acc = full[:, 0, :, :wo].copy()
                for k in range(1, kw):
                    acc += full[:, k, :, k:k + wo]
                out[:, s:e] = acc
            self._col = None
        else:
            sv = xf.strides
            win = np.lib.stride_tricks.as_strided(
                xf, (ce, be, wo, kw), (sv[0], sv[1], sv[2], sv[2]))
            col = np.ascontiguousarray(win.transpose(1, 2, 0, 3)).reshape(be * wo, ce * kw)
            self._col = col
            out = (col @ self.weight.reshape(cout, ce * kw).T).reshape(be, wo, cout)
            out = np.ascontiguousarray(out.transpose(2, 0, 1))
        out += self.bias[:, None, None]
        if kh == h and kh != 1:
            return np.ascontiguousarray(out.transpose(1, 0, 2)).reshape(b, cout, 1, wo)
        return np.ascontiguousarray(out.reshape(cout, b, h, wo).transpose(1, 0, 2, 3))

    def backward(self, dy):
        b, cin, h, w = self._x_shape
        cout, _, kh, kw = self.weight.shape
        wo = w - kw + 1
        self.d_bias[:] = dy.sum(axis=(0, 2, 3))
        xf = self._xf
        ce, be, t = xf.shape
        if kh == h and kh != 1:
            dyf = np.ascontiguousarray(dy.reshape(b, cout, wo).transpose(1, 0, 2))
        else:
            dyf = np.ascontiguousarray(dy.transpose(1, 0, 2, 3).reshape(cout, be, wo))
        if self._deep():
            wall = np.ascontiguousarray(
                self.weight.reshape(cout, ce, kw).transpose(0, 2, 1)).reshape(cout * kw, ce)
            d_wall = np.zeros_like(wall)
            dxf = np.empty_like(xf)
            step = max(1, self.MAX_TEMP_BYTES // (cout * kw * t * dy.itemsize))
            for s in range(0, be, step):
                e = min(be, s + step)
                # embed dy at each kernel shift; shared by the dW and dx GEMMs
                emb = np.zeros((cout, kw, e - s, t), dy.dtype)
                for k in range(kw):
                    emb[:, k, :, k:k + wo] = dyf[:, s:e]
                emb_m = emb.reshape(cout * kw, -1)
                d_wall += emb_m @ xf[:, s:e].reshape(ce, -1).T
                dxf[:, s:e] = (wall.T @ emb_m).reshape(ce, e - s, t)
            self.d_weight[:] = d_wall.reshape(cout, kw, ce).transpose(0, 2, 1).reshape(self.weight.shape)
        else:
            dym = np.ascontiguousarray(dyf.transpose(1, 2, 0)).reshape(be * wo, cout)
            self.d_weight[:] = (dym.T @ self._col).reshape(self.weight.shape)
            dcol = (dym @ self.weight.reshape(cout, ce * kw)).reshape(be, wo, ce, kw)
            dxf = np.zeros_like(xf)
            dct = dcol.transpose(2, 0, 1, 3)
            for k in range(kw):
                dxf[:, :, k:k + wo] += dct[:, :, :, k]
        return self._unfold(dxf, self._x_shape)


class Square(Layer):
    def forward(self, x, train=False, rng=None):
        self._x = x
        return x * x

    def backward(self, dy):
        return 2.0 * self._x * dy


class AvgPool(Layer):
    """Average pooling 1 x kw with stride 1 x sw (windows may overlap)."""

    def __init__(self, kw: int, sw: int):
        self.kw = kw
        self.sw = sw

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if w < self.kw:
            raise ValueError(f"pool window {self.kw} exceeds input width {w}")
        return (c, h, (w - self.kw) // self.sw + 1)

    def forward(self, x, train=False, rng=None):
        self._x_shape = x.shape
        wo = (x.shape[-1] - self.kw) // self.sw + 1
        sv = x.strides
        win = np.lib.stride_tricks.as_strided(
            x, x.shape[:-1] + (wo, self.kw), sv[:-1] + (sv[-1] * self.sw, sv[-1]))
        return win.mean(axis=-1)

    def backward(self, dy):
        dx = np.zeros(self._x_shape, dy.dtype)
        scale = np.asarray(1.0 / self.kw, dtype=dy.dtype)
        for p in range(dy.shape[-1]):
            dx[..., p * self.sw:p * self.sw + self.kw] += dy[..., p:p + 1] * scale
        return dx


class LogClamp(Layer):
    """Elementwise log with the input clamped below at eps."""

    def __init__(self, eps: float = 1e-6):
        self.eps = eps

    def forward(self, x, train=False, rng=None):
        clamped = np.maximum(x, np.asarray(self.eps, dtype=x.dtype))
        self._clamped = clamped
        self._below = x < self.eps
        return np.log(clamped)

    def backward(self, dy):
        dx = dy / self._clamped
        dx[self._below] = 0.0
        return dx


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by 1/(1-p) at train time."""

    def __init__(self, p: float = 0.2):
        if not 0.0 <= p < 1.0:
            raise ValueError("dropout probability must lie in [0, 1)")
        self.p = p

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / np.asarray(keep, dtype=x.dtype)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
