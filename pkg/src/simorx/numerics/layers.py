"""Dense layers with explicit forward and backward passes.

Activations use a channels-last layout ``[batch, height, width, channels]``
internally so that the im2col buffer and the normalisation axis are both
contiguous.  The functional wrappers at the bottom accept the channels-first
single-sample layout ``[channels, height, width]`` used at the API boundary.

Conv weights live in GEMM layout ``[kh * kw * c_in, c_out]`` so the forward
pass is a single matrix product with no repacking; the canonical
``[c_out, c_in, kh, kw]`` view used by checkpoints is exposed through the
``weights`` property.

Backward passes overwrite ``grad_*`` slots; gradients are not accumulated
across calls.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ConfigError


def _pad_amounts(kernel: int, dilation: int) -> tuple[int, int]:
    # Zero padding that preserves the spatial size ("same").  For even
    # effective kernels the extra zero goes on the high side.
    effective = (kernel - 1) * dilation + 1
    lo = (effective - 1) // 2
    return lo, effective - 1 - lo


class Conv2D:
    """2-D convolution with same-size zero padding.

    ``forward`` runs one GEMM on an im2col buffer; the buffer is kept only
    when ``train=True`` because the backward pass reuses it.
    """

    kind = "conv2d"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel=(3, 3),
        dilation=(1, 1),
        *,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        if in_channels < 1 or out_channels < 1:
            raise ConfigError("channel counts must be positive")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = (int(kernel[0]), int(kernel[1]))
        self.dilation = (int(dilation[0]), int(dilation[1]))
        kh, kw = self.kernel
        fan_in = in_channels * kh * kw
        fan_out = out_channels * kh * kw
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        if rng is None:
            w = np.zeros((out_channels, in_channels, kh, kw))
        else:
            w = rng.uniform(-limit, limit, size=(out_channels, in_channels, kh, kw))
        self.wmat = np.ascontiguousarray(
            w.transpose(2, 3, 1, 0).reshape(kh * kw * in_channels, out_channels), dtype=dtype
        )
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.grad_wmat = np.zeros_like(self.wmat)
        self.grad_bias = np.zeros_like(self.bias)
        self._cols = None
        self._spatial = None

    @property
    def dtype(self):
        return self.wmat.dtype

    @property
    def weights(self) -> np.ndarray:
        """Canonical ``[c_out, c_in, kh, kw]`` view (a copy)."""
        kh, kw = self.kernel
        return np.ascontiguousarray(
            self.wmat.reshape(kh, kw, self.in_channels, self.out_channels).transpose(3, 2, 0, 1)
        )

    @weights.setter
    def weights(self, value: np.ndarray) -> None:
        kh, kw = self.kernel
        expected = (self.out_channels, self.in_channels, kh, kw)
        value = np.asarray(value)
        if value.shape != expected:
            raise ConfigError(f"weights must be {expected}, got {value.shape}")
        self.wmat = np.ascontiguousarray(
            value.transpose(2, 3, 1, 0).reshape(kh * kw * self.in_channels, self.out_channels),
            dtype=self.dtype,
        )
        self.grad_wmat = np.zeros_like(self.wmat)

    @property
    def grad_weights(self) -> np.ndarray:
        kh, kw = self.kernel
        return np.ascontiguousarray(
            self.grad_wmat.reshape(kh, kw, self.in_channels, self.out_channels).transpose(3, 2, 0, 1)
        )

    def param_items(self):
        return [
            ("weights", self.wmat, self.grad_wmat),
            ("bias", self.bias, self.grad_bias),
        ]

    def astype(self, dtype) -> "Conv2D":
        self.wmat = self.wmat.astype(dtype)
        self.bias = self.bias.astype(dtype)
        self.grad_wmat = np.zeros_like(self.wmat)
        self.grad_bias = np.zeros_like(self.bias)
        return self

    def _im2col(self, x: np.ndarray, pads: tuple[int, int, int, int]) -> np.ndarray:
        m, h, w, c = x.shape
        kh, kw = self.kernel
        dh, dw = self.dilation
        ph_lo, ph_hi, pw_lo, pw_hi = pads
        if ph_lo or ph_hi or pw_lo or pw_hi:
            xp = np.zeros((m, h + ph_lo + ph_hi, w + pw_lo + pw_hi, c), dtype=x.dtype)
            xp[:, ph_lo : ph_lo + h, pw_lo : pw_lo + w, :] = x
        else:
            xp = x
        sm, sh, sw, sc = xp.strides
        view = as_strided(
            xp,
            shape=(m, h, w, kh, kw, c),
            strides=(sm, sh, sw, sh * dh, sw * dw, sc),
        )
        return view.reshape(m * h * w, kh * kw * c)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[-1] != self.in_channels:
            raise ConfigError(
                f"conv2d expects [batch, h, w, {self.in_channels}], got {x.shape}"
            )
        m, h, w, _ = x.shape
        kh, kw = self.kernel
        dh, dw = self.dilation
        ph_lo, ph_hi = _pad_amounts(kh, dh)
        pw_lo, pw_hi = _pad_amounts(kw, dw)
        cols = self._im2col(x, (ph_lo, ph_hi, pw_lo, pw_hi))
        out = cols @ self.wmat
        out += self.bias
        if train:
            self._cols = cols
            self._spatial = (m, h, w)
        return out.reshape(m, h, w, self.out_channels)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cols is None:
            raise RuntimeError("backward called without a train-mode forward")
        m, h, w = self._spatial
        kh, kw = self.kernel
        dh, dw = self.dilation
        gm = grad_out.reshape(m * h * w, self.out_channels)
        self.grad_bias = gm.sum(axis=0)
        self.grad_wmat = self._cols.T @ gm
        # The input gradient is itself a same-size correlation: the padded
        # output gradient against the spatially flipped kernel, with the
        # transposed pad split.
        ph_lo, ph_hi = _pad_amounts(kh, dh)
        pw_lo, pw_hi = _pad_amounts(kw, dw)
        eff_h = (kh - 1) * dh
        eff_w = (kw - 1) * dw
        gcols = self._im2col(
            grad_out, (eff_h - ph_lo, eff_h - ph_hi, eff_w - pw_lo, eff_w - pw_hi)
        )
        wrot = np.ascontiguousarray(
            self.wmat.reshape(kh, kw, self.in_channels, self.out_channels)[::-1, ::-1]
            .transpose(0, 1, 3, 2)
            .reshape(kh * kw * self.out_channels, self.in_channels)
        )
        self._cols = None
        return (gcols @ wrot).reshape(m, h, w, self.in_channels)


class LayerNorm:
    """Normalisation over the channel axis, separately at every grid position.

    ``gamma`` and ``beta`` are per-channel.  ``epsilon`` is added to the
    variance before the square root; the default keeps the normalised
    variance within 1e-3 of one whenever the input variance exceeds 1e-6.
    """

    kind = "layer_norm"

    def __init__(self, num_channels: int, *, epsilon: float = 1e-9, dtype=np.float32):
        if num_channels < 1:
            raise ConfigError("num_channels must be positive")
        self.num_channels = int(num_channels)
        self.epsilon = float(epsilon)
        self.gamma = np.ones(num_channels, dtype=dtype)
        self.beta = np.zeros(num_channels, dtype=dtype)
        self.grad_gamma = np.zeros_like(self.gamma)
        self.grad_beta = np.zeros_like(self.beta)
        self._cache = None

    @property
    def dtype(self):
        return self.gamma.dtype

    def param_items(self):
        return [
            ("gamma", self.gamma, self.grad_gamma),
            ("beta", self.beta, self.grad_beta),
        ]

    def astype(self, dtype) -> "LayerNorm":
        self.gamma = self.gamma.astype(dtype)
        self.beta = self.beta.astype(dtype)
        self.grad_gamma = np.zeros_like(self.gamma)
        self.grad_beta = np.zeros_like(self.beta)
        return self

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.shape[-1] != self.num_channels:
            raise ConfigError(
                f"layer_norm expects trailing axis {self.num_channels}, got {x.shape}"
            )
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = np.mean(xc * xc, axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + np.asarray(self.epsilon, dtype=x.dtype))
        xhat = xc * inv
        if train:
            self._cache = (xhat, inv)
        return self.gamma * xhat + self.beta

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called without a train-mode forward")
        xhat, inv = self._cache
        lead = tuple(range(grad_out.ndim - 1))
        self.grad_gamma = (grad_out * xhat).sum(axis=lead)
        self.grad_beta = grad_out.sum(axis=lead)
        g = grad_out * self.gamma
        gmean = g.mean(axis=-1, keepdims=True)
        proj = (g * xhat).mean(axis=-1, keepdims=True)
        self._cache = None
        return (g - gmean - xhat * proj) * inv


class ReLU:
    """Elementwise max(x, 0).  The subgradient at exactly zero is zero."""

    kind = "relu"

    def __init__(self):
        self._mask = None
        self.last_min_abs = None

    def param_items(self):
        return []

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if train:
            self._mask = x > 0
            # Distance of the nearest pre-activation to the kink; the
            # gradient checker refuses inputs that sit on it.
            self.last_min_abs = float(np.min(np.abs(x))) if x.size else np.inf
        return np.maximum(x, 0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError("backward called without a train-mode forward")
        out = grad_out * self._mask
        self._mask = None
        return out


def conv2d(x: np.ndarray, layer: Conv2D) -> np.ndarray:
    """Convolve a single channels-first sample ``[c_in, h, w] -> [c_out, h, w]``."""
    y = layer.forward(np.transpose(x, (1, 2, 0))[None])
    return np.transpose(y[0], (2, 0, 1))


def conv2d_direct(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, dilation=(1, 1)) -> np.ndarray:
    """Reference convolution with explicit loops, channels-first single sample.

    Slow; exists to cross-check the GEMM path.
    """
    c_out, c_in, kh, kw = weights.shape
    if x.shape[0] != c_in:
        raise ConfigError("input channels do not match the kernel")
    _, h, w = x.shape
    dh, dw = int(dilation[0]), int(dilation[1])
    ph_lo, _ = _pad_amounts(kh, dh)
    pw_lo, _ = _pad_amounts(kw, dw)
    out = np.zeros((c_out, h, w), dtype=np.result_type(x, weights))
    for o in range(c_out):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for c in range(c_in):
                    for a in range(kh):
                        for b in range(kw):
                            ii = i + a * dh - ph_lo
                            jj = j + b * dw - pw_lo
                            if 0 <= ii < h and 0 <= jj < w:
                                acc += weights[o, c, a, b] * x[c, ii, jj]
                out[o, i, j] = acc + bias[o]
    return out


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, *, epsilon: float = 1e-9, channel_axis: int = -1) -> np.ndarray:
    """Functional layer normalisation over ``channel_axis``."""
    xm = np.moveaxis(x, channel_axis, -1)
    mu = xm.mean(axis=-1, keepdims=True)
    xc = xm - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    out = gamma * (xc / np.sqrt(var + epsilon)) + beta
    return np.moveaxis(out, -1, channel_axis)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)
