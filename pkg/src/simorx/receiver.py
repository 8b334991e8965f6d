"""Convolutional receiver: post-FFT grid in, per-bit LLRs out.

The network sees the received grid of every antenna as stacked real planes
and returns one logit per coded bit at every resource element.  Positive
logits favour bit 1 (the package-wide LLR convention).

Architecture: an input convolution, ``num_blocks`` residual blocks, and an
output convolution down to ``out_bits`` channels.  Every convolution is
3x3, dilation 1, zero same-padding.  Blocks follow the pre-activation
pattern (norm, ReLU, conv, twice) with an additive skip; the skip uses a
1x1 projection only where the width changes.

Internally activations are channels-last ``[batch, F, S, C]``; the public
input is channels-first ``[batch, 2 n_rx, F, S]`` and the output is the
LLR grid ``[batch, F, S, out_bits]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .numerics.layers import Conv2D, LayerNorm, ReLU
from .phy.grid import GridConfig

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ModelSpec:
    in_channels: int      # 2 * n_rx real planes
    width_in: int
    width_res: int
    num_blocks: int
    out_bits: int         # bits per modulated symbol

    def __post_init__(self):
        for name in ("in_channels", "width_in", "width_res", "num_blocks", "out_bits"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    def with_extra_block(self) -> "ModelSpec":
        return replace(self, num_blocks=self.num_blocks + 1)

    def with_out_bits(self, out_bits: int) -> "ModelSpec":
        return replace(self, out_bits=out_bits)


def _layer_rng(seed: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(slot,)))


class ResNetBlock:
    """norm -> ReLU -> conv, twice, plus an additive skip."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.norm1 = LayerNorm(in_channels, dtype=dtype)
        self.relu1 = ReLU()
        self.conv1 = Conv2D(in_channels, out_channels, rng=rng, dtype=dtype)
        self.norm2 = LayerNorm(out_channels, dtype=dtype)
        self.relu2 = ReLU()
        self.conv2 = Conv2D(out_channels, out_channels, rng=rng, dtype=dtype)
        if in_channels != out_channels:
            self.proj = Conv2D(in_channels, out_channels, kernel=(1, 1), rng=rng, dtype=dtype)
        else:
            self.proj = None

    def primitive_items(self):
        items = [
            ("norm1", self.norm1),
            ("conv1", self.conv1),
            ("norm2", self.norm2),
            ("conv2", self.conv2),
        ]
        if self.proj is not None:
            items.append(("proj", self.proj))
        return items

    def astype(self, dtype) -> "ResNetBlock":
        for _, layer in self.primitive_items():
            layer.astype(dtype)
        return self

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        h = self.norm1.forward(x, train)
        h = self.relu1.forward(h, train)
        h = self.conv1.forward(h, train)
        h = self.norm2.forward(h, train)
        h = self.relu2.forward(h, train)
        h = self.conv2.forward(h, train)
        skip = x if self.proj is None else self.proj.forward(x, train)
        return h + skip

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        g = self.conv2.backward(grad_out)
        g = self.relu2.backward(g)
        g = self.norm2.backward(g)
        g = self.conv1.backward(g)
        g = self.relu1.backward(g)
        g = self.norm1.backward(g)
        if self.proj is None:
            return g + grad_out
        return g + self.proj.backward(grad_out)

    def relu_min_abs(self):
        vals = [r.last_min_abs for r in (self.relu1, self.relu2) if r.last_min_abs is not None]
        return min(vals) if vals else None


class ReceiverModel:
    """The full receiver; owns its layers, trainable flags, and init seeding.

    Each coarse layer (input conv, every block, output conv) draws its
    initial weights from an independent stream spawned from ``seed``, so
    surgery on one layer never shifts the initialisation of another.
    """

    def __init__(self, spec: ModelSpec, seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.seed = int(seed)
        self.input_conv = Conv2D(spec.in_channels, spec.width_in, rng=_layer_rng(seed, 0), dtype=dtype)
        self.blocks = []
        for i in range(spec.num_blocks):
            in_ch = spec.width_in if i == 0 else spec.width_res
            self.blocks.append(ResNetBlock(in_ch, spec.width_res, _layer_rng(seed, 1 + i), dtype))
        self.output_conv = Conv2D(spec.width_res, spec.out_bits, rng=_layer_rng(seed, 63), dtype=dtype)
        self.trainable = {name: True for name, _ in self.coarse_layers()}

    @property
    def dtype(self):
        return self.input_conv.dtype

    def coarse_layers(self):
        layers = [("input_conv", self.input_conv)]
        layers += [(f"block{i + 1}", b) for i, b in enumerate(self.blocks)]
        layers.append(("output_conv", self.output_conv))
        return layers

    def primitive_layers(self):
        """Flat ``(qualified_name, layer)`` list in forward order."""
        out = []
        for name, layer in self.coarse_layers():
            if isinstance(layer, ResNetBlock):
                out += [(f"{name}.{sub}", prim) for sub, prim in layer.primitive_items()]
            else:
                out.append((name, layer))
        return out

    def named_param_items(self):
        for qual, layer in self.primitive_layers():
            for pname, arr, grad in layer.param_items():
                yield qual, layer.kind, pname, arr, grad

    def trainable_param_items(self):
        """Parameters of trainable coarse layers only, in a stable order."""
        out = []
        for name, layer in self.coarse_layers():
            if not self.trainable[name]:
                continue
            prims = layer.primitive_items() if isinstance(layer, ResNetBlock) else [("", layer)]
            for _, prim in prims:
                for pname, arr, grad in prim.param_items():
                    out.append((arr, grad))
        return out

    def astype(self, dtype) -> "ReceiverModel":
        for _, layer in self.primitive_layers():
            layer.astype(dtype)
        return self

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ConfigError(
                f"expected input [batch, {self.spec.in_channels}, F, S], got {x.shape}"
            )
        y = np.ascontiguousarray(np.transpose(x, (0, 2, 3, 1)), dtype=self.dtype)
        y = self.input_conv.forward(y, train)
        for block in self.blocks:
            y = block.forward(y, train)
        return self.output_conv.forward(y, train)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        g = self.output_conv.backward(np.asarray(grad_out, dtype=self.dtype))
        for block in reversed(self.blocks):
            g = block.backward(g)
        g = self.input_conv.backward(g)
        return np.transpose(g, (0, 3, 1, 2))

    def stage_forward_plan(self, x: np.ndarray):
        """Split the eval-mode forward into its coarse-layer chain.

        Returns ``(first_input, [(name, fn), ...])`` where folding the
        functions over the input reproduces ``forward(x)`` exactly.  The
        gradient checker uses this to re-run only the suffix a perturbed
        parameter can influence.
        """
        y0 = np.ascontiguousarray(np.transpose(x, (0, 2, 3, 1)), dtype=self.dtype)
        return y0, [(name, layer.forward) for name, layer in self.coarse_layers()]

    @property
    def relu_min_abs(self):
        vals = [m for m in (b.relu_min_abs() for b in self.blocks) if m is not None]
        return min(vals) if vals else None


def preprocess(rx: np.ndarray) -> np.ndarray:
    """Stack a complex grid batch into real planes.

    ``[batch, n_rx, F, S]`` complex becomes ``[batch, 2 n_rx, F, S]`` real
    with channel order Re(ant 0), Im(ant 0), Re(ant 1), ...  The float
    width follows the complex input, so the stacking is exactly
    invertible; casting for the model happens inside ``forward``.
    """
    rx = np.asarray(rx)
    if rx.ndim != 4 or not np.iscomplexobj(rx):
        raise ConfigError(f"expected complex [batch, n_rx, F, S], got {rx.shape} {rx.dtype}")
    m, n_rx, f, s = rx.shape
    real_dtype = np.float32 if rx.dtype == np.complex64 else np.float64
    out = np.empty((m, 2 * n_rx, f, s), dtype=real_dtype)
    out[:, 0::2] = rx.real
    out[:, 1::2] = rx.imag
    return out


def reassemble_complex(planes: np.ndarray) -> np.ndarray:
    """Inverse of ``preprocess``."""
    planes = np.asarray(planes)
    if planes.ndim != 4 or planes.shape[1] % 2:
        raise ConfigError(f"expected [batch, 2 n_rx, F, S], got {planes.shape}")
    return planes[:, 0::2] + 1j * planes[:, 1::2]


def forward_llrs(model: ReceiverModel, x: np.ndarray) -> np.ndarray:
    """Inference pass: real planes ``[batch, C, F, S]`` to LLR grid ``[batch, F, S, K]``."""
    return model.forward(x, train=False)


def expit(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bmd_loss(llrs: np.ndarray, bits: np.ndarray) -> tuple[float, float]:
    """Bit-metric decoding objective over flat coded bits.

    Returns ``(L, mean_bce_bits)`` where ``mean_bce_bits`` is the mean
    binary cross-entropy in bits between the logits and the transmitted
    bits, and ``L = 1 - mean_bce_bits`` (an achievable-rate estimate, in
    bits per coded bit).  All-zero logits give a cross-entropy of exactly
    one bit, hence ``L = 0``.
    """
    llrs = np.asarray(llrs)
    bits = np.asarray(bits)
    if llrs.shape != bits.shape:
        raise ConfigError(f"llrs {llrs.shape} and bits {bits.shape} must match")
    if not np.isfinite(llrs).all():
        raise ConfigError("non-finite logits in the rate loss")
    bce_nats = np.logaddexp(0.0, llrs) - bits * llrs
    mean_bce_bits = float(bce_nats.mean() / LN2)
    return 1.0 - mean_bce_bits, mean_bce_bits


def bmd_loss_grad(llrs: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Gradient of ``mean_bce_bits`` with respect to the logits."""
    return (expit(llrs) - bits) / (LN2 * llrs.size)


def extract_llr_bits(llr_grid: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """``[batch, F, S, K]`` to flat ``[batch, n_data * K]`` in canonical order."""
    if llr_grid.shape[1] != cfg.num_symbols or llr_grid.shape[2] != cfg.num_subcarriers:
        raise ConfigError(f"LLR grid {llr_grid.shape} does not match the grid config")
    flat = llr_grid[:, cfg.data_symbol_index, cfg.data_subcarrier_index, :]
    return flat.reshape(llr_grid.shape[0], -1)


def scatter_llr_bit_grad(grad_bits: np.ndarray, cfg: GridConfig, out_bits: int) -> np.ndarray:
    """Adjoint of ``extract_llr_bits``: zeros everywhere except data REs."""
    m = grad_bits.shape[0]
    grid = np.zeros((m, cfg.num_symbols, cfg.num_subcarriers, out_bits), dtype=grad_bits.dtype)
    grid[:, cfg.data_symbol_index, cfg.data_subcarrier_index, :] = grad_bits.reshape(
        m, cfg.num_data_res, out_bits
    )
    return grid


class BmdGridObjective:
    """Scalar training objective on an LLR grid against fixed coded bits.

    ``value`` is the mean BCE in bits over data resource elements only;
    pilot and guard positions contribute nothing, in value or gradient.
    """

    def __init__(self, bits: np.ndarray, cfg: GridConfig):
        self.bits = np.asarray(bits)
        self.cfg = cfg
        if self.bits.shape[-1] % cfg.num_data_res:
            raise ConfigError("bit count is not a whole number of bits per data RE")
        self.out_bits = self.bits.shape[-1] // cfg.num_data_res

    def value(self, llr_grid: np.ndarray) -> float:
        _, bce = bmd_loss(extract_llr_bits(llr_grid, self.cfg), self.bits)
        return bce

    def grad(self, llr_grid: np.ndarray) -> np.ndarray:
        flat = extract_llr_bits(llr_grid, self.cfg)
        return scatter_llr_bit_grad(bmd_loss_grad(flat, self.bits), self.cfg, self.out_bits)
