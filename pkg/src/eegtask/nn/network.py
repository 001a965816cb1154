"""The raw-epoch classification network: construction, forward/backward, checkpoints.

Architecture (input one epoch, 20 electrodes x 512 samples):

    shift/scale -> conv 1x30 (10 filters) -> conv 20x40 (10 filters, collapses
    the electrode axis) -> square -> avg pool 1x150 stride 1x30 -> log ->
    dropout 20% -> conv 1x10 (3 filters) -> softmax

Intermediate shapes are asserted at construction time and the standard
build must count exactly 81,423 trainable parameters.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import IoFailure, ShapeMismatch
from .layers import AvgPool, Conv, Dropout, LogClamp, ShiftScale, Square, softmax

STANDARD_SHAPE_CHAIN = (
    (10, 20, 483),  # conv 1x30
    (10, 1, 444),   # conv 20x40
    (10, 1, 444),   # square
    (10, 1, 10),    # avg pool 1x150 / 1x30
    (10, 1, 10),    # log
    (3, 1, 1),      # conv 1x10
)
STANDARD_PARAM_COUNT = 81_423


@dataclass
class ArchSpec:
    n_channels: int = 20
    n_samples: int = 512
    conv1_filters: int = 10
    conv1_kw: int = 30
    conv2_filters: int = 10
    conv2_kw: int = 40
    pool_kw: int = 150
    pool_sw: int = 30
    conv3_kw: int = 10
    n_classes: int = 3
    dropout_p: float = 0.2
    log_eps: float = 1e-6


def reduced_arch() -> ArchSpec:
    """Small net with the same layer types, for finite-difference checks."""
    return ArchSpec(
        n_channels=4, n_samples=64,
        conv1_filters=3, conv1_kw=8,
        conv2_filters=3, conv2_kw=8,
        pool_kw=16, pool_sw=8,
        conv3_kw=5,
    )


class Network:
    def __init__(self, arch: ArchSpec, rng: np.random.Generator, dtype=np.float32):
        self.arch = arch
        self.dtype = np.dtype(dtype)
        self.shift_scale = ShiftScale(arch.n_channels, dtype=dtype)
        self.blocks = [
            Conv(1, arch.conv1_filters, 1, arch.conv1_kw, rng, dtype=dtype),
            Conv(arch.conv1_filters, arch.conv2_filters, arch.n_channels, arch.conv2_kw,
                 rng, dtype=dtype),
            Square(),
            AvgPool(arch.pool_kw, arch.pool_sw),
            LogClamp(arch.log_eps),
            Dropout(arch.dropout_p),
            Conv(arch.conv2_filters, arch.n_classes, 1, arch.conv3_kw, rng, dtype=dtype),
        ]
        self.shape_chain = self._infer_shapes()
        if self.shape_chain[-1] != (arch.n_classes, 1, 1):
            raise ShapeMismatch(
                f"final layer produces {self.shape_chain[-1]}, expected ({arch.n_classes}, 1, 1)"
            )

    def _infer_shapes(self):
        shape = (1, self.arch.n_channels, self.arch.n_samples)
        chain = []
        for layer in self.blocks:
            shape = layer.out_shape(shape)
            if not isinstance(layer, Dropout):  # shape-transparent, not part of the chain
                chain.append(shape)
        return tuple(chain)

    def params(self):
        out = list(self.shift_scale.params())
        for layer in self.blocks:
            out.extend(layer.params())
        return out

    def grads(self):
        out = list(self.shift_scale.grads())
        for layer in self.blocks:
            out.extend(layer.grads())
        return out

    def param_count(self):
        return sum(p.size for p in self.params())

    def set_params(self, values):
        for p, v in zip(self.params(), values, strict=True):
            p[:] = v

    def copy_params(self):
        return [p.copy() for p in self.params()]

    def forward(self, x, train: bool = False, rng=None):
        """Class probabilities [batch, n_classes] for epochs [batch, channels, samples]."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] != (self.arch.n_channels, self.arch.n_samples):
            raise ShapeMismatch(
                f"expected input [*, {self.arch.n_channels}, {self.arch.n_samples}], got {x.shape}"
            )
        h = self.shift_scale.forward(x, train, rng)
        h = h[:, None, :, :]
        for layer in self.blocks:
            h = layer.forward(h, train, rng)
        self._logits = h.reshape(len(x), self.arch.n_classes)
        self._probs = softmax(self._logits.astype(np.float64)).astype(self.dtype)
        return self._probs

    def backward(self, labels):
        """Cross-entropy gradient for the last forward pass; fills every grad buffer."""
        probs = self._probs
        batch = probs.shape[0]
        dz = probs.copy()
        dz[np.arange(batch), labels] -= 1.0
        dz /= np.asarray(batch, dtype=self.dtype)
        d = dz.reshape(batch, self.arch.n_classes, 1, 1)
        for layer in reversed(self.blocks):
            d = layer.backward(d)
        return self.shift_scale.backward(d[:, 0])


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    p = probs[np.arange(len(labels)), labels].astype(np.float64)
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def build_difficulty_net(rng: np.random.Generator, dtype=np.float32) -> Network:
    """The standard 20x512 network; asserts the published shape chain and size."""
    net = Network(ArchSpec(), rng, dtype=dtype)
    if net.shape_chain != STANDARD_SHAPE_CHAIN:
        raise ShapeMismatch(f"shape chain {net.shape_chain} != {STANDARD_SHAPE_CHAIN}")
    if net.param_count() != STANDARD_PARAM_COUNT:
        raise ShapeMismatch(f"parameter count {net.param_count()} != {STANDARD_PARAM_COUNT}")
    return net


def calibrate_shift_scale(net: Network, batch: np.ndarray, eps: float = 1e-6) -> None:
    """Initialize W_sc so the untrained net approximately z-scores its input.

    W_sh stays the identity; W_sc becomes diagonal with entries
    1 / (std_c^2 + eps) where std_c is the per-channel standard deviation
    over the calibration batch.
    """
    std = np.asarray(batch, dtype=np.float64).std(axis=(0, 2))
    net.shift_scale.w_scale[:] = np.diag(1.0 / (std ** 2 + eps)).astype(net.dtype)


def save_checkpoint(net: Network, path) -> None:
    """Structured JSON header line + little-endian f32 parameter blob."""
    params = net.params()
    header = {
        "arch": asdict(net.arch),
        "param_shapes": [list(p.shape) for p in params],
        "dtype": "f32",
        "byte_order": "little",
    }
    try:
        with open(path, "wb") as fh:
            fh.write(json.dumps(header).encode("utf-8") + b"\n")
            for p in params:
                fh.write(p.astype("<f4", copy=False).tobytes())
    except OSError as exc:
        raise IoFailure(f"failed writing checkpoint to {path}: {exc}") from exc


def load_checkpoint(path, dtype=np.float32) -> Network:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"failed reading checkpoint {path}: {exc}") from exc
    newline = raw.index(b"\n")
    header = json.loads(raw[:newline].decode("utf-8"))
    blob = raw[newline + 1:]
    net = Network(ArchSpec(**header["arch"]), np.random.default_rng(0), dtype=dtype)
    offset = 0
    values = []
    for shape in header["param_shapes"]:
        size = int(np.prod(shape)) * 4
        arr = np.frombuffer(blob[offset:offset + size], dtype="<f4").reshape(shape)
        values.append(arr.astype(dtype))
        offset += size
    if offset != len(blob):
        raise IoFailure(f"checkpoint {path} has {len(blob)} payload bytes, expected {offset}")
    net.set_params(values)
    return net
