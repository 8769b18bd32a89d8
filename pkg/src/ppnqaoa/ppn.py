"""Parameter-to-parameter convolutional network.

Maps a depth-p angle tensor of shape (1, 2, p) (row 0: gamma/pi, row 1:
beta/(pi/2)) to a depth-(p+1) tensor. Layout::

    up1   Conv(2x2, 16, pad 1) + ReLU      1x2xp      -> 16x3x(p+1)
    up2   Conv(2x2, 64, pad 1) + ReLU      16x3x(p+1) -> 64x4x(p+2)
    D x   [Conv(3x3, 64, pad 1) + ReLU, Conv(3x3, 64, pad 1)] + skip
    down  Conv(3x2, 1, pad 0)              64x4x(p+2) -> 1x2x(p+1)

Everything is float64 numpy with hand-written backpropagation.
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .simulator import BETA_MAX, GAMMA_MAX, ParameterSet

CLAMP_MAX = 1.0 - 1e-6
FORMAT_MAGIC = b"PPNQAOA\x00"
FORMAT_VERSION = 1


class ModelFileError(ValueError):
    """Raised for unreadable, truncated, or inconsistent model files."""


@dataclass
class ConvLayer:
    kernel: np.ndarray  # (filters, channels, kh, kw)
    bias: np.ndarray  # (filters,)
    padding: int

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.kernel.shape


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected a (c, h, w) or (B, c, h, w) array, got shape {x.shape}")


def _im2col(x: np.ndarray, kh: int, kw: int, pad_h: int, pad_w: int) -> tuple[np.ndarray, int, int]:
    """Rows are (b, y, x) output positions, columns (c, i, j) kernel taps."""
    if pad_h or pad_w:
        x = np.pad(x, ((0, 0), (0, 0), (pad_h, pad_h), (pad_w, pad_w)))
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # (B, c, h', w', kh, kw)
    B, c, h_out, w_out = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * h_out * w_out, c * kh * kw)
    return cols, h_out, w_out


def _conv_forward(x: np.ndarray, layer: ConvLayer) -> tuple[np.ndarray, np.ndarray]:
    m, c, kh, kw = layer.kernel.shape
    if x.shape[1] != c:
        raise ValueError(f"layer expects {c} input channels, got {x.shape[1]}")
    g = layer.padding
    if x.shape[2] + 2 * g - kh + 1 < 1 or x.shape[3] + 2 * g - kw + 1 < 1:
        raise ValueError(f"input {x.shape[2:]} too small for kernel {(kh, kw)} with padding {g}")
    cols, h_out, w_out = _im2col(x, kh, kw, g, g)
    out = cols @ layer.kernel.reshape(m, -1).T + layer.bias
    out = out.reshape(x.shape[0], h_out, w_out, m).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(out), cols


def _conv_backward(gout: np.ndarray, cols: np.ndarray, layer: ConvLayer, in_shape):
    """Gradients w.r.t. input, kernel and bias for one convolution."""
    m, c, kh, kw = layer.kernel.shape
    g = layer.padding
    gmat = gout.transpose(0, 2, 3, 1).reshape(-1, m)
    d_kernel = (gmat.T @ cols).reshape(layer.kernel.shape)
    d_bias = gmat.sum(axis=0)
    # input gradient = full correlation of gout with the flipped, channel-swapped kernel
    H, W = in_shape[2:]
    qh, qw = kh - 1 - g, kw - 1 - g
    src = gout
    if qh < 0 or qw < 0:
        src = src[:, :, max(-qh, 0) : src.shape[2] - max(-qh, 0), max(-qw, 0) : src.shape[3] - max(-qw, 0)]
    flipped = layer.kernel[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(c, -1)
    dcols, h_in, w_in = _im2col(src, kh, kw, max(qh, 0), max(qw, 0))
    dx = (dcols @ flipped.T).reshape(in_shape[0], h_in, w_in, c).transpose(0, 3, 1, 2)
    assert (h_in, w_in) == (H, W)
    return dx, d_kernel, d_bias


def conv2d(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Stride-1 cross-correlation with zero padding on all four sides, plus bias.

    Accepts a single (c, h, w) input or a batch (B, c, h, w).
    """
    xb, single = _as_batch(x)
    out, _ = _conv_forward(xb, layer)
    return out[0] if single else out


def _new_layer(rng, m, c, kh, kw, padding, init) -> ConvLayer:
    shape = (m, c, kh, kw)
    fan_in = c * kh * kw
    if init == "zero":
        return ConvLayer(np.zeros(shape), np.zeros(m), padding)
    if init == "he":
        return ConvLayer(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=shape), np.zeros(m), padding)
    bound = 1.0 / math.sqrt(fan_in)
    kernel = rng.uniform(-bound, bound, size=shape)
    return ConvLayer(kernel, rng.uniform(-bound, bound, size=m), padding)


@dataclass
class PpnModel:
    up1: ConvLayer
    up2: ConvLayer
    blocks: list[tuple[ConvLayer, ConvLayer]]
    down: ConvLayer

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @classmethod
    def initialize(cls, n_blocks: int = 4, seed=None, *, init: str = "uniform", zero: bool = False) -> PpnModel:
        """Fresh weights.

        ``init="uniform"`` draws kernels and biases from U(-1/sqrt(fan_in), 1/sqrt(fan_in));
        ``"he"`` draws kernels from N(0, 2/fan_in) with zero biases. The
        uniform start keeps outputs small and extrapolates far better to
        depths beyond the training labels.
        ``zero=True`` gives an all-zero model.
        """
        if n_blocks < 0:
            raise ValueError("block count must be non-negative")
        if init not in ("he", "uniform"):
            raise ValueError(f"unknown init {init!r}")
        if zero:
            init = "zero"
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(
            up1=_new_layer(rng, 16, 1, 2, 2, 1, init),
            up2=_new_layer(rng, 64, 16, 2, 2, 1, init),
            blocks=[
                (_new_layer(rng, 64, 64, 3, 3, 1, init), _new_layer(rng, 64, 64, 3, 3, 1, init))
                for _ in range(n_blocks)
            ],
            down=_new_layer(rng, 1, 64, 3, 2, 0, init),
        )

    def layers(self) -> list[ConvLayer]:
        out = [self.up1, self.up2]
        for a, b in self.blocks:
            out += [a, b]
        out.append(self.down)
        return out

    def tensors(self) -> list[np.ndarray]:
        """Every trainable array in a fixed order: kernel, bias per layer."""
        out = []
        for layer in self.layers():
            out += [layer.kernel, layer.bias]
        return out

    def copy(self) -> PpnModel:
        def dup(layer):
            return ConvLayer(layer.kernel.copy(), layer.bias.copy(), layer.padding)

        return PpnModel(dup(self.up1), dup(self.up2), [(dup(a), dup(b)) for a, b in self.blocks], dup(self.down))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return ppn_forward(self, x)


def _forward_cached(model: PpnModel, x: np.ndarray):
    caches = []
    h = x
    for layer in (model.up1, model.up2):
        z, win = _conv_forward(h, layer)
        caches.append((win, h.shape, z))
        h = np.maximum(z, 0.0)
    for a, b in model.blocks:
        za, win_a = _conv_forward(h, a)
        ra = np.maximum(za, 0.0)
        zb, win_b = _conv_forward(ra, b)
        caches.append(((win_a, h.shape, za), (win_b, ra.shape)))
        h = h + zb
    out, win = _conv_forward(h, model.down)
    caches.append((win, h.shape))
    return out, caches


def _backward(model: PpnModel, caches, gout: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Backpropagate ``gout`` (dL/d output); returns dL/d input and grads in ``tensors()`` order."""
    win, shape = caches[-1]
    g, dk, db = _conv_backward(gout, win, model.down, shape)
    tail = [dk, db]
    block_grads = []
    for (a, b), ((win_a, shape_a, za), (win_b, shape_b)) in zip(
        reversed(model.blocks), reversed(caches[2:-1])
    ):
        d_ra, dkb, dbb = _conv_backward(g, win_b, b, shape_b)
        d_za = d_ra * (za > 0)
        d_h, dka, dba = _conv_backward(d_za, win_a, a, shape_a)
        g = g + d_h
        block_grads = [dka, dba, dkb, dbb] + block_grads
    head = []
    for layer, (win, shape, z) in zip((model.up2, model.up1), (caches[1], caches[0])):
        g = g * (z > 0)
        g, dk, db = _conv_backward(g, win, layer, shape)
        head = [dk, db] + head
    grads = head + block_grads + tail
    return g, grads


def ppn_forward(model: PpnModel, x: np.ndarray, *, clamp: bool = True) -> np.ndarray:
    """One prediction step, width p -> p+1.

    ``x`` is (1, 2, p) or a batch (B, 1, 2, p). With ``clamp`` (inference)
    outputs are clipped to [0, 1 - 1e-6]; training uses raw outputs.
    """
    xb, single = _as_batch(x)
    if xb.shape[1:3] != (1, 2) or xb.shape[3] < 1:
        raise ValueError(f"expected a (1, 2, p) parameter tensor, got {xb.shape[1:]}")
    out, _ = _forward_cached(model, xb)
    if clamp:
        out = np.clip(out, 0.0, CLAMP_MAX)
    return out[0] if single else out


def ppn_compose(model: PpnModel, x: np.ndarray, t: int, *, clamp: bool = True) -> np.ndarray:
    """``t`` successive forward steps on normalized tensors; width grows by ``t``."""
    if t < 1:
        raise ValueError("composition count must be at least 1")
    for _ in range(t):
        x = ppn_forward(model, x, clamp=clamp)
    return x


def normalize(params: ParameterSet) -> np.ndarray:
    """(1, 2, p) tensor: gammas / pi on row 0, betas / (pi/2) on row 1."""
    if not params.in_bounds():
        raise ValueError(f"cannot normalize out-of-box angles {params}")
    return np.array([[np.array(params.gammas) / GAMMA_MAX, np.array(params.betas) / BETA_MAX]])


def denormalize(x: np.ndarray) -> ParameterSet:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[0]
    if x.shape[0] != 2:
        raise ValueError(f"expected 2 rows, got shape {x.shape}")
    if np.any(x < 0.0) or np.any(x >= 1.0):
        raise ValueError("normalized angles must lie in [0, 1)")
    return ParameterSet(x[0] * GAMMA_MAX, x[1] * BETA_MAX)


def prediction_error(pred: np.ndarray, truth: np.ndarray) -> float:
    """Sum of squared differences between normalized tensors."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.sum((pred - truth) ** 2))


def _check_labels(labels: list[np.ndarray], s: int, T: int) -> None:
    if len(labels) < T + 1:
        raise ValueError(f"need labels for depths {s}..{s + T}, got {len(labels)} depths")
    for k, y in enumerate(labels[: T + 1]):
        if y.ndim != 4 or y.shape[1:] != (1, 2, s + k):
            raise ValueError(f"label block {k} should be (N, 1, 2, {s + k}), got {y.shape}")


def composed_loss(model: PpnModel, labels: list[np.ndarray], s: int = 1, T: int = 4) -> float:
    """Mean over instances and steps of ||F^t(x^(s)) - x^(s+t)||^2 with unclamped outputs.

    ``labels[k]`` holds the normalized optima at depth ``s + k`` for all N
    instances, shape (N, 1, 2, s + k).
    """
    return composed_loss_and_grad(model, labels, s, T, need_grad=False)[0]


def composed_loss_and_grad(model: PpnModel, labels, s: int = 1, T: int = 4, *, need_grad: bool = True):
    _check_labels(labels, s, T)
    n = labels[0].shape[0]
    scale = 1.0 / (n * T)
    x = labels[0]
    outs, cache_chain = [], []
    for t in range(1, T + 1):
        x, caches = _forward_cached(model, x)
        outs.append(x)
        cache_chain.append(caches)
    resid = [outs[t - 1] - labels[t] for t in range(1, T + 1)]
    loss = scale * sum(float(np.sum(r * r)) for r in resid)
    if not need_grad:
        return loss, None
    total = [np.zeros_like(a) for a in model.tensors()]
    g_next = np.zeros_like(outs[-1])
    for t in range(T, 0, -1):
        g_out = 2.0 * scale * resid[t - 1] + g_next
        g_next, grads = _backward(model, cache_chain[t - 1], g_out)
        for acc, gr in zip(total, grads):
            acc += gr
    return loss, total


@dataclass
class TrainConfig:
    """Two-phase Adam schedule. Adam moments carry over into phase 2."""

    epochs_phase1: int = 3000
    epochs_phase2: int = 1000
    lr_phase1: float = 1e-5
    lr_phase2: float = 1e-6
    batch_phase1: int = 11
    batch_phase2: int = 6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    s: int = 1
    T: int = 4

    def validate(self) -> None:
        if min(self.epochs_phase1, self.epochs_phase2) < 0:
            raise ValueError("epoch counts must be non-negative")
        if min(self.batch_phase1, self.batch_phase2) < 1:
            raise ValueError("batch sizes must be positive")
        if min(self.lr_phase1, self.lr_phase2) < 0:
            raise ValueError("learning rates must be non-negative")
        if self.T < 1 or self.s < 1:
            raise ValueError("need s >= 1 and T >= 1")


@dataclass
class _Adam:
    beta1: float
    beta2: float
    eps: float
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    def update(self, tensors, grads, lr):
        if not self.m:
            self.m = [np.zeros_like(a) for a in tensors]
            self.v = [np.zeros_like(a) for a in tensors]
        self.step += 1
        c1 = 1.0 - self.beta1 ** self.step
        c2 = 1.0 - self.beta2 ** self.step
        for a, g, m, v in zip(tensors, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(model: PpnModel, labels: list[np.ndarray], cfg: TrainConfig | None = None, log=None):
    """Minimize the composed loss with minibatch Adam; returns (model, per-epoch losses).

    ``model`` is updated in place and also returned. Each epoch reshuffles
    the instances with a generator seeded from ``cfg.seed``; the recorded
    loss is the instance-weighted mean of the minibatch losses.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    _check_labels(labels, cfg.s, cfg.T)
    n = labels[0].shape[0]
    if n == 0:
        raise ValueError("empty training set")
    labels = labels[: cfg.T + 1]
    rng = np.random.default_rng(cfg.seed)
    adam = _Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    tensors = model.tensors()
    history = []
    phases = [
        (cfg.epochs_phase1, cfg.lr_phase1, cfg.batch_phase1),
        (cfg.epochs_phase2, cfg.lr_phase2, cfg.batch_phase2),
    ]
    epoch = 0
    for n_epochs, lr, bs in phases:
        for _ in range(n_epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                loss, grads = composed_loss_and_grad(model, [y[idx] for y in labels], cfg.s, cfg.T)
                if not math.isfinite(loss):
                    raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch starting {start}")
                adam.update(tensors, grads, lr)
                total += loss * len(idx)
            history.append(total / n)
            if log is not None:
                log(epoch, history[-1])
            epoch += 1
    return model, history


def save_model(model: PpnModel, path) -> None:
    """Binary container: magic, version, D, tensor count, then per tensor its
    shape header and little-endian float64 data, then a CRC32 trailer."""
    body = bytearray()
    body += FORMAT_MAGIC
    tensors = model.tensors()
    body += struct.pack("<III", FORMAT_VERSION, model.n_blocks, len(tensors))
    for a in tensors:
        body += struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
        body += np.ascontiguousarray(a, dtype="<f8").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    Path(path).write_bytes(bytes(body))


def model_bytes_ok(data: bytes) -> bool:
    return len(data) >= 4 and zlib.crc32(data[:-4]) == struct.unpack("<I", data[-4:])[0]


def load_model(path) -> PpnModel:
    data = Path(path).read_bytes()
    if len(data) < len(FORMAT_MAGIC) + 16 or data[: len(FORMAT_MAGIC)] != FORMAT_MAGIC:
        raise ModelFileError(f"{path}: not a model file or truncated header")
    if not model_bytes_ok(data):
        raise ModelFileError(f"{path}: checksum mismatch (corrupt or truncated file)")
    pos = len(FORMAT_MAGIC)
    version, n_blocks, n_tensors = struct.unpack_from("<III", data, pos)
    pos += 12
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    model = PpnModel.initialize(n_blocks, zero=True)
    expected = model.tensors()
    if n_tensors != len(expected):
        raise ModelFileError(f"{path}: {n_tensors} tensors for D={n_blocks}, expected {len(expected)}")
    end = len(data) - 4
    try:
        for target in expected:
            (ndim,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            if tuple(shape) != target.shape:
                raise ModelFileError(f"{path}: tensor shape {shape}, expected {target.shape}")
            nbytes = 8 * target.size
            if pos + nbytes > end:
                raise ModelFileError(f"{path}: tensor data truncated")
            target[...] = np.frombuffer(data, dtype="<f8", count=target.size, offset=pos).reshape(shape)
            pos += nbytes
    except struct.error as exc:
        raise ModelFileError(f"{path}: truncated tensor header") from exc
    if pos != end:
        raise ModelFileError(f"{path}: {end - pos} trailing bytes")
    return model
