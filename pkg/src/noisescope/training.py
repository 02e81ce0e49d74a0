"""Compact trainable denoisers and their training loop.

Two architectures: a fully-connected net for vector data and a small
convolutional encoder-decoder (one skip connection per resolution) for square
grayscale images.  The network receives the raw noisy input plus a sinusoidal
embedding of ln(sigma) and predicts the denoised data directly; there are no
input/output preconditioning wrappers.  Training is plain SGD with momentum on
the weighted denoising objective, deterministic given the seed.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .denoiser import edm_loss_weight
from .errors import CorruptFileError, InvalidArgumentError, TrainingDivergedError
from .schedule import TrainingNoiseDensity, sample_training_sigma
from .seeding import STREAM_TRAIN, child_rng

__all__ = [
    "TrainableDenoiser", "TrainConfig", "train",
    "save_checkpoint", "load_checkpoint",
]

_CKPT_MAGIC = b"NSCK"
_CKPT_VERSION = 1


class _SigmaEmbedding(nn.Module):
    """Sinusoidal features of ln(sigma)."""

    def __init__(self, dim: int):
        super().__init__()
        if dim % 2:
            raise InvalidArgumentError("embedding dimension must be even")
        self.register_buffer("freqs", torch.exp(torch.linspace(math.log(0.25), math.log(16.0), dim // 2)))

    def forward(self, log_sigma: torch.Tensor) -> torch.Tensor:
        ang = log_sigma[:, None] * self.freqs[None, :]
        return torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)


class _VectorNet(nn.Module):
    def __init__(self, dim: int, width: int, emb_dim: int):
        super().__init__()
        self.emb = _SigmaEmbedding(emb_dim)
        self.emb_proj = nn.Linear(emb_dim, width)
        self.fc_in = nn.Linear(dim, width)
        self.fc_mid = nn.Linear(width, width)
        self.fc_mid2 = nn.Linear(width, width)
        self.fc_out = nn.Linear(width, dim)

    def forward(self, x: torch.Tensor, log_sigma: torch.Tensor) -> torch.Tensor:
        h = torch.nn.functional.silu(self.fc_in(x) + self.emb_proj(self.emb(log_sigma)))
        h = torch.nn.functional.silu(self.fc_mid(h))
        h = torch.nn.functional.silu(self.fc_mid2(h))
        return self.fc_out(h)


class _ConvBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, emb_dim: int, groups: int = 4):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.norm1 = nn.GroupNorm(min(groups, c_out), c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.norm2 = nn.GroupNorm(min(groups, c_out), c_out)
        self.emb_proj = nn.Linear(emb_dim, c_out)

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = torch.nn.functional.silu(self.norm1(self.conv1(x)))
        h = h + self.emb_proj(emb)[:, :, None, None]
        return torch.nn.functional.silu(self.norm2(self.conv2(h)))


class _ConvNet(nn.Module):
    """Three-resolution encoder-decoder with one skip connection per level."""

    def __init__(self, channels: int, emb_dim: int):
        super().__init__()
        c = channels
        self.emb = _SigmaEmbedding(emb_dim)
        self.stem = _ConvBlock(1, c, emb_dim)
        self.down1 = nn.Conv2d(c, 2 * c, 3, stride=2, padding=1)
        self.block1 = _ConvBlock(2 * c, 2 * c, emb_dim)
        self.down2 = nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1)
        self.mid = _ConvBlock(4 * c, 4 * c, emb_dim)
        self.up1 = nn.Conv2d(4 * c, 2 * c, 3, padding=1)
        self.dec1 = _ConvBlock(4 * c, 2 * c, emb_dim)
        self.up2 = nn.Conv2d(2 * c, c, 3, padding=1)
        self.dec2 = _ConvBlock(2 * c, c, emb_dim)
        self.out = nn.Conv2d(c, 1, 3, padding=1)

    def forward(self, x: torch.Tensor, log_sigma: torch.Tensor) -> torch.Tensor:
        emb = self.emb(log_sigma)
        h0 = self.stem(x, emb)
        h1 = self.block1(self.down1(h0), emb)
        h2 = self.mid(self.down2(h1), emb)
        u1 = torch.nn.functional.interpolate(h2, scale_factor=2, mode="nearest")
        u1 = self.dec1(torch.cat([self.up1(u1), h1], dim=1), emb)
        u2 = torch.nn.functional.interpolate(u1, scale_factor=2, mode="nearest")
        u2 = self.dec2(torch.cat([self.up2(u2), h0], dim=1), emb)
        return self.out(u2)


def _build_net(arch: dict) -> nn.Module:
    torch.manual_seed(int(arch["init_seed"]))
    if arch["kind"] == "vector":
        net = _VectorNet(int(arch["dim"]), int(arch["width"]), int(arch["emb_dim"]))
    elif arch["kind"] == "conv":
        side = int(arch["side"])
        if side % 4:
            raise InvalidArgumentError("image side must be divisible by 4")
        net = _ConvNet(int(arch["channels"]), int(arch["emb_dim"]))
    else:
        raise InvalidArgumentError(f"unknown architecture kind {arch['kind']!r}")
    return net.to(getattr(torch, arch["dtype"]))


class TrainableDenoiser:
    """Neural denoiser exposing the same evaluate() contract as the oracle."""

    def __init__(self, arch: dict):
        self.arch = dict(arch)
        self.net = _build_net(self.arch)
        self.net.eval()

    @classmethod
    def vector(cls, dim: int, width: int = 128, emb_dim: int = 32,
               init_seed: int = 0, dtype: str = "float64") -> "TrainableDenoiser":
        return cls({"kind": "vector", "dim": dim, "width": width, "emb_dim": emb_dim,
                    "init_seed": init_seed, "dtype": dtype})

    @classmethod
    def conv(cls, side: int, channels: int = 32, emb_dim: int = 64,
             init_seed: int = 0, dtype: str = "float32") -> "TrainableDenoiser":
        return cls({"kind": "conv", "side": side, "channels": channels, "emb_dim": emb_dim,
                    "init_seed": init_seed, "dtype": dtype})

    @property
    def data_shape(self) -> tuple[int, ...]:
        if self.arch["kind"] == "vector":
            return (int(self.arch["dim"]),)
        side = int(self.arch["side"])
        return (side, side)

    @property
    def n_params(self) -> int:
        return sum(p.numel() for p in self.net.parameters())

    def __repr__(self):
        return f"TrainableDenoiser({self.arch['kind']}, {self.n_params} parameters)"

    @property
    def _dtype(self):
        return getattr(torch, self.arch["dtype"])

    def _to_net_input(self, x: torch.Tensor) -> torch.Tensor:
        if self.arch["kind"] == "conv":
            return x[:, None, :, :]
        return x

    def _forward(self, x: torch.Tensor, log_sigma: torch.Tensor) -> torch.Tensor:
        out = self.net(self._to_net_input(x), log_sigma)
        return out[:, 0] if self.arch["kind"] == "conv" else out

    def evaluate(self, x: np.ndarray, sigma: float) -> np.ndarray:
        if not sigma > 0.0:
            raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
        x = np.asarray(x, dtype=float)
        lead = x.shape[:x.ndim - len(self.data_shape)]
        if x.shape[len(lead):] != self.data_shape:
            raise InvalidArgumentError(f"trailing dimensions must be {self.data_shape}")
        flat = x.reshape((-1,) + self.data_shape)
        with torch.no_grad():
            xt = torch.from_numpy(flat).to(self._dtype)
            ls = torch.full((xt.shape[0],), math.log(sigma), dtype=self._dtype)
            out = self._forward(xt, ls)
        return out.numpy().astype(float).reshape(x.shape)

    def loss_and_grad(self, x: np.ndarray, sigmas: np.ndarray, eps: np.ndarray,
                      sigma_data: float, weighted: bool = True) -> tuple[float, np.ndarray]:
        """Weighted denoising loss on a prepared batch and its flat gradient."""
        loss = self._loss_tensor(x, sigmas, eps, sigma_data, weighted)
        self.net.zero_grad(set_to_none=True)
        loss.backward()
        grads = [
            (p.grad if p.grad is not None else torch.zeros_like(p)).detach().reshape(-1)
            for p in self.net.parameters()
        ]
        return float(loss.detach()), torch.cat(grads).numpy().astype(float)

    def _loss_tensor(self, x, sigmas, eps, sigma_data, weighted) -> torch.Tensor:
        xt = torch.from_numpy(np.asarray(x)).to(self._dtype)
        st = torch.from_numpy(np.asarray(sigmas)).to(self._dtype)
        et = torch.from_numpy(np.asarray(eps)).to(self._dtype)
        expand = (slice(None),) + (None,) * len(self.data_shape)
        noisy = xt + st[expand] * et
        pred = self._forward(noisy, torch.log(st))
        per_item = ((pred - xt) ** 2).reshape(xt.shape[0], -1).sum(dim=1)
        if weighted:
            per_item = per_item * (st ** 2 + sigma_data ** 2) / (st * sigma_data) ** 2
        return per_item.mean()

    # Flat parameter vector access, in the fixed module iteration order used
    # everywhere (checkpoints, gradients, finite-difference probes).

    def get_params(self) -> np.ndarray:
        with torch.no_grad():
            return torch.cat([p.reshape(-1) for p in self.net.parameters()]).numpy().astype(np.float64)

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise InvalidArgumentError(f"expected {self.n_params} parameters, got {flat.size}")
        offset = 0
        with torch.no_grad():
            for p in self.net.parameters():
                n = p.numel()
                p.copy_(torch.from_numpy(flat[offset:offset + n]).to(p.dtype).reshape(p.shape))
                offset += n


@dataclass(frozen=True)
class TrainConfig:
    density: TrainingNoiseDensity
    sigma_data: float = 0.5
    batch_size: int = 32
    n_steps: int = 5000
    lr: float = 1e-3
    momentum: float = 0.9
    seed: int = 0
    weighted: bool = True
    trailing_window: int = 100
    # The weighted objective spikes as 1/sigma^2 on small-sigma draws while
    # the network is raw; clipping keeps fixed-rate SGD stable.
    grad_clip: float | None = 1.0

    def __post_init__(self):
        if self.sigma_data <= 0 or self.batch_size < 1 or self.n_steps < 0 or self.lr <= 0:
            raise InvalidArgumentError("training configuration values must be positive")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise InvalidArgumentError("grad_clip must be positive or None")


def train(denoiser: TrainableDenoiser, dataset: np.ndarray,
          config: TrainConfig) -> tuple[TrainableDenoiser, np.ndarray]:
    """SGD training loop; returns the denoiser with its best trailing-loss weights.

    All randomness (batch selection, noise levels, noise) derives from the
    config seed, so two runs with the same inputs produce identical curves.
    Raises TrainingDivergedError when the loss becomes non-finite.
    """
    data = np.asarray(dataset, dtype=float)
    if data.ndim == len(denoiser.data_shape):
        data = data[None]
    if data.shape[0] == 0 or data.shape[1:] != denoiser.data_shape:
        raise InvalidArgumentError(f"dataset items must have shape {denoiser.data_shape}")
    if config.n_steps == 0:
        return denoiser, np.empty(0)

    rng = child_rng(config.seed, STREAM_TRAIN)
    opt = torch.optim.SGD(denoiser.net.parameters(), lr=config.lr, momentum=config.momentum)
    denoiser.net.train()
    curve = np.empty(config.n_steps)
    window = min(config.trailing_window, config.n_steps)
    best_trailing = math.inf
    best_params = denoiser.get_params()

    for step in range(config.n_steps):
        idx = rng.integers(0, data.shape[0], size=config.batch_size)
        batch = data[idx]
        sigmas = sample_training_sigma(config.density, rng, size=config.batch_size)
        eps = rng.standard_normal(batch.shape)
        loss = denoiser._loss_tensor(batch, sigmas, eps, config.sigma_data, config.weighted)
        opt.zero_grad(set_to_none=True)
        loss.backward()
        if config.grad_clip is not None:
            torch.nn.utils.clip_grad_norm_(denoiser.net.parameters(), config.grad_clip)
        opt.step()
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDivergedError(f"loss became non-finite at step {step}")
        curve[step] = value
        if step + 1 >= window:
            trailing = float(curve[step + 1 - window:step + 1].mean())
            if trailing < best_trailing:
                best_trailing = trailing
                best_params = denoiser.get_params()

    denoiser.set_params(best_params)
    denoiser.net.eval()
    return denoiser, curve


def save_checkpoint(denoiser: TrainableDenoiser, path) -> None:
    """Binary checkpoint: magic, version, JSON architecture, float32 LE parameters."""
    arch_bytes = json.dumps(denoiser.arch, sort_keys=True).encode("utf-8")
    params = denoiser.get_params().astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", _CKPT_VERSION))
        fh.write(struct.pack("<I", len(arch_bytes)))
        fh.write(arch_bytes)
        fh.write(struct.pack("<Q", params.size))
        fh.write(params.tobytes())


def load_checkpoint(path) -> TrainableDenoiser:
    with open(path, "rb") as fh:
        blob = fh.read()
    buf = io.BytesIO(blob)
    if buf.read(4) != _CKPT_MAGIC:
        raise CorruptFileError(f"{path}: not a denoiser checkpoint")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != _CKPT_VERSION:
        raise CorruptFileError(f"{path}: unsupported checkpoint version {version}")
    (arch_len,) = struct.unpack("<I", buf.read(4))
    try:
        arch = json.loads(buf.read(arch_len).decode("utf-8"))
        (count,) = struct.unpack("<Q", buf.read(8))
        params = np.frombuffer(buf.read(count * 4), dtype="<f4", count=count)
    except (ValueError, struct.error) as exc:
        raise CorruptFileError(f"{path}: truncated checkpoint") from exc
    denoiser = TrainableDenoiser(arch)
    denoiser.set_params(params.astype(np.float64))
    return denoiser
