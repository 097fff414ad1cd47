"""Fading channel realizations and the baseband link r = h*sqrt(P)*x + v.

Every array function accepts arbitrary leading batch axes; the last axis is
the symbol index.  All fading models are normalized to E[|h|^2] = 1 so that
energy accounting stays in :mod:`ppdrsim.phy`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class AwgnOnly:
    """Unit gain on every symbol."""

    name = "awgn"


@dataclass(frozen=True)
class RayleighBlock:
    """Circularly symmetric complex Gaussian gain, constant per block."""

    name = "rayleigh"


@dataclass(frozen=True)
class Rician:
    """Line-of-sight plus scatter; ``k_factor`` is linear, not dB."""

    k_factor: float = 10.0

    name = "rician"

    def __post_init__(self):
        # +inf is allowed and means a pure line-of-sight link
        if np.isnan(self.k_factor) or self.k_factor < 0:
            raise ValueError(f"Rician k_factor must be >= 0, got {self.k_factor}")


FadingModel = Union[AwgnOnly, RayleighBlock, Rician]


@dataclass(frozen=True)
class NoiseSpec:
    """Complex noise variance per sample (sigma2 / 2 per real component)."""

    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be finite and > 0, got {self.sigma2}")


@dataclass(frozen=True)
class ChannelRealization:
    """Block gains of shape (..., L) expanded to per-symbol gains (..., L*Q)."""

    block_gains: np.ndarray
    block_len: int
    per_symbol: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.block_gains.shape[-1]

    @property
    def n_symbols(self) -> int:
        return self.per_symbol.shape[-1]


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples."""
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def draw_block_gains(rng: np.random.Generator, model: FadingModel, n_blocks: int, batch=()) -> np.ndarray:
    """Draw ``n_blocks`` unit-power gains for each element of ``batch``.

    Returns a complex array of shape ``(*batch, n_blocks)``.
    """
    if n_blocks < 1:
        raise ValueError(f"number of blocks must be >= 1, got {n_blocks}")
    batch = (batch,) if isinstance(batch, (int, np.integer)) else tuple(batch)
    shape = (*batch, n_blocks)
    if isinstance(model, AwgnOnly):
        return np.ones(shape, dtype=complex)
    if isinstance(model, RayleighBlock):
        return complex_normal(rng, shape)
    if isinstance(model, Rician):
        k = model.k_factor
        if np.isinf(k):
            return np.ones(shape, dtype=complex)
        los = np.sqrt(k / (k + 1.0))
        return los + np.sqrt(1.0 / (k + 1.0)) * complex_normal(rng, shape)
    raise TypeError(f"unknown fading model {model!r}")


def expand_realization(block_gains, block_len: int) -> ChannelRealization:
    """Hold each block gain for ``block_len`` consecutive symbols."""
    if block_len < 1:
        raise ValueError(f"block length Q must be >= 1, got {block_len}")
    gains = np.asarray(block_gains, dtype=complex)
    if gains.ndim == 0 or gains.shape[-1] == 0:
        raise ValueError("block_gains must be non-empty")
    per_symbol = np.repeat(gains, block_len, axis=-1)
    return ChannelRealization(gains, block_len, per_symbol)


def draw_realization(rng, model: FadingModel, n_blocks: int, block_len: int, batch=()) -> ChannelRealization:
    return expand_realization(draw_block_gains(rng, model, n_blocks, batch), block_len)


def add_awgn(rng: np.random.Generator, signal, noise: NoiseSpec | float) -> np.ndarray:
    sigma2 = noise.sigma2 if isinstance(noise, NoiseSpec) else noise
    signal = np.asarray(signal)
    return signal + complex_normal(rng, signal.shape, sigma2)


def _gains(h) -> np.ndarray:
    return h.per_symbol if isinstance(h, ChannelRealization) else np.asarray(h)


def apply_link(x, h, power: float, noise: NoiseSpec | float, rng: np.random.Generator) -> np.ndarray:
    """Received sequence h[n]*sqrt(P)*x[n] + v[n], v ~ CN(0, sigma2)."""
    x = np.asarray(x)
    gains = _gains(h)
    if x.shape[-1] != gains.shape[-1]:
        raise ValueError(f"symbol length {x.shape[-1]} does not match channel length {gains.shape[-1]}")
    if power <= 0:
        raise ValueError(f"transmit power must be > 0, got {power}")
    return add_awgn(rng, gains * np.sqrt(power) * x, noise)
