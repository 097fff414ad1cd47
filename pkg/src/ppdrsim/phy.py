"""BPSK mapping, coherent LLRs, repetition coding with block interleaving,
and Eb/N0 calibration.

Bit 0 maps to +1 and bit 1 to -1, so the product of two BPSK symbols is the
BPSK image of the XOR of their bits.  A positive LLR favours bit 0; an LLR of
exactly zero decodes to bit 0.
"""

from __future__ import annotations

import binascii
from dataclasses import dataclass
from typing import Union

import numpy as np

from .channel import ChannelRealization, NoiseSpec, _gains

CRC_BITS = 16


@dataclass(frozen=True)
class Uncoded:
    rate_inverse = 1
    interleave_depth = 1


@dataclass(frozen=True)
class Repetition:
    """Repeat each bit ``rate_inverse`` times, then row/column interleave."""

    rate_inverse: int = 3
    interleave_depth: int = 1

    def __post_init__(self):
        if self.rate_inverse < 1:
            raise ValueError(f"rate_inverse must be >= 1, got {self.rate_inverse}")
        if self.interleave_depth < 1:
            raise ValueError(f"interleave_depth must be >= 1, got {self.interleave_depth}")


CodingMode = Union[Uncoded, Repetition]


@dataclass(frozen=True)
class PowerConfig:
    p_a: float = 1.0
    p_b: float = 1.0
    p_c: float = 1.0

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_c"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class FrameParams:
    """Codeword of ``n_symbols`` = ``block_len`` * ``n_blocks`` BPSK symbols.

    With ``crc`` set, the last 16 of the ``info_bits`` carry a CRC-16 of the
    payload and only the payload counts toward the bit error rate.
    """

    n_symbols: int = 32
    block_len: int = 1
    n_blocks: int = 32
    coding: CodingMode = Uncoded()
    crc: bool = False

    def __post_init__(self):
        if self.block_len < 1 or self.n_blocks < 1:
            raise ValueError("block_len (Q) and n_blocks (L) must be >= 1")
        if self.n_symbols != self.block_len * self.n_blocks:
            raise ValueError(
                f"N = Q*L violated: n_symbols={self.n_symbols}, "
                f"block_len={self.block_len}, n_blocks={self.n_blocks}"
            )
        r, d = self.coding.rate_inverse, self.coding.interleave_depth
        if self.n_symbols % r:
            raise ValueError(f"n_symbols={self.n_symbols} is not a multiple of rate_inverse={r}")
        if self.n_symbols % d:
            raise ValueError(f"interleave_depth={d} does not divide n_symbols={self.n_symbols}")
        if self.payload_bits < 1:
            raise ValueError(f"frame carries no payload: info_bits={self.info_bits}, crc={self.crc}")

    @property
    def info_bits(self) -> int:
        return self.n_symbols // self.coding.rate_inverse

    @property
    def payload_bits(self) -> int:
        return self.info_bits - (CRC_BITS if self.crc else 0)

    @property
    def code_rate(self) -> float:
        """Payload bits per channel symbol."""
        return self.payload_bits / self.n_symbols


def modulate_bpsk(bits) -> np.ndarray:
    bits = np.asarray(bits)
    return 1.0 - 2.0 * bits


def demodulate_llr(r, h: ChannelRealization | np.ndarray, power: float, noise: NoiseSpec | float) -> np.ndarray:
    """LLR = 4*sqrt(P)*Re(conj(h)*r) / sigma2 under perfect receiver CSI."""
    sigma2 = noise.sigma2 if isinstance(noise, NoiseSpec) else noise
    r = np.asarray(r)
    gains = _gains(h)
    if r.shape[-1] != gains.shape[-1]:
        raise ValueError(f"received length {r.shape[-1]} does not match channel length {gains.shape[-1]}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    return 4.0 * np.sqrt(power) * np.real(np.conj(gains) * r) / sigma2


def hard_decision(llrs) -> np.ndarray:
    return (np.asarray(llrs) < 0).astype(np.int8)


def interleave(seq, depth: int) -> np.ndarray:
    """Write row-wise into ``depth`` rows, read column-wise (last axis)."""
    seq = np.asarray(seq)
    n = seq.shape[-1]
    if n % depth:
        raise ValueError(f"interleave depth {depth} does not divide length {n}")
    lead = seq.shape[:-1]
    return np.swapaxes(seq.reshape(*lead, depth, n // depth), -1, -2).reshape(*lead, n)


def deinterleave(seq, depth: int) -> np.ndarray:
    seq = np.asarray(seq)
    n = seq.shape[-1]
    if n % depth:
        raise ValueError(f"interleave depth {depth} does not divide length {n}")
    lead = seq.shape[:-1]
    return np.swapaxes(seq.reshape(*lead, n // depth, depth), -1, -2).reshape(*lead, n)


def encode(bits, mode: CodingMode) -> np.ndarray:
    bits = np.asarray(bits)
    if isinstance(mode, Uncoded):
        return bits.copy()
    coded = np.repeat(bits, mode.rate_inverse, axis=-1)
    return interleave(coded, mode.interleave_depth)


def combine_llrs(llrs, mode: CodingMode) -> np.ndarray:
    """Per-info-bit LLR: de-interleave and sum each bit's repetitions."""
    llrs = np.asarray(llrs, dtype=float)
    if isinstance(mode, Uncoded):
        return llrs
    r = mode.rate_inverse
    n = llrs.shape[-1]
    if n % r:
        raise ValueError(f"LLR length {n} is not a multiple of rate_inverse={r}")
    llrs = deinterleave(llrs, mode.interleave_depth)
    return llrs.reshape(*llrs.shape[:-1], n // r, r).sum(axis=-1)


def decode(llrs, mode: CodingMode) -> np.ndarray:
    return hard_decision(combine_llrs(llrs, mode))


def ebn0_to_sigma2(ebn0_db: float, code_rate: float, power: float = 1.0) -> NoiseSpec:
    """Noise variance giving ``ebn0_db`` per information bit on a unit-power channel."""
    if not 0 < code_rate <= 1:
        raise ValueError(f"code_rate must be in (0, 1], got {code_rate}")
    if power <= 0:
        raise ValueError(f"transmit power must be > 0, got {power}")
    return NoiseSpec(power / (code_rate * 10.0 ** (ebn0_db / 10.0)))


def crc16(bits) -> np.ndarray:
    """CRC-16/CCITT (poly 0x1021, init 0xFFFF) over each row of ``bits``.

    Rows are zero-padded on the right to whole bytes.  Returns the 16 CRC
    bits MSB first with shape ``(..., 16)``.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    lead = bits.shape[:-1]
    rows = bits.reshape(-1, bits.shape[-1])
    out = np.empty((rows.shape[0], CRC_BITS), dtype=np.int8)
    for i, row in enumerate(rows):
        value = binascii.crc_hqx(np.packbits(row).tobytes(), 0xFFFF)
        out[i] = np.unpackbits(np.array([value >> 8, value & 0xFF], dtype=np.uint8))
    return out.reshape(*lead, CRC_BITS)


def append_crc(payload) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.int8)
    return np.concatenate([payload, crc16(payload)], axis=-1)


def crc_ok(block) -> np.ndarray:
    block = np.asarray(block)
    return np.all(crc16(block[..., :-CRC_BITS]) == block[..., -CRC_BITS:], axis=-1)
