"""Monte Carlo BER sweeps over Eb/N0, mergeable statistics and closed-form
reference curves.

Trials are grouped into fixed-size chunks.  Each chunk draws from its own
Philox stream keyed by (seed, protocol, grid index, chunk index), and chunks
are accumulated strictly in index order, so the result does not depend on
how many worker processes evaluated them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import erfc

from .channel import FadingModel, RayleighBlock, Rician
from .errors import ConfigurationError
from .phy import FrameParams, PowerConfig, ebn0_to_sigma2
from .relay import LINK_NAMES, Link, LinkSet, RelayProtocol, run_trials

PROTOCOL_ORDER = (RelayProtocol.DIRECT, RelayProtocol.AF, RelayProtocol.DF)
ORACLE_KINDS = ("bpsk-awgn", "bpsk-rayleigh", "bpsk-dual-mrc-rayleigh")

# transmitting node of each link
_TX_NODE = {"ab": "a", "ac": "a", "ba": "b", "bc": "b", "ca": "c", "cb": "c"}


@dataclass(frozen=True)
class LinkProfile:
    """Fading model of one link and its Eb/N0 offset from the sweep value."""

    fading: FadingModel = RayleighBlock()
    ebn0_offset_db: float = 0.0


def _default_profiles():
    # terrestrial a<->b links are Rayleigh; every link touching the satellite relay is Rician
    sat = LinkProfile(Rician(10.0))
    return {"ab": LinkProfile(), "ba": LinkProfile(), "ac": sat, "bc": sat, "ca": sat, "cb": sat}


@dataclass(frozen=True)
class SweepConfig:
    protocols: Sequence[RelayProtocol] = PROTOCOL_ORDER
    ebn0_grid_db: Sequence[float] = tuple(range(0, 31, 2))
    frame: FrameParams = FrameParams()
    powers: PowerConfig = PowerConfig()
    links: dict = field(default_factory=_default_profiles)
    min_errors: int = 100
    max_trials: int = 10_000_000
    seed: int = 42
    chunk_trials: int = 10_000
    batch_trials: int = 4096

    def validate(self):
        if not self.protocols:
            raise ConfigurationError("protocols: at least one protocol is required")
        grid = list(self.ebn0_grid_db)
        if not grid:
            raise ConfigurationError("ebn0_db: grid is empty")
        if not all(math.isfinite(v) for v in grid):
            raise ConfigurationError("ebn0_db: grid values must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("ebn0_db: grid must be strictly increasing")
        if self.min_errors < 1:
            raise ConfigurationError("min_errors must be >= 1")
        if self.max_trials < 1:
            raise ConfigurationError("max_trials must be >= 1")
        if self.chunk_trials < 1 or self.batch_trials < 1:
            raise ConfigurationError("chunk_trials and batch_trials must be >= 1")
        missing = set(LINK_NAMES) - set(self.links)
        if missing:
            raise ConfigurationError(f"links: missing {sorted(missing)}")

    def link_set(self, ebn0_db: float) -> LinkSet:
        """Per-link noise for one grid point; each link uses its sender's power."""
        power = {"a": self.powers.p_a, "b": self.powers.p_b, "c": self.powers.p_c}
        return LinkSet(**{
            name: Link(
                prof.fading,
                ebn0_to_sigma2(ebn0_db + prof.ebn0_offset_db, self.frame.code_rate, power[_TX_NODE[name]]),
            )
            for name, prof in ((n, self.links[n]) for n in LINK_NAMES)
        })


@dataclass(frozen=True)
class BerPoint:
    protocol: RelayProtocol
    ebn0_db: float
    trials: int = 0
    bits: int = 0
    bit_errors: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def stderr(self) -> float:
        if not self.bits:
            return 0.0
        p = self.ber
        return math.sqrt(p * (1.0 - p) / self.bits)


def merge_points(p1: BerPoint, p2: BerPoint) -> BerPoint:
    if p1.protocol != p2.protocol or p1.ebn0_db != p2.ebn0_db:
        raise ValueError(
            f"cannot merge ({p1.protocol.value}, {p1.ebn0_db}) with ({p2.protocol.value}, {p2.ebn0_db})"
        )
    return BerPoint(p1.protocol, p1.ebn0_db, p1.trials + p2.trials, p1.bits + p2.bits,
                    p1.bit_errors + p2.bit_errors)


def chunk_rng(seed: int, protocol: RelayProtocol, grid_index: int, chunk_index: int) -> np.random.Generator:
    key = (PROTOCOL_ORDER.index(protocol), grid_index, chunk_index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def run_chunk(cfg: SweepConfig, protocol: RelayProtocol, grid_index: int, chunk_index: int,
              n_trials: int) -> BerPoint:
    ebn0_db = float(cfg.ebn0_grid_db[grid_index])
    links = cfg.link_set(ebn0_db)
    rng = chunk_rng(cfg.seed, protocol, grid_index, chunk_index)
    point = BerPoint(protocol, ebn0_db)
    done = 0
    while done < n_trials:
        n = min(cfg.batch_trials, n_trials - done)
        batch = run_trials(protocol, cfg.frame, cfg.powers, links, rng, n)
        point = merge_points(point, BerPoint(protocol, ebn0_db, n, 2 * n * batch.bits_per_flow, batch.bit_errors))
        done += n
    return point


def _run_chunk_args(args):
    return run_chunk(*args)


def _run_point(cfg: SweepConfig, protocol, grid_index, pool: Optional[ProcessPoolExecutor], wave: int) -> BerPoint:
    point = BerPoint(protocol, float(cfg.ebn0_grid_db[grid_index]))
    n_chunks = -(-cfg.max_trials // cfg.chunk_trials)
    chunk = 0
    while chunk < n_chunks:
        jobs = []
        for k in range(chunk, min(chunk + wave, n_chunks)):
            size = min(cfg.chunk_trials, cfg.max_trials - k * cfg.chunk_trials)
            jobs.append((cfg, protocol, grid_index, k, size))
        results = pool.map(_run_chunk_args, jobs) if pool else map(_run_chunk_args, jobs)
        for result in results:
            # chunks past the stopping point are discarded, whatever the wave size
            point = merge_points(point, result)
            chunk += 1
            if point.bit_errors >= cfg.min_errors:
                return point
    return point


def run_ber_sweep(cfg: SweepConfig, workers: int = 1) -> list[BerPoint]:
    """One BerPoint per (protocol, grid point), protocols in the order given.

    Each point runs whole chunks until it has ``min_errors`` bit errors or
    ``max_trials`` trials.  Both flows count toward the bit totals.
    """
    cfg.validate()
    workers = max(1, int(workers))
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        return [
            _run_point(cfg, protocol, i, pool, workers)
            for protocol in cfg.protocols
            for i in range(len(cfg.ebn0_grid_db))
        ]
    finally:
        if pool:
            pool.shutdown()


def q_function(x):
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2.0))


def _rayleigh_p(gamma):
    return 0.5 * (1.0 - np.sqrt(gamma / (1.0 + gamma)))


def oracle_ber(kind: str, ebn0_db: float) -> float:
    """Closed-form BPSK bit error rate at average per-branch Eb/N0."""
    if not math.isfinite(ebn0_db):
        raise ValueError(f"ebn0_db must be finite, got {ebn0_db}")
    gamma = 10.0 ** (ebn0_db / 10.0)
    if kind == "bpsk-awgn":
        return float(q_function(np.sqrt(2.0 * gamma)))
    if kind == "bpsk-rayleigh":
        return float(_rayleigh_p(gamma))
    if kind == "bpsk-dual-mrc-rayleigh":
        p = _rayleigh_p(gamma)
        return float(p * p * (1.0 + 2.0 * (1.0 - p)))
    raise ValueError(f"unknown oracle kind {kind!r}; expected one of {', '.join(ORACLE_KINDS)}")


def diversity_slope(points: Sequence[BerPoint], window_db) -> float:
    """Negated least-squares slope of log10(BER) against Eb/N0 in decades."""
    lo, hi = window_db
    sel = [p for p in points if lo <= p.ebn0_db <= hi and p.ber > 0]
    if len(sel) < 2:
        raise ValueError(f"need at least 2 points with ber > 0 in [{lo}, {hi}] dB, got {len(sel)}")
    x = np.array([p.ebn0_db / 10.0 for p in sel])
    y = np.log10([p.ber for p in sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope) + 0.0
