"""Three-slot two-way relaying between end nodes ``a`` and ``b`` via relay ``c``.

Slot 1: ``a`` transmits, heard by ``b`` and ``c``.  Slot 2: ``b`` transmits,
heard by ``a`` and ``c``.  Slot 3: ``c`` broadcasts to ``a`` and ``b``, either
an amplified sum of what it heard (AF) or the product of the two regenerated
BPSK packets (DF with network coding).  Under DF the relay only forwards the
packets it decoded correctly, and stays silent when it decoded neither.

Trials are vectorized: symbol arrays have shape ``(trials, N)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import phy
from .channel import (
    AwgnOnly,
    FadingModel,
    NoiseSpec,
    _gains,
    apply_link,
    draw_realization,
)
from .phy import FrameParams, PowerConfig

LINK_NAMES = ("ab", "ac", "ba", "bc", "ca", "cb")


class RelayProtocol(enum.Enum):
    DIRECT = "direct"
    AF = "af"
    DF = "df"


class RelayAction(enum.IntEnum):
    BROADCAST_NC = 0
    BROADCAST_A = 1
    BROADCAST_B = 2
    SILENT = 3

    @property
    def origin(self) -> Optional[str]:
        return {RelayAction.BROADCAST_A: "a", RelayAction.BROADCAST_B: "b"}.get(self)


@dataclass(frozen=True)
class Link:
    fading: FadingModel = AwgnOnly()
    noise: NoiseSpec = NoiseSpec(1.0)


@dataclass(frozen=True)
class LinkSet:
    """The six directed links; reciprocity is not assumed."""

    ab: Link = Link()
    ac: Link = Link()
    ba: Link = Link()
    bc: Link = Link()
    ca: Link = Link()
    cb: Link = Link()

    def __getitem__(self, name: str) -> Link:
        if name not in LINK_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @classmethod
    def uniform(cls, fading: FadingModel, noise: NoiseSpec) -> "LinkSet":
        link = Link(fading, noise)
        return cls(**{name: link for name in LINK_NAMES})


@dataclass(frozen=True)
class TrialOutcome:
    errors_ab: int
    errors_ba: int
    bits_per_flow: int
    relay_action: Optional[RelayAction]


@dataclass
class TrialBatch:
    """Per-trial error counts; ``actions`` holds RelayAction codes under DF."""

    errors_ab: np.ndarray
    errors_ba: np.ndarray
    bits_per_flow: int
    actions: Optional[np.ndarray] = None

    @property
    def n_trials(self) -> int:
        return len(self.errors_ab)

    @property
    def bit_errors(self) -> int:
        return int(self.errors_ab.sum() + self.errors_ba.sum())

    def outcome(self, i: int) -> TrialOutcome:
        action = None if self.actions is None else RelayAction(int(self.actions[i]))
        return TrialOutcome(int(self.errors_ab[i]), int(self.errors_ba[i]), self.bits_per_flow, action)


@dataclass(frozen=True)
class RelayPathCsi:
    """What a destination knows about the path through the relay.

    ``h_relay`` is the relay-to-destination gain.  The AF fields describe the
    first hop: gains from the partner and from the destination itself to the
    relay, their powers, and the total noise variance amplified by the relay.
    """

    h_relay: np.ndarray
    p_c: float
    sigma2_dest: float
    beta: float = 0.0
    h_partner_relay: Optional[np.ndarray] = None
    h_own_relay: Optional[np.ndarray] = None
    p_partner: float = 1.0
    p_own: float = 1.0
    sigma2_relay: float = 0.0


def draw_realizations(rng, links: LinkSet, frame: FrameParams, n_trials: int, names=LINK_NAMES) -> dict:
    return {
        name: draw_realization(rng, links[name].fading, frame.n_blocks, frame.block_len, (n_trials,))
        for name in names
    }


def run_slots_1_2(x_a, x_b, links: LinkSet, powers: PowerConfig, realizations: dict, rng):
    """Slots 1 and 2; returns (r_ab, r_ac, r_ba, r_bc)."""
    x_a, x_b = np.asarray(x_a), np.asarray(x_b)
    if x_a.shape != x_b.shape:
        raise ValueError(f"packet shapes differ: {x_a.shape} vs {x_b.shape}")
    r_ab = apply_link(x_a, realizations["ab"], powers.p_a, links.ab.noise, rng)
    r_ac = apply_link(x_a, realizations["ac"], powers.p_a, links.ac.noise, rng)
    r_ba = apply_link(x_b, realizations["ba"], powers.p_b, links.ba.noise, rng)
    r_bc = apply_link(x_b, realizations["bc"], powers.p_b, links.bc.noise, rng)
    return r_ab, r_ac, r_ba, r_bc


def network_code(x_a_hat, x_b_hat) -> np.ndarray:
    x_a_hat, x_b_hat = np.asarray(x_a_hat), np.asarray(x_b_hat)
    if x_a_hat.shape != x_b_hat.shape:
        raise ValueError(f"packet shapes differ: {x_a_hat.shape} vs {x_b_hat.shape}")
    return x_a_hat * x_b_hat


def relay_df_decide(decoded_a_ok: bool, decoded_b_ok: bool) -> RelayAction:
    if decoded_a_ok and decoded_b_ok:
        return RelayAction.BROADCAST_NC
    if decoded_a_ok:
        return RelayAction.BROADCAST_A
    if decoded_b_ok:
        return RelayAction.BROADCAST_B
    return RelayAction.SILENT


def df_actions(a_ok, b_ok) -> np.ndarray:
    """Vectorized :func:`relay_df_decide` returning action codes."""
    a_ok, b_ok = np.asarray(a_ok, dtype=bool), np.asarray(b_ok, dtype=bool)
    return np.select(
        [a_ok & b_ok, a_ok, b_ok],
        [RelayAction.BROADCAST_NC, RelayAction.BROADCAST_A, RelayAction.BROADCAST_B],
        RelayAction.SILENT,
    ).astype(np.int8)


def af_gain(powers: PowerConfig, links: LinkSet) -> float:
    """Average-power normalization so the relay transmits ``p_c`` on average."""
    received = powers.p_a + powers.p_b + links.ac.noise.sigma2 + links.bc.noise.sigma2
    return float(np.sqrt(powers.p_c / received))


def relay_af(r_ac, r_bc, powers: PowerConfig, links: LinkSet) -> np.ndarray:
    r_ac, r_bc = np.asarray(r_ac), np.asarray(r_bc)
    if r_ac.shape != r_bc.shape:
        raise ValueError(f"observation shapes differ: {r_ac.shape} vs {r_bc.shape}")
    return af_gain(powers, links) * (r_ac + r_bc)


def broadcast_slot3(x_c, links: LinkSet, p_c: float, realizations: dict, rng, actions=None):
    """Slot 3; returns (r_ca, r_cb).

    Trials whose action is SILENT receive nothing, i.e. all zeros.  Noise is
    drawn for them anyway so the random stream does not depend on actions.
    """
    x_c = np.asarray(x_c)
    r_ca = apply_link(x_c, realizations["ca"], p_c, links.ca.noise, rng)
    r_cb = apply_link(x_c, realizations["cb"], p_c, links.cb.noise, rng)
    if actions is not None:
        silent = np.asarray(actions) == RelayAction.SILENT
        r_ca = np.where(silent[..., None], 0.0, r_ca)
        r_cb = np.where(silent[..., None], 0.0, r_cb)
    return r_ca, r_cb


def combine_and_decide(
    direct_llrs,
    relay_obs,
    own_symbols,
    relay_action,
    protocol: RelayProtocol,
    csi: Optional[RelayPathCsi],
    mode: phy.CodingMode,
    partner: str = "a",
) -> np.ndarray:
    """Estimate the partner's info bits from the direct and relayed branches.

    ``relay_action`` is a RelayAction or an array of action codes (DF only).
    """
    direct_llrs = np.asarray(direct_llrs, dtype=float)
    if protocol is RelayProtocol.DIRECT:
        return phy.decode(direct_llrs, mode)
    if relay_obs is None or csi is None:
        raise ValueError(f"{protocol.value} combining needs the relay observation and its CSI")
    relay_obs = np.asarray(relay_obs)
    if relay_obs.shape != direct_llrs.shape:
        raise ValueError(f"relay observation shape {relay_obs.shape} != direct shape {direct_llrs.shape}")
    h_relay = _gains(csi.h_relay)

    if protocol is RelayProtocol.AF:
        # strip our own contribution, then MRC the residual against the direct branch
        path = h_relay * csi.beta
        own = path * _gains(csi.h_own_relay) * np.sqrt(csi.p_own) * np.asarray(own_symbols)
        g = path * _gains(csi.h_partner_relay) * np.sqrt(csi.p_partner)
        var = np.abs(path) ** 2 * csi.sigma2_relay + csi.sigma2_dest
        relay_llrs = 4.0 * np.real(np.conj(g) * (relay_obs - own)) / var
        return phy.decode(direct_llrs + relay_llrs, mode)

    if relay_action is None:
        raise ValueError("DF combining needs the relay action")
    actions = np.asarray(relay_action)
    partner_single = RelayAction.BROADCAST_A if partner == "a" else RelayAction.BROADCAST_B
    relay_llrs = phy.demodulate_llr(relay_obs, h_relay, csi.p_c, csi.sigma2_dest)
    nc = (actions == RelayAction.BROADCAST_NC)[..., None]
    single = (actions == partner_single)[..., None]
    # x_c * x_own = x_partner: NC LLRs flip sign wherever our own symbol is -1
    relay_llrs = np.where(nc, relay_llrs * np.asarray(own_symbols), np.where(single, relay_llrs, 0.0))
    return phy.decode(direct_llrs + relay_llrs, mode)


def _draw_info(rng, frame: FrameParams, n_trials: int):
    payload = rng.integers(0, 2, size=(n_trials, frame.payload_bits), dtype=np.int8)
    info = phy.append_crc(payload) if frame.crc else payload
    return payload, info


def _relay_decodes(r, h, power, noise, info, frame: FrameParams):
    bits = phy.decode(phy.demodulate_llr(r, h, power, noise), frame.coding)
    ok = phy.crc_ok(bits) if frame.crc else np.all(bits == info, axis=-1)
    return bits, ok


def run_trials(
    protocol: RelayProtocol,
    frame: FrameParams,
    powers: PowerConfig,
    links: LinkSet,
    rng: np.random.Generator,
    n_trials: int = 1,
) -> TrialBatch:
    """Run ``n_trials`` independent three-slot exchanges.

    Fresh info bits and fresh channel realizations are drawn for every trial.
    Relay decode correctness is checked against the true bits unless the
    frame carries a CRC, in which case the CRC decides.
    """
    mode = frame.coding
    payload_a, info_a = _draw_info(rng, frame, n_trials)
    payload_b, info_b = _draw_info(rng, frame, n_trials)
    x_a = phy.modulate_bpsk(phy.encode(info_a, mode))
    x_b = phy.modulate_bpsk(phy.encode(info_b, mode))

    names = ("ab", "ba") if protocol is RelayProtocol.DIRECT else LINK_NAMES
    h = draw_realizations(rng, links, frame, n_trials, names)
    if protocol is RelayProtocol.DIRECT:
        r_ab = apply_link(x_a, h["ab"], powers.p_a, links.ab.noise, rng)
        r_ba = apply_link(x_b, h["ba"], powers.p_b, links.ba.noise, rng)
    else:
        r_ab, r_ac, r_ba, r_bc = run_slots_1_2(x_a, x_b, links, powers, h, rng)

    llr_ab = phy.demodulate_llr(r_ab, h["ab"], powers.p_a, links.ab.noise)
    llr_ba = phy.demodulate_llr(r_ba, h["ba"], powers.p_b, links.ba.noise)
    actions = None

    if protocol is RelayProtocol.DIRECT:
        est_a = combine_and_decide(llr_ab, None, x_b, None, protocol, None, mode)
        est_b = combine_and_decide(llr_ba, None, x_a, None, protocol, None, mode)
    elif protocol is RelayProtocol.AF:
        t = relay_af(r_ac, r_bc, powers, links)
        # t already carries the relay power, hence unit power on the last hop
        r_ca, r_cb = broadcast_slot3(t, links, 1.0, h, rng)
        beta = af_gain(powers, links)
        sigma2_relay = links.ac.noise.sigma2 + links.bc.noise.sigma2
        csi_b = RelayPathCsi(h["cb"], powers.p_c, links.cb.noise.sigma2, beta, h["ac"], h["bc"],
                             powers.p_a, powers.p_b, sigma2_relay)
        csi_a = RelayPathCsi(h["ca"], powers.p_c, links.ca.noise.sigma2, beta, h["bc"], h["ac"],
                             powers.p_b, powers.p_a, sigma2_relay)
        est_a = combine_and_decide(llr_ab, r_cb, x_b, None, protocol, csi_b, mode, partner="a")
        est_b = combine_and_decide(llr_ba, r_ca, x_a, None, protocol, csi_a, mode, partner="b")
    else:
        bits_ca, ok_a = _relay_decodes(r_ac, h["ac"], powers.p_a, links.ac.noise, info_a, frame)
        bits_cb, ok_b = _relay_decodes(r_bc, h["bc"], powers.p_b, links.bc.noise, info_b, frame)
        actions = df_actions(ok_a, ok_b)
        xa_hat = phy.modulate_bpsk(phy.encode(bits_ca, mode))
        xb_hat = phy.modulate_bpsk(phy.encode(bits_cb, mode))
        col = actions[:, None]
        x_c = np.select(
            [col == RelayAction.BROADCAST_NC, col == RelayAction.BROADCAST_A, col == RelayAction.BROADCAST_B],
            [network_code(xa_hat, xb_hat), xa_hat, xb_hat],
            0.0,
        )
        r_ca, r_cb = broadcast_slot3(x_c, links, powers.p_c, h, rng, actions)
        csi_b = RelayPathCsi(h["cb"], powers.p_c, links.cb.noise.sigma2)
        csi_a = RelayPathCsi(h["ca"], powers.p_c, links.ca.noise.sigma2)
        est_a = combine_and_decide(llr_ab, r_cb, x_b, actions, protocol, csi_b, mode, partner="a")
        est_b = combine_and_decide(llr_ba, r_ca, x_a, actions, protocol, csi_a, mode, partner="b")

    p = frame.payload_bits
    errors_ab = np.count_nonzero(est_a[:, :p] != payload_a, axis=-1)
    errors_ba = np.count_nonzero(est_b[:, :p] != payload_b, axis=-1)
    return TrialBatch(errors_ab, errors_ba, p, actions)


def run_trial(protocol, frame, powers, links, rng) -> TrialOutcome:
    return run_trials(protocol, frame, powers, links, rng, 1).outcome(0)
