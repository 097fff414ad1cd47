"""Exit criteria.  Each test carries a ``criterion`` marker; the terminal
summary prints one PASS/FAIL line per criterion."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppdrsim import phy
from ppdrsim.channel import AwgnOnly, NoiseSpec, RayleighBlock, Rician, draw_block_gains
from ppdrsim.cli import main
from ppdrsim.phy import FrameParams, PowerConfig
from ppdrsim.relay import LINK_NAMES, LinkSet, RelayAction, RelayProtocol, network_code, relay_df_decide, run_trials
from ppdrsim.scenario import (
    BearerKind,
    Connectivity,
    Meoc,
    MeocMove,
    ScenarioConfig,
    Terrestrial,
    TerrestrialDegraded,
    TerrestrialDestroyed,
    TrafficSurge,
    User,
    UserClass,
    run_scenario,
    scenario_metrics,
)
from ppdrsim.sweep import BerPoint, LinkProfile, SweepConfig, diversity_slope, merge_points, run_ber_sweep

DIRECT, AF, DF = RelayProtocol.DIRECT, RelayProtocol.AF, RelayProtocol.DF

# Q(sqrt(2 g)) and 0.5 * (1 - sqrt(g / (1 + g))), frozen from mpmath quadrature
AWGN_REFERENCE = {0: 0.0786496035251, 2: 0.0375061283589, 4: 0.0125008180407, 6: 0.00238829078093,
                  8: 0.000190907774076}
RAYLEIGH_REFERENCE = {0: 0.146446609407, 10: 0.0232687053772, 20: 0.00248140489501}


def _profiles(model):
    return {name: LinkProfile(model) for name in LINK_NAMES}


@pytest.mark.criterion(1, "AWGN calibration: DirectOnly BER within 3 stderr of Q(sqrt(2 Eb/N0))")
def test_awgn_calibration():
    cfg = SweepConfig(protocols=(DIRECT,), ebn0_grid_db=tuple(AWGN_REFERENCE), frame=FrameParams(32, 1, 32),
                      links=_profiles(AwgnOnly()), min_errors=200, seed=42)
    for p in run_ber_sweep(cfg):
        expected = AWGN_REFERENCE[p.ebn0_db]
        assert p.bit_errors >= 200
        assert abs(p.ber - expected) <= 3 * p.stderr, (p.ebn0_db, p.ber, expected, p.stderr)


@pytest.mark.criterion(2, "Rayleigh calibration: per-symbol Rayleigh DirectOnly BER within 3 stderr")
def test_rayleigh_calibration():
    cfg = SweepConfig(protocols=(DIRECT,), ebn0_grid_db=tuple(RAYLEIGH_REFERENCE), frame=FrameParams(32, 1, 32),
                      links=_profiles(RayleighBlock()), min_errors=1000, seed=42)
    for p in run_ber_sweep(cfg):
        expected = RAYLEIGH_REFERENCE[p.ebn0_db]
        assert abs(p.ber - expected) <= 3 * p.stderr, (p.ebn0_db, p.ber, expected, p.stderr)


@pytest.mark.criterion(3, "Diversity: DF/AF slope >= 1.5, Direct <= 1.3, DF < Direct/2 at 16-28 dB")
def test_diversity_property():
    grid = (16.0, 20.0, 24.0, 28.0)
    cfg = SweepConfig(protocols=(DIRECT, AF, DF), ebn0_grid_db=grid, frame=FrameParams(32, 1, 32),
                      links=_profiles(RayleighBlock()), min_errors=100, seed=42)
    points = run_ber_sweep(cfg)
    by = {proto: [p for p in points if p.protocol is proto] for proto in (DIRECT, AF, DF)}
    slopes = {proto: diversity_slope(pts, (16, 28)) for proto, pts in by.items()}
    print("diversity slopes:", {k.value: round(v, 3) for k, v in slopes.items()})
    assert slopes[DF] >= 1.5
    assert slopes[AF] >= 1.5
    assert slopes[DIRECT] <= 1.3
    for d, r in zip(by[DF], by[DIRECT]):
        assert d.ber * 2 < r.ber, (d.ebn0_db, d.ber, r.ber)


@pytest.mark.criterion(4, "Relay decision table matches the four-case DF rule")
def test_decision_table():
    table = {
        (True, True): RelayAction.BROADCAST_NC,
        (True, False): RelayAction.BROADCAST_A,
        (False, True): RelayAction.BROADCAST_B,
        (False, False): RelayAction.SILENT,
    }
    for (a_ok, b_ok), action in table.items():
        assert relay_df_decide(a_ok, b_ok) is action
    assert relay_df_decide(True, False).origin == "a"
    assert relay_df_decide(False, True).origin == "b"


@pytest.mark.criterion(5, "Network-coding identity over all BPSK pairs")
def test_network_code_exhaustive():
    for xa, xb in itertools.product((-1.0, 1.0), repeat=2):
        xc = network_code(np.array([xa]), np.array([xb]))[0]
        assert xc in (-1.0, 1.0)
        assert xc * xa == xb


@pytest.mark.criterion(6, "Noiseless end-to-end: zero errors for every protocol over 100 trials")
@pytest.mark.parametrize("protocol", list(RelayProtocol))
def test_noiseless_end_to_end(protocol):
    links = LinkSet.uniform(AwgnOnly(), NoiseSpec(1e-12))
    batch = run_trials(protocol, FrameParams(32, 1, 32), PowerConfig(), links, np.random.default_rng(0), 100)
    assert batch.n_trials == 100
    assert batch.errors_ab.sum() == 0 and batch.errors_ba.sum() == 0


BER_CONFIG = """
command: ber
ber:
  ebn0_db: [0, 6, 12]
  min_errors: 500
  max_trials: 20000
  chunk_trials: 1000
"""

SCENARIO_CONFIG = """
command: scenario
scenario:
  duration_steps: 12
  users:
    - {id: 1, class: first_responder, position: [0, 0], demand: 5}
    - {id: 2, class: civilian, position: [300, 0], demand: 3}
    - {id: 3, class: civilian, position: [900, 0], demand: 3}
  meoc: {position: [0, 0], coverage_radius_m: 500, capacity_units: 6, speed_m_per_step: 100}
  terrestrial: {position: [800, 0], coverage_radius_m: 400, capacity_units: 4}
  events:
    - {step: 3, type: traffic_surge, multiplier: 2}
    - {step: 4, type: meoc_move, waypoint: [600, 0]}
    - {step: 8, type: terrestrial_destroyed}
"""


@pytest.mark.criterion(7, "Determinism: byte-identical ber/scenario output across reruns and --workers")
@pytest.mark.parametrize("command, text", [("ber", BER_CONFIG), ("scenario", SCENARIO_CONFIG)])
def test_determinism(tmp_path, command, text):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(text)
    outputs = []
    for i, workers in enumerate(("1", "1", "3")):
        out = tmp_path / f"out{i}"
        assert main([command, "--config", str(cfg), "--out", str(out), "--workers", workers, "--seed", "7"]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


_counts = st.tuples(st.integers(0, 10**7), st.integers(0, 10**12), st.integers(0, 10**12))


@pytest.mark.criterion(8, "Merge monoid: associative, commutative, zero identity (1000 cases)")
@settings(max_examples=1000, deadline=None)
@given(_counts, _counts, _counts)
def test_merge_monoid(a, b, c):
    def pt(t):
        return BerPoint(DF, 10.0, t[0], t[1] + t[2], t[2])

    a, b, c = pt(a), pt(b), pt(c)
    key = lambda p: (p.trials, p.bits, p.bit_errors)  # noqa: E731
    assert key(merge_points(a, merge_points(b, c))) == key(merge_points(merge_points(a, b), c))
    assert key(merge_points(a, b)) == key(merge_points(b, a))
    assert merge_points(a, BerPoint(DF, 10.0)) == a == merge_points(BerPoint(DF, 10.0), a)


def _random_scenario(rng):
    steps = int(rng.integers(1, 12))
    users = tuple(
        User(i, UserClass.FIRST_RESPONDER if rng.random() < 0.4 else UserClass.CIVILIAN,
             tuple(rng.uniform(-1000, 1000, 2)), float(rng.choice([0.0, rng.uniform(0, 10)], p=[0.1, 0.9])))
        for i in rng.permutation(int(rng.integers(0, 12)))
    )
    meoc = Meoc(tuple(rng.uniform(-500, 500, 2)), rng.uniform(50, 1200), rng.uniform(0, 30), rng.uniform(0, 300))
    terr = Terrestrial(tuple(rng.uniform(-500, 500, 2)), rng.uniform(50, 1200), rng.uniform(0, 30),
                       bool(rng.random() < 0.8))
    events = []
    for _ in range(int(rng.integers(0, 4))):
        t = int(rng.integers(0, steps))
        kind = int(rng.integers(0, 4))
        if kind == 0:
            events.append(TerrestrialDestroyed(t))
        elif kind == 1:
            events.append(TerrestrialDegraded(t, rng.uniform(0, 1)))
        elif kind == 2:
            events.append(MeocMove(t, tuple(rng.uniform(-1000, 1000, 2))))
        else:
            events.append(TrafficSurge(t, rng.uniform(0.5, 3)))
    return ScenarioConfig(steps, users, meoc, terr, tuple(events))


@pytest.mark.criterion(9, "Scenario priority safety over 500 randomized configs")
def test_priority_safety():
    rng = np.random.default_rng(9)
    for case in range(500):
        cfg = _random_scenario(rng)
        classes = {u.id: u.cls for u in cfg.users}
        for state in run_scenario(cfg):
            capacity = {"meoc": cfg.meoc.capacity_units, "terrestrial": state.terrestrial_capacity}
            demand = {u.id: u.demand * state.demand_multiplier for u in cfg.users}
            attached = {r.user: r.station for r in state.records if r.station is not None}
            for station, cap in capacity.items():
                granted = [b for b in state.bearers if b.station == station]
                assert sum(b.rate for b in granted) <= cap * (1 + 1e-12) + 1e-12, case
                fr_unmet = any(b.kind is BearerKind.DEDICATED and b.rate < demand[b.owner] for b in granted)
                civ_grant = any(b.rate > 0 for b in granted if classes[b.owner] is UserClass.CIVILIAN)
                assert not (fr_unmet and civ_grant), case
            for uid in classes:
                defaults = [b for b in state.bearers if b.owner == uid and b.kind is BearerKind.DEFAULT]
                dedicated = [b for b in state.bearers if b.owner == uid and b.kind is BearerKind.DEDICATED]
                assert len(defaults) == (1 if uid in attached else 0), case
                if classes[uid] is UserClass.CIVILIAN:
                    assert not dedicated, case
                elif any(b.rate > 0 for b in dedicated + defaults):
                    assert dedicated and dedicated[0].rate > 0, case


def _mission(extra_user=None):
    users = [User(i, UserClass.FIRST_RESPONDER if i < 2 else UserClass.CIVILIAN, (50.0 * i, 0.0), 1.0)
             for i in range(4)]
    if extra_user:
        users.append(extra_user)
    return ScenarioConfig(10, tuple(users), Meoc((0, 0), 500, 10, 0), Terrestrial((0, 0), 500, 10),
                          (TerrestrialDestroyed(5),))


@pytest.mark.criterion(10, "Mission goal flag: true when MEOC covers everyone, false with one stranded user")
def test_mission_goal():
    *_, final = run_scenario(_mission())
    m = scenario_metrics(final)
    assert m["goal_no_comms_avoided"] is True
    assert m["connectivity_fraction"]["all"]["no_comms"] == 0.0

    *_, final = run_scenario(_mission(User(99, UserClass.CIVILIAN, (5000.0, 5000.0), 1.0)))
    m = scenario_metrics(final)
    assert m["goal_no_comms_avoided"] is False
    assert m["connectivity_fraction"]["all"]["no_comms"] == 1 / 5
    assert m["connectivity_fraction"]["civilian"]["no_comms"] == 1 / 3
    assert final.connectivity[99] is Connectivity.NO_COMMS


@pytest.mark.criterion(11, "Fading normalization: E|h|^2 within 1%; Rician K=0 matches Rayleigh within 2%")
def test_fading_normalization():
    rng = np.random.default_rng(11)
    n = 100_000
    for model in (RayleighBlock(), Rician(0.0), Rician(1.0), Rician(10.0)):
        assert abs(np.mean(np.abs(draw_block_gains(rng, model, n)) ** 2) - 1.0) < 0.01, model
    ray = np.abs(draw_block_gains(rng, RayleighBlock(), n))
    ric = np.abs(draw_block_gains(rng, Rician(0.0), n))
    for k in (1, 2):
        assert abs(np.mean(ric**k) / np.mean(ray**k) - 1.0) < 0.02
