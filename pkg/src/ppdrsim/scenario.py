"""Time-stepped disaster-area connectivity with first-responder priority.

Two stations serve the area: a deployable MEOC (LTE cell with satellite
backhaul) and the surviving terrestrial eNodeB.  Coverage is a Euclidean disc
per station.  Each step every user is classified as NO_COMMS, POSSIBLE
(one station) or RELIABLE (both), attached to one station, and given bearers:
first responders get a dedicated bearer served before anyone else, every
attached user holds exactly one default bearer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, Union

from .errors import ConfigurationError

MEOC = "meoc"
TERRESTRIAL = "terrestrial"


class UserClass(enum.Enum):
    FIRST_RESPONDER = "first_responder"
    CIVILIAN = "civilian"


class Connectivity(enum.Enum):
    NO_COMMS = "no_comms"
    POSSIBLE = "possible"
    RELIABLE = "reliable"


class BearerKind(enum.Enum):
    DEFAULT = "default"
    DEDICATED = "dedicated"


@dataclass(frozen=True)
class User:
    id: int
    cls: UserClass
    position: tuple = (0.0, 0.0)
    demand: float = 1.0


@dataclass(frozen=True)
class Meoc:
    position: tuple = (0.0, 0.0)
    coverage_radius_m: float = 1000.0
    capacity_units: float = 100.0
    speed_m_per_step: float = 50.0


@dataclass(frozen=True)
class Terrestrial:
    position: tuple = (0.0, 0.0)
    coverage_radius_m: float = 2000.0
    capacity_units: float = 100.0
    alive: bool = True


@dataclass(frozen=True)
class TerrestrialDestroyed:
    step: int


@dataclass(frozen=True)
class TerrestrialDegraded:
    step: int
    factor: float


@dataclass(frozen=True)
class MeocMove:
    step: int
    waypoint: tuple


@dataclass(frozen=True)
class TrafficSurge:
    step: int
    multiplier: float


Event = Union[TerrestrialDestroyed, TerrestrialDegraded, MeocMove, TrafficSurge]


@dataclass(frozen=True)
class ScenarioConfig:
    duration_steps: int = 10
    users: Sequence[User] = ()
    meoc: Meoc = Meoc()
    terrestrial: Terrestrial = Terrestrial()
    events: Sequence[Event] = ()

    def validate(self):
        if self.duration_steps < 0:
            raise ConfigurationError("duration_steps must be >= 0")
        ids = [u.id for u in self.users]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("users: ids must be unique")
        for i, u in enumerate(self.users):
            if not isinstance(u.cls, UserClass):
                raise ConfigurationError(f"users[{i}].class: invalid user class {u.cls!r}")
            if not (u.demand >= 0 and math.isfinite(u.demand)):
                raise ConfigurationError(f"users[{i}].demand must be finite and >= 0")
        for name, st in ((MEOC, self.meoc), (TERRESTRIAL, self.terrestrial)):
            if not st.coverage_radius_m > 0:
                raise ConfigurationError(f"{name}.coverage_radius_m must be > 0")
            if not st.capacity_units >= 0:
                raise ConfigurationError(f"{name}.capacity_units must be >= 0")
        if self.meoc.speed_m_per_step < 0:
            raise ConfigurationError("meoc.speed_m_per_step must be >= 0")
        for i, ev in enumerate(self.events):
            if not isinstance(ev, (TerrestrialDestroyed, TerrestrialDegraded, MeocMove, TrafficSurge)):
                raise ConfigurationError(f"events[{i}]: unknown event {ev!r}")
            if not 0 <= ev.step < self.duration_steps:
                raise ConfigurationError(f"events[{i}].step: {ev.step} outside [0, {self.duration_steps})")
            if isinstance(ev, TerrestrialDegraded) and not ev.factor >= 0:
                raise ConfigurationError(f"events[{i}].factor must be >= 0")
            if isinstance(ev, TrafficSurge) and not ev.multiplier >= 0:
                raise ConfigurationError(f"events[{i}].multiplier must be >= 0")
            if isinstance(ev, MeocMove) and len(ev.waypoint) != 2:
                raise ConfigurationError(f"events[{i}].waypoint must be an (x, y) pair")


@dataclass(frozen=True)
class Bearer:
    owner: int
    kind: BearerKind
    rate: float = 0.0
    station: Optional[str] = None


@dataclass(frozen=True)
class UserRecord:
    """One user's situation during one step."""

    step: int
    user: int
    cls: UserClass
    state: Connectivity
    station: Optional[str]
    bearer: Optional[BearerKind]
    rate: float


def _zero_counters():
    return {(c, s): 0 for c in UserClass for s in Connectivity}


@dataclass(frozen=True)
class ScenarioState:
    step: int = 0
    meoc_position: tuple = (0.0, 0.0)
    meoc_waypoint: tuple = (0.0, 0.0)
    terrestrial_alive: bool = True
    terrestrial_capacity: float = 0.0
    demand_multiplier: float = 1.0
    connectivity: dict = field(default_factory=dict)
    bearers: tuple = ()
    records: tuple = ()
    counters: dict = field(default_factory=_zero_counters)
    utilization_sum: dict = field(default_factory=lambda: {MEOC: 0.0, TERRESTRIAL: 0.0})
    utilization_peak: dict = field(default_factory=lambda: {MEOC: 0.0, TERRESTRIAL: 0.0})
    shortfall_steps: int = 0


def initial_state(cfg: ScenarioConfig) -> ScenarioState:
    return ScenarioState(
        meoc_position=tuple(map(float, cfg.meoc.position)),
        meoc_waypoint=tuple(map(float, cfg.meoc.position)),
        terrestrial_alive=cfg.terrestrial.alive,
        terrestrial_capacity=float(cfg.terrestrial.capacity_units) if cfg.terrestrial.alive else 0.0,
    )


def classify_connectivity(in_meoc_coverage: bool, in_terrestrial_coverage: bool) -> Connectivity:
    n = int(bool(in_meoc_coverage)) + int(bool(in_terrestrial_coverage))
    return (Connectivity.NO_COMMS, Connectivity.POSSIBLE, Connectivity.RELIABLE)[n]


def _max_min_fair(capacity: float, demands: Sequence[tuple]) -> dict:
    """Water-filling: equal shares, each capped at its demand.

    ``demands`` holds (user id, demand).  Serving the smallest demands first
    lets their unused share flow to the others; ties go by ascending id.
    """
    grants = {}
    remaining = max(0.0, float(capacity))
    order = sorted(demands, key=lambda t: (t[1], t[0]))
    for i, (uid, demand) in enumerate(order):
        share = remaining / (len(order) - i)
        g = min(float(demand), share)
        grants[uid] = g
        remaining = max(0.0, remaining - g)
    return grants


def allocate_bearers(capacity_units: float, attached_users: Sequence, station: Optional[str] = None) -> list:
    """Bearers for the users attached to one station.

    ``attached_users`` are objects with ``id``, ``cls`` and ``demand``.  First
    responders are served from the full capacity; civilians share only what
    is left once every first-responder demand is met.
    """
    frs = [(u.id, u.demand) for u in attached_users if u.cls is UserClass.FIRST_RESPONDER]
    civs = [(u.id, u.demand) for u in attached_users if u.cls is UserClass.CIVILIAN]
    fr_grants = _max_min_fair(capacity_units, frs)
    fr_total = sum(fr_grants.values())
    unmet = any(fr_grants[uid] < d for uid, d in frs)
    leftover = 0.0 if unmet else max(0.0, capacity_units - fr_total)
    civ_grants = _max_min_fair(leftover, civs)

    bearers = []
    for u in sorted(attached_users, key=lambda u: u.id):
        if u.cls is UserClass.FIRST_RESPONDER:
            bearers.append(Bearer(u.id, BearerKind.DEDICATED, fr_grants[u.id], station))
            bearers.append(Bearer(u.id, BearerKind.DEFAULT, 0.0, station))
        else:
            bearers.append(Bearer(u.id, BearerKind.DEFAULT, civ_grants[u.id], station))
    return bearers


def _in_disc(point, centre, radius) -> bool:
    return math.hypot(point[0] - centre[0], point[1] - centre[1]) <= radius


def _move_toward(pos, target, speed):
    dx, dy = target[0] - pos[0], target[1] - pos[1]
    dist = math.hypot(dx, dy)
    if dist <= speed:
        return (float(target[0]), float(target[1]))
    return (pos[0] + dx * speed / dist, pos[1] + dy * speed / dist)


def _serving_station(user: User, in_meoc: bool, in_terr: bool) -> Optional[str]:
    if in_meoc and in_terr:
        return MEOC if user.cls is UserClass.FIRST_RESPONDER else TERRESTRIAL
    if in_meoc:
        return MEOC
    if in_terr:
        return TERRESTRIAL
    return None


def step_scenario(state: ScenarioState, cfg: ScenarioConfig) -> ScenarioState:
    """Advance one step: events, MEOC motion, coverage, attachment, bearers."""
    t = state.step
    if t >= cfg.duration_steps:
        raise ValueError(f"scenario already finished at step {t}")

    alive, terr_cap = state.terrestrial_alive, state.terrestrial_capacity
    waypoint, multiplier = state.meoc_waypoint, state.demand_multiplier
    for ev in cfg.events:
        if ev.step != t:
            continue
        if isinstance(ev, TerrestrialDestroyed):
            alive, terr_cap = False, 0.0
        elif isinstance(ev, TerrestrialDegraded):
            terr_cap *= ev.factor
        elif isinstance(ev, MeocMove):
            waypoint = (float(ev.waypoint[0]), float(ev.waypoint[1]))
        elif isinstance(ev, TrafficSurge):
            multiplier *= ev.multiplier
        else:
            raise ConfigurationError(f"malformed event {ev!r}")
    meoc_pos = _move_toward(state.meoc_position, waypoint, cfg.meoc.speed_m_per_step)

    users = sorted(cfg.users, key=lambda u: u.id)
    connectivity, serving = {}, {}
    for u in users:
        in_meoc = _in_disc(u.position, meoc_pos, cfg.meoc.coverage_radius_m)
        in_terr = alive and _in_disc(u.position, cfg.terrestrial.position, cfg.terrestrial.coverage_radius_m)
        connectivity[u.id] = classify_connectivity(in_meoc, in_terr)
        serving[u.id] = _serving_station(u, in_meoc, in_terr)

    demand = {u.id: u.demand * multiplier for u in users}
    capacity = {MEOC: float(cfg.meoc.capacity_units), TERRESTRIAL: terr_cap}
    bearers = []
    util_sum, util_peak = dict(state.utilization_sum), dict(state.utilization_peak)
    shortfall = False
    for station in (MEOC, TERRESTRIAL):
        attached = [replace(u, demand=demand[u.id]) for u in users if serving[u.id] == station]
        granted = allocate_bearers(capacity[station], attached, station)
        bearers.extend(granted)
        used = sum(b.rate for b in granted)
        util = used / capacity[station] if capacity[station] > 0 else 0.0
        util_sum[station] += util
        util_peak[station] = max(util_peak[station], util)
        shortfall |= any(b.kind is BearerKind.DEDICATED and b.rate < demand[b.owner] for b in granted)

    counters = dict(state.counters)
    records = []
    for u in users:
        counters[(u.cls, connectivity[u.id])] += 1
        kind = None
        rate = 0.0
        if serving[u.id] is not None:
            kind = BearerKind.DEDICATED if u.cls is UserClass.FIRST_RESPONDER else BearerKind.DEFAULT
            rate = next(b.rate for b in bearers if b.owner == u.id and b.kind is kind)
        records.append(UserRecord(t, u.id, u.cls, connectivity[u.id], serving[u.id], kind, rate))

    return ScenarioState(
        step=t + 1,
        meoc_position=meoc_pos,
        meoc_waypoint=waypoint,
        terrestrial_alive=alive,
        terrestrial_capacity=terr_cap,
        demand_multiplier=multiplier,
        connectivity=connectivity,
        bearers=tuple(bearers),
        records=tuple(records),
        counters=counters,
        utilization_sum=util_sum,
        utilization_peak=util_peak,
        shortfall_steps=state.shortfall_steps + int(shortfall),
    )


def run_scenario(cfg: ScenarioConfig) -> Iterator[ScenarioState]:
    """Yield the state after each step."""
    cfg.validate()
    state = initial_state(cfg)
    for _ in range(cfg.duration_steps):
        state = step_scenario(state, cfg)
        yield state


def scenario_metrics(final: ScenarioState) -> dict:
    """Summary of a finished run.

    Connectivity fractions are shares of user-steps, per class and overall.
    The goal flag holds when no user ever spent a step without any station.
    """
    fractions = {}
    for label, classes in (
        (UserClass.FIRST_RESPONDER.value, [UserClass.FIRST_RESPONDER]),
        (UserClass.CIVILIAN.value, [UserClass.CIVILIAN]),
        ("all", list(UserClass)),
    ):
        total = sum(final.counters[(c, s)] for c in classes for s in Connectivity)
        fractions[label] = {
            s.value: (sum(final.counters[(c, s)] for c in classes) / total if total else 0.0)
            for s in Connectivity
        }
    steps = final.step
    no_comms = sum(final.counters[(c, Connectivity.NO_COMMS)] for c in UserClass)
    return {
        "steps": steps,
        "connectivity_fraction": fractions,
        "utilization": {
            st: {
                "peak": final.utilization_peak[st],
                "mean": final.utilization_sum[st] / steps if steps else 0.0,
            }
            for st in (MEOC, TERRESTRIAL)
        },
        "dedicated_shortfall_steps": final.shortfall_steps,
        "goal_no_comms_avoided": no_comms == 0,
    }
