"""YAML run configuration for the command-line tool.

The file is validated in full (unknown keys rejected, field paths reported)
before any simulation starts, then converted into the library's own config
objects.  Defaults:

==========================  =====================================
key                         default
==========================  =====================================
seed                        42
workers                     number of CPUs
format                      csv (ber), jsonl (scenario)
ber.protocols               [direct, af, df]
ber.ebn0_db                 {start: 0, stop: 30, step: 2}
ber.frame                   {n_symbols: 32, block_len: 1, n_blocks: 32}
ber.coding                  {kind: uncoded, crc: false}
ber.powers                  {p_a: 1, p_b: 1, p_c: 1}
ber.links.ab / .ba          {fading: rayleigh}
ber.links.ac/.bc/.ca/.cb    {fading: rician, k_factor_db: 10}
ber.min_errors              100
ber.max_trials              10000000
ber.chunk_trials            10000
scenario.duration_steps     10
==========================  =====================================
"""

from __future__ import annotations

import os
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import scenario as sc
from .channel import AwgnOnly, RayleighBlock, Rician
from .errors import ConfigurationError
from .phy import FrameParams, PowerConfig, Repetition, Uncoded
from .relay import LINK_NAMES, RelayProtocol
from .sweep import LinkProfile, SweepConfig

PROTOCOL_ALIASES = {
    "direct": RelayProtocol.DIRECT,
    "directonly": RelayProtocol.DIRECT,
    "af": RelayProtocol.AF,
    "amplifyforward": RelayProtocol.AF,
    "df": RelayProtocol.DF,
    "decodeforwardnc": RelayProtocol.DF,
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LinkSpec(_Strict):
    fading: Literal["awgn", "rayleigh", "rician"] = "rayleigh"
    k_factor_db: float = 10.0
    ebn0_offset_db: float = 0.0

    def profile(self) -> LinkProfile:
        if self.fading == "awgn":
            model = AwgnOnly()
        elif self.fading == "rayleigh":
            model = RayleighBlock()
        else:
            model = Rician(10.0 ** (self.k_factor_db / 10.0))
        return LinkProfile(model, self.ebn0_offset_db)


class GridSpec(_Strict):
    start: float = 0.0
    stop: float = 30.0
    step: float = 2.0

    @model_validator(mode="after")
    def _check(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.stop < self.start:
            raise ValueError("stop must be >= start")
        return self

    def values(self) -> List[float]:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 10) for i in range(n)]


class FrameSpec(_Strict):
    n_symbols: int = 32
    block_len: int = 1
    n_blocks: int = 32

    @model_validator(mode="after")
    def _check(self):
        if self.block_len < 1 or self.n_blocks < 1:
            raise ValueError("block_len and n_blocks must be >= 1")
        if self.n_symbols != self.block_len * self.n_blocks:
            raise ValueError(
                f"N = Q*L violated: n_symbols={self.n_symbols} but "
                f"block_len*n_blocks={self.block_len}*{self.n_blocks}={self.block_len * self.n_blocks}"
            )
        return self


class CodingSpec(_Strict):
    kind: Literal["uncoded", "repetition"] = "uncoded"
    rate_inverse: int = Field(3, ge=1)
    interleave_depth: int = Field(1, ge=1)
    crc: bool = False


class PowerSpec(_Strict):
    p_a: float = Field(1.0, gt=0)
    p_b: float = Field(1.0, gt=0)
    p_c: float = Field(1.0, gt=0)


def _default_links():
    return {
        "ab": LinkSpec(), "ba": LinkSpec(),
        **{name: LinkSpec(fading="rician") for name in ("ac", "bc", "ca", "cb")},
    }


class BerSpec(_Strict):
    protocols: List[str] = ["direct", "af", "df"]
    ebn0_db: Union[List[float], GridSpec] = GridSpec()
    frame: FrameSpec = FrameSpec()
    coding: CodingSpec = CodingSpec()
    powers: PowerSpec = PowerSpec()
    links: Dict[str, LinkSpec] = Field(default_factory=_default_links)
    min_errors: int = Field(100, ge=1)
    max_trials: int = Field(10_000_000, ge=1)
    chunk_trials: int = Field(10_000, ge=1)

    @field_validator("protocols")
    @classmethod
    def _protocols(cls, value):
        if not value:
            raise ValueError("at least one protocol is required")
        for name in value:
            if name.lower() not in PROTOCOL_ALIASES:
                raise ValueError(f"unknown protocol {name!r}; valid protocols: direct, af, df")
        return value

    @field_validator("links")
    @classmethod
    def _links(cls, value):
        unknown = sorted(set(value) - set(LINK_NAMES))
        if unknown:
            raise ValueError(f"unknown link(s) {unknown}; valid links: {', '.join(LINK_NAMES)}")
        return {**_default_links(), **value}

    @field_validator("ebn0_db")
    @classmethod
    def _grid(cls, value):
        values = value.values() if isinstance(value, GridSpec) else list(value)
        if not values:
            raise ValueError("grid is empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("grid must be strictly increasing")
        return value

    @model_validator(mode="after")
    def _frame_coding(self):
        # raises on N not divisible by R or d, or no payload left after the CRC
        self.frame_params()
        return self

    def grid(self) -> List[float]:
        return self.ebn0_db.values() if isinstance(self.ebn0_db, GridSpec) else list(self.ebn0_db)

    def frame_params(self) -> FrameParams:
        coding = (Repetition(self.coding.rate_inverse, self.coding.interleave_depth)
                  if self.coding.kind == "repetition" else Uncoded())
        return FrameParams(self.frame.n_symbols, self.frame.block_len, self.frame.n_blocks,
                           coding, self.coding.crc)


class UserSpec(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    id: int
    cls: Literal["first_responder", "civilian"] = Field(alias="class")
    position: Tuple[float, float] = (0.0, 0.0)
    demand: float = Field(1.0, ge=0)


class StationSpec(_Strict):
    position: Tuple[float, float] = (0.0, 0.0)
    coverage_radius_m: float = Field(1000.0, gt=0)
    capacity_units: float = Field(100.0, ge=0)


class MeocSpec(StationSpec):
    speed_m_per_step: float = Field(50.0, ge=0)


class TerrestrialSpec(StationSpec):
    coverage_radius_m: float = Field(2000.0, gt=0)
    alive: bool = True


class EventSpec(_Strict):
    step: int = Field(ge=0)
    type: Literal["terrestrial_destroyed", "terrestrial_degraded", "meoc_move", "traffic_surge"]
    factor: Optional[float] = Field(None, ge=0)
    waypoint: Optional[Tuple[float, float]] = None
    multiplier: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _check(self):
        needed = {"terrestrial_degraded": "factor", "meoc_move": "waypoint", "traffic_surge": "multiplier"}
        key = needed.get(self.type)
        if key and getattr(self, key) is None:
            raise ValueError(f"{self.type} event requires {key!r}")
        return self

    def event(self):
        if self.type == "terrestrial_destroyed":
            return sc.TerrestrialDestroyed(self.step)
        if self.type == "terrestrial_degraded":
            return sc.TerrestrialDegraded(self.step, self.factor)
        if self.type == "meoc_move":
            return sc.MeocMove(self.step, self.waypoint)
        return sc.TrafficSurge(self.step, self.multiplier)


class ScenarioSpec(_Strict):
    duration_steps: int = Field(10, ge=0)
    users: List[UserSpec] = []
    meoc: MeocSpec = MeocSpec()
    terrestrial: TerrestrialSpec = TerrestrialSpec()
    events: List[EventSpec] = []

    @model_validator(mode="after")
    def _check(self):
        ids = [u.id for u in self.users]
        if len(set(ids)) != len(ids):
            raise ValueError("user ids must be unique")
        for i, ev in enumerate(self.events):
            if ev.step >= self.duration_steps:
                raise ValueError(f"events[{i}].step={ev.step} is not before duration_steps={self.duration_steps}")
        return self


class RunConfig(_Strict):
    command: Literal["ber", "scenario"]
    seed: int = Field(42, ge=0, lt=2**64)
    workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    format: Optional[Literal["csv", "jsonl"]] = None
    out: Optional[str] = None
    ber: BerSpec = BerSpec()
    scenario: ScenarioSpec = ScenarioSpec()

    @model_validator(mode="after")
    def _format(self):
        if self.format is None:
            self.format = "csv" if self.command == "ber" else "jsonl"
        if self.command == "scenario" and self.format != "jsonl":
            raise ValueError("scenario output supports format 'jsonl' only")
        return self

    def sweep_config(self) -> SweepConfig:
        ber = self.ber
        seen = []
        for name in ber.protocols:
            p = PROTOCOL_ALIASES[name.lower()]
            if p not in seen:
                seen.append(p)
        return SweepConfig(
            protocols=tuple(seen),
            ebn0_grid_db=tuple(ber.grid()),
            frame=ber.frame_params(),
            powers=PowerConfig(ber.powers.p_a, ber.powers.p_b, ber.powers.p_c),
            links={name: spec.profile() for name, spec in ber.links.items()},
            min_errors=ber.min_errors,
            max_trials=ber.max_trials,
            seed=self.seed,
            chunk_trials=ber.chunk_trials,
        )

    def scenario_config(self) -> sc.ScenarioConfig:
        s = self.scenario
        return sc.ScenarioConfig(
            duration_steps=s.duration_steps,
            users=tuple(sc.User(u.id, sc.UserClass(u.cls), u.position, u.demand) for u in s.users),
            meoc=sc.Meoc(s.meoc.position, s.meoc.coverage_radius_m, s.meoc.capacity_units, s.meoc.speed_m_per_step),
            terrestrial=sc.Terrestrial(s.terrestrial.position, s.terrestrial.coverage_radius_m,
                                       s.terrestrial.capacity_units, s.terrestrial.alive),
            events=tuple(e.event() for e in s.events),
        )


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"].removeprefix("Value error, ")
        lines.append(f"{path}: {msg}")
    return "\n".join(lines)


def parse_config(text: Union[str, bytes, None], overrides: Optional[dict] = None) -> RunConfig:
    """Load YAML ``text``, apply non-None ``overrides`` on top, validate."""
    try:
        data = yaml.safe_load(text) if text else {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("<root>: config must be a mapping")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "command" and data.get("command") not in (None, value):
            raise ConfigurationError(f"command: file says {data['command']!r} but {value!r} was requested")
        data[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from None
