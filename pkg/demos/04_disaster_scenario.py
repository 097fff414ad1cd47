"""
Connectivity through a disaster
===============================

A terrestrial eNodeB serves the town; a MEOC is deployed near the incident.
Traffic surges, the eNodeB degrades and is then destroyed, and the MEOC
drives toward a group of stranded civilians.  First responders keep their
dedicated bearers throughout; civilians get what is left.
"""

from ppdrsim.scenario import (
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

FR, CIV = UserClass.FIRST_RESPONDER, UserClass.CIVILIAN
users = (
    User(1, FR, (0, 0), 4.0),
    User(2, FR, (150, 50), 4.0),
    User(3, CIV, (400, 0), 2.0),
    User(4, CIV, (900, 100), 2.0),
    User(5, CIV, (1400, 0), 2.0),
)
cfg = ScenarioConfig(
    duration_steps=15,
    users=users,
    meoc=Meoc((0, 0), coverage_radius_m=600, capacity_units=12, speed_m_per_step=100),
    terrestrial=Terrestrial((1000, 0), coverage_radius_m=700, capacity_units=10),
    events=(
        TrafficSurge(2, 1.5),
        TerrestrialDegraded(4, 0.5),
        MeocMove(6, (700, 0)),
        TerrestrialDestroyed(9),
    ),
)

for state in run_scenario(cfg):
    cells = "  ".join(f"{r.user}:{r.state.value[:4]}/{(r.station or '-')[:4]}/{r.rate:4.1f}" for r in state.records)
    print(f"step {state.step - 1:2d}  meoc@({state.meoc_position[0]:5.0f},{state.meoc_position[1]:4.0f})  {cells}")

final = state
for key, value in scenario_metrics(final).items():
    print(f"{key}: {value}")
