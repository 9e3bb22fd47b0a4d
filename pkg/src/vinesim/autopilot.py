"""Deterministic scripted pilots for the built-in courses.

A WaypointPilot plays the operator: each tick it looks at the latest
snapshot and emits a TeleopInput steering the tip toward the next waypoint
(bend angle from the geometric misalignment between the growth direction
and the bearing to the target). Because it is a pure function of the
snapshot, a run is fully reproducible and its recorded input log replays
bit-identically.

Course files carry their demo routes under meta["demo"]; run_route() wires
a pilot to a session until the route's goal is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from vinesim.growth import GROWTH
from vinesim.kinematics import Pose3, Quaternion
from vinesim.scenario import Course
from vinesim.session import Session, Snapshot, TeleopInput


@dataclass
class WaypointPilot:
    waypoints: list[tuple[float, float, float]]
    goal: str | None = None
    pressure_pot: float = 1023.0
    speed_pot: float = 1023.0
    switch_radius: float = 0.3
    kappa_cap: float = 2.2
    max_length: float | None = None
    _index: int = field(default=0, repr=False)
    _last_bend: tuple = field(default=(0.0, 0.0), repr=False)

    def done(self, snap: Snapshot) -> bool:
        if self.goal is not None and self.goal in snap.reached:
            return True
        if self.max_length is not None and snap.total_length >= self.max_length:
            return True
        return self._index >= len(self.waypoints)

    def input_for(self, snap: Snapshot) -> TeleopInput:
        tip = snap.tip_pose[:3]
        base = Pose3(tuple(snap.base_pose[:3]), Quaternion(*snap.base_pose[3:]))
        while self._index < len(self.waypoints):
            target = self.waypoints[self._index]
            d_w = (target[0] - tip[0], target[1] - tip[1], target[2] - tip[2])
            if math.dist(tip, target) < self.switch_radius:
                self._index += 1
                continue
            # already overshot this waypoint along the growth direction
            if base.orientation.rotate_inv(d_w)[2] < -0.05:
                self._index += 1
                continue
            break
        if self.done(snap):
            # hold the last steering command so the deployed shape stays put
            return TeleopInput(bend=self._last_bend, r_p=0.0, r_m=0.0, d=GROWTH)

        target = self.waypoints[self._index]
        d_w = (target[0] - tip[0], target[1] - tip[1], target[2] - tip[2])
        norm = math.sqrt(d_w[0] ** 2 + d_w[1] ** 2 + d_w[2] ** 2)
        bend = (0.0, 0.0)
        if norm > 1e-9:
            bx, by, bz = base.orientation.rotate_inv(d_w)
            lateral = math.sqrt(bx * bx + by * by)
            if lateral > 1e-12:
                # aim the tip tangent at the target: bend angle equals the
                # misalignment, mapped over the steerable window
                span = max(snap.active[2], 0.25)
                kappa = min(math.atan2(lateral, bz) / span, self.kappa_cap)
                phi = math.atan2(-by, bx)
                if phi >= math.pi:
                    phi = -math.pi
                bend = (kappa, phi)
        self._last_bend = bend
        return TeleopInput(
            bend=bend,
            r_p=self.pressure_pot,
            r_m=self.speed_pot,
            d=GROWTH,
        )


def pilot_from_route(route: dict) -> WaypointPilot:
    return WaypointPilot(
        waypoints=[tuple(float(c) for c in w) for w in route["waypoints"]],
        goal=route.get("goal"),
        pressure_pot=float(route.get("pressure_pot", 1023.0)),
        speed_pot=float(route.get("speed_pot", 1023.0)),
        switch_radius=float(route.get("switch_radius", 0.3)),
        kappa_cap=float(route.get("kappa_cap", 2.2)),
        max_length=route.get("max_length"),
    )


def course_routes(course: Course) -> dict[str, dict]:
    return dict(course.meta.get("demo", {}))


def run_route(
    session: Session,
    route: dict,
    max_sim_seconds: float = 300.0,
    settle_ticks: int = 25,
) -> Session:
    """Drive a session along a demo route until its goal (plus a short
    settle period with growth stopped), or the simulated-time budget."""
    pilot = pilot_from_route(route)
    max_ticks = int(max_sim_seconds * session.tick_hz)
    done_at = None
    for t in range(max_ticks):
        snap = session.snapshot()
        session.apply_input(pilot.input_for(snap))
        session.tick()
        if done_at is None and pilot.done(session.snapshot()):
            done_at = t
        if done_at is not None and t - done_at >= settle_ticks:
            break
    return session
