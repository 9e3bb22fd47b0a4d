"""Fixed-tick teleoperation session: inputs in, snapshots and records out.

One Session owns all mutable simulation state. Inputs are latched
(last-writer-wins) and exactly one is consumed per tick; a malformed input
is rejected and the previous one persists. The per-tick pipeline follows
the signal flow of the physical system: joystick orientation -> bend ->
commanded tip -> pouch pressures (saturated), pots -> body pressure and
motor speed -> PI -> backdrive guard -> growth rate -> body step.

Every tick extends a chained SHA-256 over the consumed input, the
controller state, the body head state, newly frozen backbone poses, and
emitted events. Identical courses, rates, and input logs therefore yield
identical hash chains, which is what record/replay verifies.

E-stop latches: once engaged (input flag, or client disconnect via
notify_disconnect) all four pressures command zero until an explicit
clear. Deployed material stays where it is; only pressure is released.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace

from vinesim import growth as gc
from vinesim.body import (
    BodyState,
    Event,
    SATURATED,
    camera_pose,
    step as body_step,
)
from vinesim.errors import InvalidInputError, ReplayIntegrityError, SessionError
from vinesim.kinematics import ArcParams, Pose3, Quaternion, arc_to_quat, arc_to_tip, quat_to_arc
from vinesim.scenario import Course, RecordEntry, RunRecord, course_hash
from vinesim.steering import ZERO_PRESSURE, saturate, solve_pressures

DEFAULT_TICK_HZ = 50.0
SNAPSHOT_DECIMATION_M = 0.05


@dataclass(frozen=True, slots=True)
class TeleopInput:
    """One operator input frame. Exactly one of q/bend may be given; both
    omitted means a straight joystick."""

    q: tuple[float, float, float, float] | None = None
    bend: tuple[float, float] | None = None     # (kappa 1/m, phi rad)
    r_p: float = 0.0                            # pressure pot, counts
    r_m: float = 0.0                            # speed pot, counts
    d: int = gc.GROWTH                          # -1 growth, +1 retraction
    estop: bool = False
    estop_clear: bool = False

    def to_dict(self) -> dict:
        return {
            "q": list(self.q) if self.q is not None else None,
            "bend": list(self.bend) if self.bend is not None else None,
            "r_p": self.r_p,
            "r_m": self.r_m,
            "d": self.d,
            "estop": self.estop,
            "estop_clear": self.estop_clear,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TeleopInput":
        if not isinstance(doc, dict):
            raise InvalidInputError("input must be an object")
        q = doc.get("q")
        bend = doc.get("bend")
        if q is not None and bend is not None:
            raise InvalidInputError("give either q or bend, not both")
        if q is not None:
            if len(q) != 4:
                raise InvalidInputError("q must have four components")
            q = tuple(float(v) for v in q)
        if bend is not None:
            if isinstance(bend, dict):
                bend = (bend.get("kappa", 0.0), bend.get("phi", 0.0))
            if len(bend) != 2:
                raise InvalidInputError("bend must be [kappa, phi]")
            bend = (float(bend[0]), float(bend[1]))
        d = int(doc.get("d", gc.GROWTH))
        return cls(
            q=q,
            bend=bend,
            r_p=float(doc.get("r_p", 0.0)),
            r_m=float(doc.get("r_m", 0.0)),
            d=d,
            estop=bool(doc.get("estop", False)),
            estop_clear=bool(doc.get("estop_clear", False)),
        )


NEUTRAL_INPUT = TeleopInput()


@dataclass(frozen=True, slots=True)
class Snapshot:
    """Immutable consistent view as of the last completed tick."""

    tick: int
    sim_time: float
    total_length: float
    backbone: tuple          # decimated laid polyline, endpoints preserved
    base_pose: tuple         # (x, y, z, qw, qx, qy, qz) of the active base
    active: tuple            # (kappa, phi, s)
    tip_pose: tuple          # (x, y, z, qw, qx, qy, qz)
    p_body: float
    pressures: tuple         # (p1, p2, p3)
    motor: tuple             # (omega_d, omega, u)
    events: tuple            # events of the last tick: (kind, tick, pos, id)
    reached: tuple
    toppled: tuple
    estop: bool
    saturated: bool
    tension: bool
    state_hash: str

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "sim_time": self.sim_time,
            "total_length": self.total_length,
            "backbone": [list(p) for p in self.backbone],
            "base_pose": list(self.base_pose),
            "active": list(self.active),
            "tip_pose": list(self.tip_pose),
            "p_body": self.p_body,
            "pressures": list(self.pressures),
            "motor": list(self.motor),
            "events": [[e[0], e[1], list(e[2]), e[3]] for e in self.events],
            "reached": list(self.reached),
            "toppled": list(self.toppled),
            "estop": self.estop,
            "saturated": self.saturated,
            "tension": self.tension,
            "state_hash": self.state_hash,
        }


def _pose_tuple(pose: Pose3) -> tuple:
    q = pose.orientation
    p = pose.position
    return (p[0], p[1], p[2], q.w, q.x, q.y, q.z)


def _event_tuple(e: Event) -> tuple:
    return (e.kind, e.tick, (e.position[0], e.position[1], e.position[2]), e.ident)


class Session:
    """Single-operator simulation session on one course."""

    def __init__(self, course: Course, tick_hz: float = DEFAULT_TICK_HZ):
        if not (math.isfinite(tick_hz) and tick_hz > 0.0):
            raise SessionError(f"tick rate must be positive, got {tick_hz}")
        self.course = course
        self.tick_hz = float(tick_hz)
        self.dt = 1.0 / self.tick_hz
        self.course_hash = course_hash(course)
        robot = course.robot
        self.body = BodyState.at_pose(
            course.start_pose,
            robot.inflated_diameter,
            l_ctrl=robot.steerable_length,
        )
        self.gstate = gc.GrowthState()
        self.estopped = False
        self.pending = NEUTRAL_INPUT
        self.tick_no = 0
        self.last_events: tuple = ()
        self.last_saturated = False
        self.record = RunRecord(course.name, self.course_hash, self.tick_hz)
        seed = f"{self.course_hash}|{self.tick_hz!r}".encode()
        self._digest = hashlib.sha256(seed).digest()
        self._laid_seen = len(self.body.laid)
        self._pressure_cache = (0.0, 0.0, 0.0)

    # ------------------------------------------------------------------ input

    def apply_input(self, inp: TeleopInput | dict) -> TeleopInput:
        """Validate and latch an input for the next tick."""
        if isinstance(inp, dict):
            inp = TeleopInput.from_dict(inp)
        self._validate(inp)
        self.pending = inp
        return inp

    def _validate(self, inp: TeleopInput) -> None:
        cfg = self.course.robot.growth
        for name, v in (("r_p", inp.r_p), ("r_m", inp.r_m)):
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite")
            if not 0.0 <= v <= cfg.pot_range:
                raise InvalidInputError(
                    f"{name}={v} outside ADC range [0, {cfg.pot_range}]"
                )
        if inp.d not in (gc.GROWTH, gc.RETRACTION):
            raise InvalidInputError(f"d must be -1 or +1, got {inp.d}")
        if inp.q is not None:
            Quaternion(*inp.q).normalized()
        if inp.bend is not None:
            kappa, phi = inp.bend
            if not (math.isfinite(kappa) and math.isfinite(phi)):
                raise InvalidInputError("bend components must be finite")
            if kappa < 0.0:
                raise InvalidInputError(f"bend curvature must be >= 0, got {kappa}")

    def estop_clear(self) -> None:
        self.pending = replace(self.pending, estop=False, estop_clear=True)

    def notify_disconnect(self) -> None:
        """Fail closed: the operator vanished, vent everything next tick."""
        self.pending = replace(self.pending, estop=True, estop_clear=False)

    # ------------------------------------------------------------------- tick

    def _joystick_quat(self, inp: TeleopInput) -> Quaternion:
        js_len = self.course.robot.joystick_length
        if inp.bend is not None:
            kappa, phi = inp.bend
            kappa = min(kappa, (math.pi - 1e-9) / js_len)
            if kappa == 0.0:
                phi = 0.0
            elif not -math.pi <= phi < math.pi:
                phi = math.atan2(math.sin(phi), math.cos(phi))
                if phi >= math.pi:
                    phi = -math.pi
            return arc_to_quat(ArcParams(kappa, phi, js_len))
        if inp.q is not None:
            return Quaternion(*inp.q)
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    def tick(self) -> None:
        """Advance the simulation by one tick using the latched input."""
        inp = self.pending
        cfg = self.course.robot.growth
        layout = self.course.robot.layout
        events: list[Event] = []

        if inp.estop:
            self.estopped = True
        elif inp.estop_clear:
            self.estopped = False

        if self.estopped:
            self.gstate = gc.estop(self.gstate)
            pressures = ZERO_PRESSURE
            v_signed = 0.0
            tension = True
        else:
            q = self._joystick_quat(inp)
            arc_js = quat_to_arc(q, self.course.robot.joystick_length)
            tip_cmd = arc_to_tip(arc_js)
            pressures = saturate(solve_pressures(tip_cmd, layout), layout)

            p_body = gc.pot_to_pressure(inp.r_p, cfg)
            omega_d = gc.pot_to_speed(inp.r_m, inp.d, cfg)
            u_raw, self.gstate = gc.pi_motor(omega_d, self.gstate.omega, self.gstate, self.dt, cfg)
            u = gc.backdrive_guard(u_raw, cfg)

            if inp.d == gc.GROWTH:
                allowance = -omega_d * cfg.spool_radius
                v = gc.growth_rate(p_body, allowance, cfg)
                # finite material on the spool: growth stops at body length
                remaining = self.course.robot.body_length - self.body.total_length
                v = min(v, max(0.0, remaining) * 100.0 / self.dt)
                v_signed = v
            else:
                v_signed = -omega_d * cfg.spool_radius
            self.gstate = replace(self.gstate, p_body=p_body, omega_d=omega_d, u=u)

        len_before = self.body.total_length
        self.body, body_events = body_step(
            self.body,
            self.course.environment,
            pressures,
            v_signed,
            self.dt,
            layout,
            self.tick_no,
        )
        if not self.estopped:
            # spool kinematics follow the growth the body actually realized
            # (an environment stall keeps material on the spool)
            realized = (self.body.total_length - len_before) * 100.0 / self.dt
            if inp.d == gc.GROWTH:
                omega = -realized / cfg.spool_radius if realized > 0.0 else 0.0
                if not cfg.guard_enabled and self.gstate.u < 0.0:
                    # unguarded motor can outrun growth and go slack
                    omega = self.gstate.omega_d
                unspool = max(0.0, -omega) * cfg.spool_radius
                tension = unspool <= realized + 1e-12
            else:
                omega = self.gstate.omega_d
                tension = True
            self.gstate = replace(self.gstate, omega=omega, tension=tension)
        events.extend(body_events)
        if pressures.saturated:
            events.append(
                Event(SATURATED, self.tick_no, camera_pose(self.body).position)
            )
        self.gstate = replace(self.gstate, length=self.body.total_length)
        self._pressure_cache = pressures.as_tuple()

        self._update_hash(inp, pressures, events)
        self.record.entries.append(
            RecordEntry(
                self.tick_no,
                inp.to_dict(),
                self.state_hash(),
                tuple(_event_tuple(e) for e in events),
            )
        )
        self.last_events = tuple(events)
        self.last_saturated = pressures.saturated
        self.tick_no += 1
        if inp.estop_clear:
            self.pending = replace(inp, estop_clear=False)

    def run_ticks(self, n: int) -> None:
        for _ in range(n):
            self.tick()

    # ------------------------------------------------------------------- hash

    def _update_hash(self, inp: TeleopInput, pressures, events) -> None:
        pack = struct.pack
        parts = [self._digest, pack("<Q", self.tick_no)]
        qv = inp.q if inp.q is not None else (2.0, 0.0, 0.0, 0.0)
        bv = inp.bend if inp.bend is not None else (-1.0, 0.0)
        parts.append(
            pack(
                "<6d2d3B",
                *qv,
                inp.r_p,
                inp.r_m,
                *bv,
                inp.d & 0xFF,
                inp.estop,
                inp.estop_clear,
            )
        )
        g = self.gstate
        parts.append(
            pack(
                "<6dB",
                g.p_body,
                g.omega,
                g.omega_d,
                g.u,
                g.integ,
                g.length,
                g.tension,
            )
        )
        parts.append(
            pack(
                "<3dB",
                pressures.p1,
                pressures.p2,
                pressures.p3,
                pressures.saturated,
            )
        )
        b = self.body
        parts.append(
            pack(
                "<4dQB",
                b.active.kappa,
                b.active.phi,
                b.active.s,
                b.total_length,
                len(b.laid),
                self.estopped,
            )
        )
        if len(b.laid) > self._laid_seen:
            for lp in b.laid[self._laid_seen:]:
                parts.append(pack("<10d", lp.s, *_pose_tuple(lp.pose), lp.kappa, lp.phi))
        elif len(b.laid) < self._laid_seen:
            lp = b.laid[-1]
            parts.append(pack("<10d", lp.s, *_pose_tuple(lp.pose), lp.kappa, lp.phi))
        self._laid_seen = len(b.laid)
        for e in events:
            parts.append(e.kind.encode())
            parts.append(e.ident.encode())
            parts.append(pack("<Q3d", e.tick, *e.position))
        self._digest = hashlib.sha256(b"".join(parts)).digest()

    def state_hash(self) -> str:
        return self._digest.hex()

    # --------------------------------------------------------------- snapshot

    def snapshot(self) -> Snapshot:
        b = self.body
        stride = max(1, int(round(SNAPSHOT_DECIMATION_M / b.lay_resolution)))
        backbone = [b.laid[i].pose.position for i in range(0, len(b.laid) - 1, stride)]
        backbone.append(b.laid[-1].pose.position)
        g = self.gstate
        return Snapshot(
            tick=self.tick_no,
            sim_time=self.tick_no * self.dt,
            total_length=b.total_length,
            backbone=tuple(backbone),
            base_pose=_pose_tuple(b.base),
            active=(b.active.kappa, b.active.phi, b.active.s),
            tip_pose=_pose_tuple(camera_pose(b)),
            p_body=g.p_body,
            pressures=self._last_pressures(),
            motor=(g.omega_d, g.omega, g.u),
            events=tuple(_event_tuple(e) for e in self.last_events),
            reached=tuple(sorted(b.reached)),
            toppled=tuple(sorted(b.toppled)),
            estop=self.estopped,
            saturated=self.last_saturated,
            tension=g.tension,
            state_hash=self.state_hash(),
        )

    def _last_pressures(self) -> tuple:
        return self._pressure_cache

    # ------------------------------------------------------------------ misc

    def tip_position(self) -> tuple[float, float, float]:
        return camera_pose(self.body).position


def start_session(course: Course, tick_hz: float = DEFAULT_TICK_HZ) -> Session:
    return Session(course, tick_hz)


def replay(record: RunRecord, course: Course, verify: bool = True) -> Session:
    """Re-simulate a record; with verify, check the hash chain tick by tick."""
    chash = course_hash(course)
    if record.course_hash != chash:
        from vinesim.errors import CourseMismatchError

        raise CourseMismatchError(
            f"record course hash {record.course_hash[:12]}... does not match "
            f"{course.name} ({chash[:12]}...)"
        )
    session = Session(course, record.tick_hz)
    for entry in record.entries:
        session.apply_input(TeleopInput.from_dict(entry.input))
        session.tick()
        if verify and session.state_hash() != entry.state_hash:
            raise ReplayIntegrityError(entry.tick, entry.state_hash, session.state_hash())
    return session
