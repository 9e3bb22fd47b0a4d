"""Kinematic eversion body model.

The robot body is a frozen "laid path" (poses that never move once placed,
reflecting growth without relative motion against the environment) plus a
steerable distal arc of at most `l_ctrl` meters. Growth extends the active
arc; excess beyond l_ctrl is discretized and appended to the laid path.
Steering rewrites only the active arc. Obstacle contact is resolved at the
tip alone (the rigid camera cap is the contact proxy): the proposed tip
motion is projected tangentially along surfaces and the active arc is
re-fit to the adjusted tip.

All rules are discrete and deterministic: aperture pass/buckle is a
threshold on hole-to-diameter ratio, unstable cylinders topple past a
penetration tolerance, and retraction buckles instead of shortening when
the laid path's distal curvature is above a straightness threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from vinesim import kernels
from vinesim.errors import InvalidInputError
from vinesim.kinematics import (
    ArcParams,
    Pose3,
    TipPosition,
    arc_pose_at,
    arc_to_tip,
    clamp_tip,
    tip_to_arc,
)
from vinesim.steering import ActuatorLayout, PressureCommand, superpose_tip

# aperture passes when hole_side >= SHRINK_RATIO * inflated diameter
SHRINK_RATIO = 0.57

# events
APERTURE_BUCKLE = "ApertureBuckle"
CYLINDER_TOPPLED = "CylinderToppled"
RETRACTION_BUCKLE = "RetractionBuckle"
GOAL_REACHED = "GoalReached"
CONTACT_SLIDE = "ContactSlide"
SATURATED = "Saturated"

# steering is suppressed below this active length (a near-point segment
# would demand unbounded curvature for any offset)
_MIN_STEER_LEN = 0.05

# growth stalls (material stays on the spool) when the tip would remain
# wedged deeper than this after collision resolution
_STALL_DEPTH = 0.01


@dataclass(frozen=True, slots=True)
class Event:
    kind: str
    tick: int
    position: tuple[float, float, float]
    ident: str = ""


@dataclass(frozen=True, slots=True)
class Aabb:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        for a, b in zip(self.lo, self.hi):
            if not b > a:
                raise InvalidInputError(f"degenerate box extent [{a}, {b}]")

    def contains(self, p) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, p, self.hi))

    def center(self) -> tuple[float, float, float]:
        return tuple(0.5 * (l + h) for l, h in zip(self.lo, self.hi))

    def penetration(self, p):
        """(depth, outward normal of nearest face) if p is inside, else None."""
        best = None
        for axis in range(3):
            lo_d = p[axis] - self.lo[axis]
            hi_d = self.hi[axis] - p[axis]
            if lo_d < 0.0 or hi_d < 0.0:
                return None
            n = [0.0, 0.0, 0.0]
            if lo_d <= hi_d:
                n[axis] = -1.0
                cand = (lo_d, tuple(n))
            else:
                n[axis] = 1.0
                cand = (hi_d, tuple(n))
            if best is None or cand[0] < best[0]:
                best = cand
        return best

    def overlaps(self, other: "Aabb") -> bool:
        return all(
            self.lo[i] < other.hi[i] and other.lo[i] < self.hi[i] for i in range(3)
        )


@dataclass(frozen=True, slots=True)
class Box:
    """Solid oriented box: pose center frame, full extents along local axes."""

    pose: Pose3
    extents: tuple[float, float, float]
    ident: str = ""

    def __post_init__(self):
        if min(self.extents) <= 0.0:
            raise InvalidInputError(f"box extents must be positive: {self.extents}")

    def penetration(self, p):
        l = self.pose.to_local(p)
        half = (
            0.5 * self.extents[0],
            0.5 * self.extents[1],
            0.5 * self.extents[2],
        )
        best = None
        for axis in range(3):
            d = half[axis] - abs(l[axis])
            if d < 0.0:
                return None
            if best is None or d < best[0]:
                n_local = [0.0, 0.0, 0.0]
                n_local[axis] = 1.0 if l[axis] >= 0.0 else -1.0
                best = (d, tuple(n_local))
        depth, n_local = best
        return depth, self.pose.orientation.rotate(n_local)


@dataclass(frozen=True, slots=True)
class UnstableCylinder:
    """Upright cylinder that topples when pushed past its tolerance."""

    center: tuple[float, float]   # xy of the axis
    z0: float
    radius: float
    height: float
    topple_tolerance: float
    ident: str = ""

    def __post_init__(self):
        if self.radius <= 0.0 or self.height <= 0.0:
            raise InvalidInputError("cylinder radius/height must be positive")
        if self.topple_tolerance <= 0.0:
            raise InvalidInputError("topple tolerance must be positive")

    def depth_at(self, p) -> float:
        if not (self.z0 <= p[2] <= self.z0 + self.height):
            return -1.0
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        return self.radius - math.sqrt(dx * dx + dy * dy)

    def penetration(self, p):
        d = self.depth_at(p)
        if d < 0.0:
            return None
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        r = math.sqrt(dx * dx + dy * dy)
        if r == 0.0:
            return d, (1.0, 0.0, 0.0)
        return d, (dx / r, dy / r, 0.0)


@dataclass(frozen=True, slots=True)
class ApertureWall:
    """Wall slab with a rectangular hole; the hole admits the tip only when
    the pass rule holds for the robot's inflated diameter."""

    pose: Pose3                      # local z runs through the wall thickness
    extents: tuple[float, float, float]   # width, height, thickness
    hole: tuple[float, float]        # hole width, height (local x, y)
    hole_center: tuple[float, float] = (0.0, 0.0)
    ident: str = ""

    def __post_init__(self):
        hw, hh = self.hole
        if hw <= 0.0 or hh <= 0.0:
            raise InvalidInputError("hole extents must be positive")
        if hw > self.extents[0] or hh > self.extents[1]:
            raise InvalidInputError("hole does not fit within the wall")

    def hole_side_m(self) -> float:
        return min(self.hole)

    def in_hole_rect(self, l) -> bool:
        return (
            abs(l[0] - self.hole_center[0]) <= 0.5 * self.hole[0]
            and abs(l[1] - self.hole_center[1]) <= 0.5 * self.hole[1]
        )

    def penetration(self, p, hole_open: bool):
        l = self.pose.to_local(p)
        half = (
            0.5 * self.extents[0],
            0.5 * self.extents[1],
            0.5 * self.extents[2],
        )
        if abs(l[0]) > half[0] or abs(l[1]) > half[1] or abs(l[2]) > half[2]:
            return None
        if hole_open and self.in_hole_rect(l):
            return None
        # push back out through the nearest slab face
        depth = half[2] - abs(l[2])
        n_local = (0.0, 0.0, 1.0 if l[2] >= 0.0 else -1.0)
        return depth, self.pose.orientation.rotate(n_local)


@dataclass(frozen=True, slots=True)
class SandRegion:
    """Loose-terrain marker; does not impede a growing body."""

    region: Aabb
    ident: str = ""


@dataclass(frozen=True, slots=True)
class TunnelWalls:
    """A set of solid slabs bounding a passage."""

    boxes: tuple[Aabb, ...]
    ident: str = ""

    def penetration(self, p):
        best = None
        for b in self.boxes:
            hit = b.penetration(p)
            if hit is not None and (best is None or hit[0] > best[0]):
                best = hit
        return best


@dataclass(frozen=True, slots=True)
class Goal:
    region: Aabb
    ident: str


Obstacle = Box | UnstableCylinder | ApertureWall | SandRegion | TunnelWalls | Goal


@dataclass(frozen=True, slots=True)
class Environment:
    obstacles: tuple[Obstacle, ...]
    bounds: Aabb
    gravity_dir: tuple[float, float, float] = (0.0, 0.0, -1.0)

    def goals(self):
        return [o for o in self.obstacles if isinstance(o, Goal)]

    def cylinders(self):
        return [o for o in self.obstacles if isinstance(o, UnstableCylinder)]

    def apertures(self):
        return [o for o in self.obstacles if isinstance(o, ApertureWall)]


@dataclass(frozen=True, slots=True)
class LaidPoint:
    """Frozen backbone sample: arc length from base, pose, and the arc
    parameters of the piece distal to it (used for retraction)."""

    s: float
    pose: Pose3
    kappa: float
    phi: float


@dataclass(slots=True)
class BodyState:
    """Single-writer simulation state; step() mutates laid in place
    (append-only except during retraction) and returns self."""

    laid: list[LaidPoint]
    active: ArcParams
    total_length: float
    inflated_diameter: float          # cm
    l_ctrl: float = 1.0
    lay_resolution: float = 0.0005    # m between frozen samples
    kappa_retract: float = 0.2        # 1/m straightness threshold
    retract_window: float = 2.0       # m of distal laid path checked
    tip_slew: float = 1.0             # m/s cap on commanded tip offset changes
    toppled: frozenset = field(default_factory=frozenset)
    reached: frozenset = field(default_factory=frozenset)
    buckled_walls: frozenset = field(default_factory=frozenset)
    in_contact: bool = False
    retract_latched: bool = False

    @classmethod
    def at_pose(cls, start: Pose3, inflated_diameter: float, **kw) -> "BodyState":
        return cls(
            laid=[LaidPoint(0.0, start, 0.0, 0.0)],
            active=ArcParams(0.0, 0.0, 0.0),
            total_length=0.0,
            inflated_diameter=inflated_diameter,
            **kw,
        )

    @property
    def base(self) -> Pose3:
        return self.laid[-1].pose

    @property
    def laid_length(self) -> float:
        return self.laid[-1].s

    def polyline(self) -> list[tuple[float, float, float]]:
        return [lp.pose.position for lp in self.laid]


def aperture_check(inflated_diameter_cm: float, hole_side_cm: float) -> bool:
    """True (pass) when the hole admits the shrunken body; False means buckle."""
    if inflated_diameter_cm <= 0.0 or hole_side_cm <= 0.0:
        raise InvalidInputError("aperture dimensions must be positive")
    return hole_side_cm >= SHRINK_RATIO * inflated_diameter_cm


def collide_slide(tip_motion, contact_normal):
    """Tangential projection of a tip motion against a contacted surface."""
    mx, my, mz = tip_motion
    nx, ny, nz = contact_normal
    dot = mx * nx + my * ny + mz * nz
    if dot >= 0.0:
        return (mx, my, mz)
    return (mx - dot * nx, my - dot * ny, mz - dot * nz)


def cylinder_interaction(tip_path, cyl: UnstableCylinder) -> str:
    """Classify a tip path against a cylinder: 'none', 'slide', or 'topple'."""
    p0, p1 = tip_path
    depth = max(cyl.depth_at(p0), cyl.depth_at(p1))
    if depth <= 0.0:
        return "none"
    if depth > cyl.topple_tolerance:
        return "topple"
    return "slide"


def camera_pose(state: BodyState) -> Pose3:
    """Pose of the camera cap at the distal end of the active arc."""
    if state.active.s == 0.0:
        return state.base
    return state.base.compose(arc_pose_at(state.active, state.active.s))


def _freeze_excess(state: BodyState) -> None:
    """Move arc length beyond l_ctrl from the active segment to the laid path."""
    excess = state.active.s - state.l_ctrl
    if excess <= 0.0:
        return
    arc = state.active
    base = state.base
    s0 = state.laid_length
    step = state.lay_resolution
    n_steps = int(excess / step)
    for i in range(1, n_steps + 1):
        ell = i * step
        state.laid.append(
            LaidPoint(s0 + ell, base.compose(arc_pose_at(arc, ell)), arc.kappa, arc.phi)
        )
    if state.laid[-1].s < s0 + excess:
        state.laid.append(
            LaidPoint(
                s0 + excess,
                base.compose(arc_pose_at(arc, excess)),
                arc.kappa,
                arc.phi,
            )
        )
    state.active = ArcParams(arc.kappa, arc.phi, state.l_ctrl)


def _refit_active(state: BodyState, target_tip) -> None:
    """Re-aim the active arc so its tip lands at the world-space target.

    The lateral target components pick (kappa, phi) as usual. If the target
    also sits shorter along the growth axis than that arc's natural tip
    (frontal contact), curl further so the tip stays on the surface: a
    growing body pressed against a wall bows out and follows it instead of
    advancing through it.
    """
    s = state.active.s
    local = state.base.to_local(target_tip)
    tip, _ = clamp_tip(TipPosition(local[0], local[1]), s)
    arc = tip_to_arc(tip, s)
    t_z = kernels.arc_t_for_z(local[2] / s)
    if t_z > arc.kappa * s:
        if tip.magnitude() > 1e-9:
            phi = arc.phi
        elif state.active.kappa > 0.0:
            phi = state.active.phi
        else:
            phi = 0.0
        arc = ArcParams(t_z / s, phi, s)
    state.active = arc


def _solid_hits(state: BodyState, env: Environment, p, hole_open):
    """All (depth, normal) pairs for solids penetrated by point p."""
    hits = []
    for obs in env.obstacles:
        if isinstance(obs, Box):
            hit = obs.penetration(p)
        elif isinstance(obs, TunnelWalls):
            hit = obs.penetration(p)
        elif isinstance(obs, UnstableCylinder):
            hit = None if obs.ident in state.toppled else obs.penetration(p)
        elif isinstance(obs, ApertureWall):
            hit = obs.penetration(p, hole_open[obs.ident])
        else:
            hit = None
        if hit is not None:
            hits.append(hit)
    # bounds act as inward-facing walls
    for axis in range(3):
        lo, hi = env.bounds.lo[axis], env.bounds.hi[axis]
        if p[axis] < lo:
            n = [0.0, 0.0, 0.0]
            n[axis] = 1.0
            hits.append((lo - p[axis], tuple(n)))
        elif p[axis] > hi:
            n = [0.0, 0.0, 0.0]
            n[axis] = -1.0
            hits.append((p[axis] - hi, tuple(n)))
    return hits


def _resolve_tip(state, env, tip0, hole_open) -> tuple[bool, float]:
    """Slide the tip along penetrated solids, re-fitting the active arc.

    Returns (any contact, residual max penetration depth)."""
    contact = False
    for _ in range(4):
        tip1 = camera_pose(state).position
        hits = _solid_hits(state, env, tip1, hole_open)
        if not hits:
            return contact, 0.0
        contact = True
        depth, normal = max(hits, key=lambda h: h[0])
        motion = (
            tip1[0] - tip0[0],
            tip1[1] - tip0[1],
            tip1[2] - tip0[2],
        )
        slid = collide_slide(motion, normal)
        # push out of the surface in addition to sliding
        target = (
            tip0[0] + slid[0] + normal[0] * depth,
            tip0[1] + slid[1] + normal[1] * depth,
            tip0[2] + slid[2] + normal[2] * depth,
        )
        _refit_active(state, target)
    tip1 = camera_pose(state).position
    hits = _solid_hits(state, env, tip1, hole_open)
    residual = max((h[0] for h in hits), default=0.0)
    return contact, residual


def step(
    state: BodyState,
    env: Environment,
    steering: PressureCommand,
    growth_cm_s: float,
    dt: float,
    layout: ActuatorLayout,
    tick: int = 0,
) -> tuple[BodyState, list[Event]]:
    """Advance the body one tick. Deterministic; returns (state, events)."""
    if dt <= 0.0 or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be positive, got {dt}")
    d_len = growth_cm_s * 0.01 * dt
    if abs(d_len) > 0.1 * state.l_ctrl:
        raise InvalidInputError(
            f"growth step {d_len:.4f} m exceeds 10% of steerable length; lower dt"
        )
    events: list[Event] = []
    tip0 = camera_pose(state).position

    if d_len < 0.0:
        state, retract_events = retract(state, -d_len, tick)
        events.extend(retract_events)
        state.in_contact = False
        return state, events
    state.retract_latched = False

    # hole openness per aperture wall, decided by the shrink rule
    hole_open = {
        w.ident: aperture_check(state.inflated_diameter, w.hole_side_m() * 100.0)
        for w in env.apertures()
    }

    contact = False
    steerable = state.active.s >= _MIN_STEER_LEN
    if steerable:
        # steering rewrites the active arc (open loop; collision applied
        # after); the commanded offset is slew-limited so pressure changes
        # cannot jump the tip across geometry within one tick
        cmd = superpose_tip(steering, layout)
        cur = arc_to_tip(state.active)
        max_step = state.tip_slew * dt
        ex, ey = cmd.x - cur.x, cmd.y - cur.y
        dist = math.sqrt(ex * ex + ey * ey)
        if dist > max_step:
            f = max_step / dist
            cmd = TipPosition(cur.x + ex * f, cur.y + ey * f)
        tip, _ = clamp_tip(cmd, state.active.s)
        state.active = tip_to_arc(tip, state.active.s)

        # unstable cylinders are classified on the unconstrained swing
        tip1 = camera_pose(state).position
        for cyl in env.cylinders():
            if cyl.ident in state.toppled:
                continue
            if cylinder_interaction((tip0, tip1), cyl) == "topple":
                state.toppled = state.toppled | {cyl.ident}
                events.append(Event(CYLINDER_TOPPLED, tick, tip1, cyl.ident))

        hit, _ = _resolve_tip(state, env, tip0, hole_open)
        contact = contact or hit

    # growth tentatively extends the active arc; if the tip stays wedged
    # after collision resolution, eversion stalls and the material never
    # leaves the spool this tick
    if d_len > 0.0:
        saved_arc = state.active
        saved_len = state.total_length
        state.active = ArcParams(
            state.active.kappa, state.active.phi, state.active.s + d_len
        )
        state.total_length += d_len
        if steerable:
            hit, residual = _resolve_tip(state, env, tip0, hole_open)
            contact = contact or hit
            if residual > _STALL_DEPTH:
                state.active = saved_arc
                state.total_length = saved_len

    if contact and not state.in_contact:
        events.append(Event(CONTACT_SLIDE, tick, camera_pose(state).position))
    state.in_contact = contact

    # aperture buckle: contact with a closed hole region
    tip1 = camera_pose(state).position
    for wall in env.apertures():
        if hole_open[wall.ident] or wall.ident in state.buckled_walls:
            continue
        l = wall.pose.to_local(tip1)
        near_slab = abs(l[2]) <= 0.5 * wall.extents[2] + 0.02
        if near_slab and wall.in_hole_rect(l):
            state.buckled_walls = state.buckled_walls | {wall.ident}
            events.append(Event(APERTURE_BUCKLE, tick, tip1, wall.ident))

    # goals latch on first tip entry
    for goal in env.goals():
        if goal.ident not in state.reached and goal.region.contains(tip1):
            state.reached = state.reached | {goal.ident}
            events.append(Event(GOAL_REACHED, tick, tip1, goal.ident))

    # freeze growth beyond the steerable window
    _freeze_excess(state)
    return state, events


def retract(state: BodyState, d_len: float, tick: int = 0) -> tuple[BodyState, list[Event]]:
    """Shorten from the tip by d_len, unless the distal laid path is too
    curved to pull back (then emit RetractionBuckle and keep the length)."""
    if d_len <= 0.0 or not math.isfinite(d_len):
        raise InvalidInputError(f"retraction length must be positive, got {d_len}")
    if state.total_length == 0.0:
        return state, []
    window_start = state.laid_length - state.retract_window
    max_kappa = 0.0
    for lp in reversed(state.laid):
        if lp.kappa > max_kappa:
            max_kappa = lp.kappa
        if lp.s < window_start:
            break
    if max_kappa > state.kappa_retract:
        events = []
        if not state.retract_latched:
            events.append(
                Event(RETRACTION_BUCKLE, tick, camera_pose(state).position)
            )
            state.retract_latched = True
        return state, events

    target = max(0.0, state.total_length - d_len)
    if d_len < state.active.s:
        state.active = ArcParams(
            state.active.kappa, state.active.phi, state.active.s - d_len
        )
    else:
        while len(state.laid) > 1 and state.laid[-1].s > target:
            state.laid.pop()
        lp = state.laid[-1]
        remainder = max(0.0, target - lp.s)
        if remainder > 0.0:
            state.active = ArcParams(lp.kappa, lp.phi, remainder)
        else:
            state.active = ArcParams(0.0, 0.0, 0.0)
    state.total_length = target
    return state, []
