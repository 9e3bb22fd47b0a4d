"""Course definitions, validation, scoring, and the run-record format.

Course files are UTF-8 JSON, format 1. Lengths are meters, pressures kPa,
angles degrees (converted to radians on load). Built-in courses live in
vinesim/courses/ and are addressed by name.

Scoring follows a task-completion rubric: each obstacle has a point value,
paid in full only for whole-body passage; a growing robot that leaves its
body behind scores at the tip-only multiplier. The cylinder obstacle pays
nothing if any cylinder toppled, and passing the aperture earns a bonus
that grows as the hole shrinks relative to the body diameter.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from vinesim.body import (
    Aabb,
    ApertureWall,
    Box,
    Environment,
    Goal,
    SandRegion,
    TunnelWalls,
    UnstableCylinder,
    CYLINDER_TOPPLED,
    GOAL_REACHED,
    SHRINK_RATIO,
)
from vinesim.errors import CourseError, CourseMismatchError
from vinesim.growth import GrowthConfig
from vinesim.kinematics import Pose3, Quaternion
from vinesim.steering import ActuatorLayout

FORMAT_VERSION = 1

BUILTIN_NAMES = ("robosoft2018", "chavin")

# frames used when a wall's thickness runs along a world axis
_AXIS_FRAMES = {
    "z": Quaternion(1.0, 0.0, 0.0, 0.0),
    "x": Quaternion(0.5, 0.5, 0.5, 0.5),
    "y": Quaternion(0.5, -0.5, -0.5, -0.5),
}


def quat_from_z_to(direction) -> Quaternion:
    """Shortest-arc rotation taking the +z axis onto `direction`."""
    dx, dy, dz = direction
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n == 0.0:
        raise CourseError("start direction must be nonzero")
    dx, dy, dz = dx / n, dy / n, dz / n
    w = 1.0 + dz
    if w < 1e-12:
        # antiparallel: half turn about x
        return Quaternion(0.0, 1.0, 0.0, 0.0)
    q = Quaternion(w, -dy, dx, 0.0)
    return q.normalized()


@dataclass(frozen=True, slots=True)
class RobotConfig:
    inflated_diameter: float          # cm
    body_length: float                # m of material on the spool
    layout: ActuatorLayout
    growth: GrowthConfig
    steerable_length: float = 1.0     # m, distal controllable window
    joystick_length: float = 1.0      # m, virtual joystick arc length

    def __post_init__(self):
        for name, v in (
            ("inflated_diameter", self.inflated_diameter),
            ("body_length", self.body_length),
            ("steerable_length", self.steerable_length),
            ("joystick_length", self.joystick_length),
        ):
            if not (math.isfinite(v) and v > 0.0):
                raise CourseError(f"robot.{name} must be > 0, got {v}")


@dataclass(frozen=True, slots=True)
class ScoringRubric:
    points: dict[str, float]
    tip_only_multiplier: float = 0.5
    aperture_bonus_max: float = 0.0
    aperture_goal: str = "aperture_goal"   # goal whose passage earns the bonus
    aperture_wall: str = "aperture"        # wall whose hole sets the ratio
    cylinder_obstacle: str = "cylinders"
    time_limit_s: float = 900.0

    def __post_init__(self):
        if not 0.0 < self.tip_only_multiplier <= 1.0:
            raise CourseError(
                f"tip_only_multiplier must be in (0, 1], got {self.tip_only_multiplier}"
            )
        for k, v in self.points.items():
            if v < 0.0:
                raise CourseError(f"points[{k}] must be >= 0, got {v}")
        if self.aperture_bonus_max < 0.0 or self.time_limit_s <= 0.0:
            raise CourseError("bonus must be >= 0 and time limit > 0")


@dataclass(frozen=True, slots=True)
class Course:
    name: str
    environment: Environment
    start_pose: Pose3
    robot: RobotConfig
    rubric: ScoringRubric
    meta: dict = field(default_factory=dict)

    def aperture_ratio(self) -> float | None:
        """hole side / inflated diameter for the rubric's aperture wall."""
        for obs in self.environment.obstacles:
            if isinstance(obs, ApertureWall) and obs.ident == self.rubric.aperture_wall:
                return (obs.hole_side_m() * 100.0) / self.robot.inflated_diameter
        return None


@dataclass(frozen=True, slots=True)
class Finding:
    severity: str   # "error" | "warning"
    path: str
    message: str


# ---------------------------------------------------------------------------
# parsing

def _need(doc: dict, key: str, path: str):
    if key not in doc:
        raise CourseError(f"{path}: missing required key {key!r}")
    return doc[key]


def _vec3(v, path: str):
    if not (isinstance(v, (list, tuple)) and len(v) == 3):
        raise CourseError(f"{path}: expected [x, y, z], got {v!r}")
    return (float(v[0]), float(v[1]), float(v[2]))


def _aabb(doc: dict, path: str) -> Aabb:
    try:
        return Aabb(_vec3(_need(doc, "min", path), path), _vec3(_need(doc, "max", path), path))
    except CourseError:
        raise
    except Exception as exc:
        raise CourseError(f"{path}: {exc}") from exc


def _parse_obstacle(doc: dict, index: int):
    path = f"environment.obstacles[{index}]"
    kind = _need(doc, "type", path)
    ident = str(doc.get("id", f"{kind}-{index}"))
    try:
        if kind == "box":
            center = _vec3(_need(doc, "center", path), path)
            size = _vec3(_need(doc, "size", path), path)
            yaw = math.radians(float(doc.get("yaw_deg", 0.0)))
            q = Quaternion(math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))
            return Box(Pose3(center, q), size, ident)
        if kind == "cylinder":
            cx, cy = _need(doc, "center", path)
            return UnstableCylinder(
                (float(cx), float(cy)),
                float(doc.get("z0", 0.0)),
                float(_need(doc, "radius", path)),
                float(_need(doc, "height", path)),
                float(_need(doc, "topple_tolerance", path)),
                ident,
            )
        if kind == "aperture":
            axis = str(doc.get("axis", "z"))
            if axis not in _AXIS_FRAMES:
                raise CourseError(f"{path}: axis must be x, y or z")
            center = _vec3(_need(doc, "center", path), path)
            hole_center = doc.get("hole_center", (0.0, 0.0))
            return ApertureWall(
                Pose3(center, _AXIS_FRAMES[axis]),
                (
                    float(_need(doc, "width", path)),
                    float(_need(doc, "height", path)),
                    float(_need(doc, "thickness", path)),
                ),
                (float(_need(doc, "hole_w", path)), float(_need(doc, "hole_h", path))),
                (float(hole_center[0]), float(hole_center[1])),
                ident,
            )
        if kind == "sand":
            return SandRegion(_aabb(doc, path), ident)
        if kind == "tunnel":
            boxes = tuple(
                _aabb(b, f"{path}.boxes[{i}]") for i, b in enumerate(_need(doc, "boxes", path))
            )
            return TunnelWalls(boxes, ident)
        if kind == "goal":
            return Goal(_aabb(doc, path), ident)
    except CourseError:
        raise
    except Exception as exc:
        raise CourseError(f"{path}: {exc}") from exc
    raise CourseError(f"{path}: unknown obstacle type {kind!r}")


def load_course(document: str | dict) -> Course:
    """Parse and validate a course document (JSON text or parsed dict)."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CourseError(f"course is not valid JSON: {exc}") from exc
    else:
        doc = document
    if doc.get("format") != FORMAT_VERSION:
        raise CourseError(
            f"format: expected {FORMAT_VERSION}, got {doc.get('format')!r}"
        )
    name = str(_need(doc, "name", "$"))

    rdoc = _need(doc, "robot", "$")
    ldoc = rdoc.get("layout", {})
    angles = ldoc.get("angles_deg", (90.0, 210.0, 330.0))
    if len(angles) != 3:
        raise CourseError("robot.layout.angles_deg: expected three angles")
    try:
        layout = ActuatorLayout(
            math.radians(float(angles[0])),
            math.radians(float(angles[1])),
            math.radians(float(angles[2])),
            float(ldoc.get("c_m_per_kpa", 0.01)),
            float(ldoc.get("p_max_kpa", 14.0)),
        )
    except Exception as exc:
        raise CourseError(f"robot.layout: {exc}") from exc

    gdoc = rdoc.get("growth", {})
    gdefault = GrowthConfig()
    try:
        growth = GrowthConfig(
            c_p=float(gdoc.get("c_p_kpa_per_count", gdefault.c_p)),
            r_p0=float(gdoc.get("r_p0_counts", gdefault.r_p0)),
            c_m=float(gdoc.get("c_m_rad_s_per_count", gdefault.c_m)),
            r_m0=float(gdoc.get("r_m0_counts", gdefault.r_m0)),
            k_p=float(gdoc.get("k_p_v_s_per_rad", gdefault.k_p)),
            k_i=float(gdoc.get("k_i_v_per_rad", gdefault.k_i)),
            windup_limit=float(gdoc.get("windup_limit_v", gdefault.windup_limit)),
            p_grow=float(gdoc.get("p_grow_kpa", gdefault.p_grow)),
            p_body_max=float(gdoc.get("p_body_max_kpa", gdefault.p_body_max)),
            flow_max=float(gdoc.get("flow_max_cm3_s", gdefault.flow_max)),
            body_radius=float(gdoc.get("body_radius_cm", gdefault.body_radius)),
            v_max=float(gdoc.get("v_max_cm_s", gdefault.v_max)),
            coulomb_v=float(gdoc.get("coulomb_v", gdefault.coulomb_v)),
            spool_radius=float(gdoc.get("spool_radius_cm", gdefault.spool_radius)),
            pot_range=float(gdoc.get("pot_range_counts", gdefault.pot_range)),
            pressure_curve=str(gdoc.get("pressure_curve", gdefault.pressure_curve)),
        )
    except Exception as exc:
        raise CourseError(f"robot.growth: {exc}") from exc

    robot = RobotConfig(
        inflated_diameter=float(_need(rdoc, "inflated_diameter_cm", "robot")),
        body_length=float(_need(rdoc, "body_length_m", "robot")),
        layout=layout,
        growth=growth,
        steerable_length=float(rdoc.get("steerable_length_m", 1.0)),
        joystick_length=float(rdoc.get("joystick_length_m", 1.0)),
    )

    edoc = _need(doc, "environment", "$")
    bounds = _aabb(_need(edoc, "bounds", "environment"), "environment.bounds")
    gravity = _vec3(edoc.get("gravity", (0.0, 0.0, -1.0)), "environment.gravity")
    obstacles = tuple(
        _parse_obstacle(o, i) for i, o in enumerate(edoc.get("obstacles", []))
    )
    idents = [o.ident for o in obstacles]
    if len(set(idents)) != len(idents):
        dupes = sorted({i for i in idents if idents.count(i) > 1})
        raise CourseError(f"environment.obstacles: duplicate ids {dupes}")
    environment = Environment(obstacles, bounds, gravity)

    sdoc = _need(doc, "start", "$")
    position = _vec3(_need(sdoc, "position", "start"), "start.position")
    if "quat" in sdoc:
        q = Quaternion(*[float(v) for v in sdoc["quat"]]).normalized()
    else:
        q = quat_from_z_to(_vec3(sdoc.get("direction", (0.0, 0.0, 1.0)), "start.direction"))
    start_pose = Pose3(position, q)
    if not bounds.contains(position):
        raise CourseError("start.position: outside environment bounds")

    rubdoc = doc.get("rubric", {})
    rubric = ScoringRubric(
        points={str(k): float(v) for k, v in rubdoc.get("points", {}).items()},
        tip_only_multiplier=float(rubdoc.get("tip_only_multiplier", 0.5)),
        aperture_bonus_max=float(rubdoc.get("aperture_bonus_max", 0.0)),
        aperture_goal=str(rubdoc.get("aperture_goal", "aperture_goal")),
        aperture_wall=str(rubdoc.get("aperture_wall", "aperture")),
        cylinder_obstacle=str(rubdoc.get("cylinder_obstacle", "cylinders")),
        time_limit_s=float(rubdoc.get("time_limit_s", 900.0)),
    )

    return Course(name, environment, start_pose, robot, rubric, dict(doc.get("meta", {})))


# ---------------------------------------------------------------------------
# serialization

def _obstacle_doc(obs) -> dict:
    if isinstance(obs, Box):
        yaw = 2.0 * math.atan2(obs.pose.orientation.z, obs.pose.orientation.w)
        return {
            "type": "box",
            "id": obs.ident,
            "center": list(obs.pose.position),
            "size": list(obs.extents),
            "yaw_deg": math.degrees(yaw),
        }
    if isinstance(obs, UnstableCylinder):
        return {
            "type": "cylinder",
            "id": obs.ident,
            "center": list(obs.center),
            "z0": obs.z0,
            "radius": obs.radius,
            "height": obs.height,
            "topple_tolerance": obs.topple_tolerance,
        }
    if isinstance(obs, ApertureWall):
        axis = next(
            (a for a, q in _AXIS_FRAMES.items() if q == obs.pose.orientation), None
        )
        if axis is None:
            raise CourseError("only axis-aligned aperture walls serialize")
        return {
            "type": "aperture",
            "id": obs.ident,
            "center": list(obs.pose.position),
            "axis": axis,
            "width": obs.extents[0],
            "height": obs.extents[1],
            "thickness": obs.extents[2],
            "hole_w": obs.hole[0],
            "hole_h": obs.hole[1],
            "hole_center": list(obs.hole_center),
        }
    if isinstance(obs, SandRegion):
        return {
            "type": "sand",
            "id": obs.ident,
            "min": list(obs.region.lo),
            "max": list(obs.region.hi),
        }
    if isinstance(obs, TunnelWalls):
        return {
            "type": "tunnel",
            "id": obs.ident,
            "boxes": [{"min": list(b.lo), "max": list(b.hi)} for b in obs.boxes],
        }
    if isinstance(obs, Goal):
        return {
            "type": "goal",
            "id": obs.ident,
            "min": list(obs.region.lo),
            "max": list(obs.region.hi),
        }
    raise CourseError(f"cannot serialize obstacle {obs!r}")


def serialize_course(course: Course) -> dict:
    """Canonical document form: load_course(serialize_course(c)) == c-equivalent."""
    lay = course.robot.layout
    g = course.robot.growth
    return {
        "format": FORMAT_VERSION,
        "name": course.name,
        "meta": course.meta,
        "robot": {
            "inflated_diameter_cm": course.robot.inflated_diameter,
            "body_length_m": course.robot.body_length,
            "steerable_length_m": course.robot.steerable_length,
            "joystick_length_m": course.robot.joystick_length,
            "layout": {
                "angles_deg": [
                    math.degrees(lay.psi1),
                    math.degrees(lay.psi2),
                    math.degrees(lay.psi3),
                ],
                "c_m_per_kpa": lay.c,
                "p_max_kpa": lay.p_max,
            },
            "growth": {
                "c_p_kpa_per_count": g.c_p,
                "r_p0_counts": g.r_p0,
                "c_m_rad_s_per_count": g.c_m,
                "r_m0_counts": g.r_m0,
                "k_p_v_s_per_rad": g.k_p,
                "k_i_v_per_rad": g.k_i,
                "windup_limit_v": g.windup_limit,
                "p_grow_kpa": g.p_grow,
                "p_body_max_kpa": g.p_body_max,
                "flow_max_cm3_s": g.flow_max,
                "body_radius_cm": g.body_radius,
                "v_max_cm_s": g.v_max,
                "coulomb_v": g.coulomb_v,
                "spool_radius_cm": g.spool_radius,
                "pot_range_counts": g.pot_range,
                "pressure_curve": g.pressure_curve,
            },
        },
        "start": {
            "position": list(course.start_pose.position),
            "quat": [
                course.start_pose.orientation.w,
                course.start_pose.orientation.x,
                course.start_pose.orientation.y,
                course.start_pose.orientation.z,
            ],
        },
        "environment": {
            "bounds": {
                "min": list(course.environment.bounds.lo),
                "max": list(course.environment.bounds.hi),
            },
            "gravity": list(course.environment.gravity_dir),
            "obstacles": [
                _obstacle_doc(o) for o in course.environment.obstacles
            ],
        },
        "rubric": {
            "points": dict(course.rubric.points),
            "tip_only_multiplier": course.rubric.tip_only_multiplier,
            "aperture_bonus_max": course.rubric.aperture_bonus_max,
            "aperture_goal": course.rubric.aperture_goal,
            "aperture_wall": course.rubric.aperture_wall,
            "cylinder_obstacle": course.rubric.cylinder_obstacle,
            "time_limit_s": course.rubric.time_limit_s,
        },
    }


def course_hash(course: Course) -> str:
    canon = json.dumps(serialize_course(course), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# built-ins

def builtin_course_names() -> tuple[str, ...]:
    return BUILTIN_NAMES


def load_builtin(name: str) -> Course:
    if name not in BUILTIN_NAMES:
        raise CourseError(
            f"unknown built-in course {name!r}; available: {', '.join(BUILTIN_NAMES)}"
        )
    text = resources.files("vinesim.courses").joinpath(f"{name}.json").read_text()
    return load_course(text)


def resolve_course(ref: str) -> Course:
    """A course reference is a built-in name or a path to a JSON file."""
    if ref in BUILTIN_NAMES:
        return load_builtin(ref)
    try:
        with open(ref, encoding="utf-8") as f:
            return load_course(f.read())
    except FileNotFoundError:
        raise CourseError(
            f"{ref!r} is neither a built-in course nor a readable file"
        ) from None


# ---------------------------------------------------------------------------
# validation

def validate_course(course: Course) -> list[Finding]:
    """Non-fatal course lint: unreachable goals, overlaps, tight apertures."""
    findings: list[Finding] = []
    env = course.environment
    start = course.start_pose.position

    for i, obs in enumerate(env.obstacles):
        if isinstance(obs, Goal):
            if not all(
                env.bounds.lo[k] <= obs.region.center()[k] <= env.bounds.hi[k]
                for k in range(3)
            ):
                findings.append(
                    Finding("error", f"obstacles[{i}]", f"goal {obs.ident!r} outside bounds")
                )
            dist = math.dist(start, obs.region.center())
            if dist > course.robot.body_length:
                findings.append(
                    Finding(
                        "error",
                        f"obstacles[{i}]",
                        f"goal {obs.ident!r} is {dist:.2f} m from start, beyond "
                        f"the {course.robot.body_length:.2f} m body length",
                    )
                )
        if isinstance(obs, ApertureWall):
            hole_cm = obs.hole_side_m() * 100.0
            limit = SHRINK_RATIO * course.robot.inflated_diameter
            if hole_cm < limit:
                findings.append(
                    Finding(
                        "warning",
                        f"obstacles[{i}]",
                        f"aperture {obs.ident!r} hole {hole_cm:.1f} cm is below the "
                        f"shrink threshold {limit:.2f} cm; the body will buckle",
                    )
                )

    solids = [
        (i, Aabb(
            tuple(obs.pose.position[k] - 0.5 * obs.extents[k] for k in range(3)),
            tuple(obs.pose.position[k] + 0.5 * obs.extents[k] for k in range(3)),
        ))
        for i, obs in enumerate(env.obstacles)
        if isinstance(obs, Box)
    ]
    for a in range(len(solids)):
        for b in range(a + 1, len(solids)):
            ia, box_a = solids[a]
            ib, box_b = solids[b]
            if box_a.overlaps(box_b):
                findings.append(
                    Finding(
                        "warning",
                        f"obstacles[{ia}]",
                        f"box overlaps obstacles[{ib}]",
                    )
                )
    return findings


# ---------------------------------------------------------------------------
# run records and scoring

@dataclass(frozen=True, slots=True)
class RecordEntry:
    tick: int
    input: dict
    state_hash: str
    events: tuple


@dataclass(slots=True)
class RunRecord:
    course_name: str
    course_hash: str
    tick_hz: float
    entries: list[RecordEntry] = field(default_factory=list)
    wall_s: float = 0.0
    final_score: dict | None = None

    def header(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "kind": "vinesim-log",
            "course": self.course_name,
            "course_hash": self.course_hash,
            "tick_hz": self.tick_hz,
        }

    def sim_seconds(self) -> float:
        if not self.entries:
            return 0.0
        return (self.entries[-1].tick + 1) / self.tick_hz

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        for e in self.entries:
            lines.append(
                json.dumps(
                    {
                        "tick": e.tick,
                        "input": e.input,
                        "state_hash": e.state_hash,
                        "events": list(e.events),
                    },
                    sort_keys=True,
                )
            )
        lines.append(json.dumps({"type": "end", "wall_s": self.wall_s}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "RunRecord":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise CourseError("empty run record")
        head = json.loads(lines[0])
        if head.get("kind") != "vinesim-log" or head.get("format") != FORMAT_VERSION:
            raise CourseError("not a vinesim run record (bad header)")
        rec = cls(head["course"], head["course_hash"], float(head["tick_hz"]))
        for ln in lines[1:]:
            row = json.loads(ln)
            if row.get("type") == "end":
                rec.wall_s = float(row.get("wall_s", 0.0))
                continue
            rec.entries.append(
                RecordEntry(
                    int(row["tick"]),
                    row["input"],
                    str(row["state_hash"]),
                    tuple(tuple(e) if isinstance(e, list) else e for e in row["events"]),
                )
            )
        return rec


def _record_events(record: RunRecord):
    for e in record.entries:
        for ev in e.events:
            yield ev


def score_run(record: RunRecord, course: Course) -> dict:
    """Itemized score for a record produced on this course."""
    chash = course_hash(course)
    if record.course_hash != chash:
        raise CourseMismatchError(
            f"record was made on course {record.course_hash[:12]}..., "
            f"scoring against {chash[:12]}..."
        )
    reached: set[str] = set()
    toppled: set[str] = set()
    for ev in _record_events(record):
        kind = ev[0] if isinstance(ev, (list, tuple)) else ev.get("kind")
        ident = ev[3] if isinstance(ev, (list, tuple)) else ev.get("id", "")
        if kind == GOAL_REACHED:
            reached.add(ident)
        elif kind == CYLINDER_TOPPLED:
            toppled.add(ident)

    rubric = course.rubric
    obstacles = {}
    total = 0.0
    for ident, value in rubric.points.items():
        passed = ident in reached
        awarded = 0.0
        if passed:
            awarded = value * rubric.tip_only_multiplier
            if ident == rubric.cylinder_obstacle and toppled:
                awarded = 0.0
        obstacles[ident] = {
            "passed": passed,
            "tip_only": passed,
            "points": awarded,
            "max_points": value,
        }
        total += awarded

    bonus = 0.0
    ratio = course.aperture_ratio()
    if (
        rubric.aperture_bonus_max > 0.0
        and ratio is not None
        and rubric.aperture_goal in reached
    ):
        bonus = rubric.aperture_bonus_max * max(0.0, 1.0 - ratio)
        total += bonus

    sim_s = record.sim_seconds()
    within = sim_s <= rubric.time_limit_s
    if not within:
        total = 0.0
    return {
        "obstacles": obstacles,
        "aperture_bonus": bonus,
        "toppled_cylinders": sorted(toppled),
        "tip_only_multiplier": rubric.tip_only_multiplier,
        "sim_seconds": sim_s,
        "within_time_limit": within,
        "total": total,
    }
