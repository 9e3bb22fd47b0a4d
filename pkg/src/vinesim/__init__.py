"""Teleoperated everting vine robot simulator."""

from vinesim.body import (
    Environment,
    Event,
    aperture_check,
    camera_pose,
    collide_slide,
    cylinder_interaction,
    retract,
    step,
)
from vinesim.growth import GrowthConfig, GrowthState, growth_rate
from vinesim.kinematics import (
    ArcParams,
    Pose3,
    Quaternion,
    TipPosition,
    arc_backbone_points,
    arc_to_tip,
    quat_to_arc,
    tip_to_arc,
)
from vinesim.scenario import (
    Course,
    RunRecord,
    load_builtin,
    load_course,
    score_run,
    serialize_course,
    validate_course,
)
from vinesim.session import Session, Snapshot, TeleopInput, replay, start_session
from vinesim.steering import (
    ActuatorLayout,
    PressureCommand,
    saturate,
    solve_pressures,
    superpose_tip,
)

__version__ = "0.1.0"

__all__ = [
    "ActuatorLayout",
    "ArcParams",
    "Course",
    "Environment",
    "Event",
    "GrowthConfig",
    "GrowthState",
    "Pose3",
    "PressureCommand",
    "Quaternion",
    "RunRecord",
    "Session",
    "Snapshot",
    "TeleopInput",
    "TipPosition",
    "aperture_check",
    "arc_backbone_points",
    "arc_to_tip",
    "camera_pose",
    "collide_slide",
    "cylinder_interaction",
    "growth_rate",
    "load_builtin",
    "load_course",
    "quat_to_arc",
    "replay",
    "retract",
    "saturate",
    "score_run",
    "serialize_course",
    "solve_pressures",
    "start_session",
    "step",
    "superpose_tip",
    "tip_to_arc",
    "validate_course",
]
