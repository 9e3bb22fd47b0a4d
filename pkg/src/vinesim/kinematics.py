"""Constant-curvature geometry: quaternion -> bend, bend -> tip, and back.

A steerable segment is idealized as a circular arc of curvature kappa
bending in the plane rotated phi about the growth axis. The planar tip
offset convention is (m*cos(phi), -m*sin(phi)) with m = (1-cos(kappa*s))/kappa,
matching the quaternion decomposition in quat_to_arc, so the full pipeline
quaternion -> (kappa, phi) -> (x, y) -> pressures is sign-consistent.

The workspace is restricted to kappa*s < pi (the quaternion decomposition
cannot represent more than a half-turn). The planar offset magnitude is
injective in kappa only up to kappa*s = ARC_T_PEAK (~2.3311, where
(1-cos t)/t peaks); tip_to_arc always returns the smallest curvature
reaching the requested offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from vinesim import kernels
from vinesim.errors import InvalidInputError, OutOfWorkspaceError

# kappa*s is kept strictly below pi by this margin
_BEND_LIMIT = math.pi - 1e-9


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"{name}: non-finite component {v!r}")


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Unit quaternion, scalar-first (w, x, y, z)."""

    w: float
    x: float
    y: float
    z: float

    def normalized(self) -> "Quaternion":
        _require_finite("quaternion", self.w, self.x, self.y, self.z)
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if n2 < 1e-12:
            raise InvalidInputError("quaternion norm too small to normalize")
        # already unit (to rounding): keep the exact bits so repeated
        # normalization is a fixed point
        if abs(n2 - 1.0) < 1e-12:
            return self
        inv = 1.0 / math.sqrt(n2)
        return Quaternion(self.w * inv, self.x * inv, self.y * inv, self.z * inv)

    def norm_error(self) -> float:
        return abs(
            self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z - 1.0
        )

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(
            *kernels.quat_mul(
                self.w, self.x, self.y, self.z, other.w, other.x, other.y, other.z
            )
        )

    def rotate(self, v):
        return kernels.quat_rot(self.w, self.x, self.y, self.z, v[0], v[1], v[2])

    def rotate_inv(self, v):
        return kernels.quat_rot_inv(self.w, self.x, self.y, self.z, v[0], v[1], v[2])


IDENTITY_QUAT = Quaternion(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class ArcParams:
    """Circular-arc segment: curvature (1/m), bend-plane angle (rad), length (m).

    kappa = 0 denotes straight, with phi fixed at 0 by convention. s = 0 is
    allowed so a zero-length (not yet grown) segment is representable.
    """

    kappa: float
    phi: float
    s: float

    def __post_init__(self):
        _require_finite("arc", self.kappa, self.phi, self.s)
        if self.kappa < 0.0:
            raise InvalidInputError(f"curvature must be >= 0, got {self.kappa}")
        if self.s < 0.0:
            raise InvalidInputError(f"arc length must be >= 0, got {self.s}")
        if self.kappa * self.s >= math.pi:
            raise OutOfWorkspaceError(
                f"bend angle kappa*s = {self.kappa * self.s:.6f} exceeds workspace limit pi"
            )
        if not -math.pi <= self.phi < math.pi:
            raise InvalidInputError(f"phi must lie in [-pi, pi), got {self.phi}")


@dataclass(frozen=True, slots=True)
class TipPosition:
    """Planar tip offset (m) in the two non-growth degrees of freedom."""

    x: float
    y: float

    def magnitude(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y)


@dataclass(frozen=True, slots=True)
class Pose3:
    """Rigid pose: position (m) plus orientation, local +z along growth."""

    position: tuple[float, float, float]
    orientation: Quaternion

    def compose(self, local: "Pose3") -> "Pose3":
        """This pose followed by a transform expressed in its own frame."""
        dx, dy, dz = self.orientation.rotate(local.position)
        px, py, pz = self.position
        return Pose3(
            (px + dx, py + dy, pz + dz), self.orientation * local.orientation
        )

    def to_local(self, point):
        """World point expressed in this pose's frame."""
        px, py, pz = self.position
        return self.orientation.rotate_inv(
            (point[0] - px, point[1] - py, point[2] - pz)
        )


ORIGIN_POSE = Pose3((0.0, 0.0, 0.0), IDENTITY_QUAT)


def quat_to_arc(q: Quaternion, s: float) -> ArcParams:
    """Bend parameters encoded by a joystick-tip orientation, for length s."""
    if s <= 0.0 or not math.isfinite(s):
        raise InvalidInputError(f"arc length must be positive, got {s}")
    qn = q.normalized()
    kappa, phi = kernels.quat_to_arc(qn.w, qn.x, qn.y, qn.z, s)
    # a fully folded joystick (kappa*s = pi) is clamped just inside the workspace
    if kappa * s >= math.pi:
        kappa = _BEND_LIMIT / s
    return ArcParams(kappa, phi, s)


def arc_to_quat(arc: ArcParams) -> Quaternion:
    """Joystick orientation that quat_to_arc maps back to this arc."""
    return Quaternion(*kernels.arc_to_quat(arc.kappa, arc.phi, arc.s))


def arc_to_tip(arc: ArcParams) -> TipPosition:
    """Planar tip offset of an arc relative to its base."""
    return TipPosition(*kernels.arc_to_tip(arc.kappa, arc.phi, arc.s))


def tip_to_arc(tip: TipPosition, s: float) -> ArcParams:
    """Smallest-curvature arc of length s whose planar tip offset is `tip`."""
    if s <= 0.0 or not math.isfinite(s):
        raise InvalidInputError(f"arc length must be positive, got {s}")
    _require_finite("tip", tip.x, tip.y)
    try:
        kappa, phi = kernels.tip_to_arc(tip.x, tip.y, s)
    except ValueError as exc:
        raise OutOfWorkspaceError(
            f"tip offset {tip.magnitude():.6f} m unreachable with arc length {s} m"
        ) from exc
    return ArcParams(kappa, phi, s)


def clamp_tip(tip: TipPosition, s: float, margin: float = 1e-9) -> tuple[TipPosition, bool]:
    """Scale a tip offset radially into the reachable disk for arc length s.

    Returns the (possibly unchanged) offset and whether clamping occurred.
    """
    limit = kernels.ARC_REACH * s * (1.0 - margin)
    r = tip.magnitude()
    if r <= limit or r == 0.0:
        return tip, False
    f = limit / r
    return TipPosition(tip.x * f, tip.y * f), True


def arc_pose_at(arc: ArcParams, ell: float) -> Pose3:
    """Pose at arc length ell along the arc, in the arc's base frame."""
    px, py, pz, qw, qx, qy, qz = kernels.arc_pose_at(arc.kappa, arc.phi, ell)
    return Pose3((px, py, pz), Quaternion(qw, qx, qy, qz))


def arc_backbone_points(base: Pose3, arc: ArcParams, n: int) -> list[Pose3]:
    """n poses evenly spaced in arc length from base to the arc tip."""
    if n < 2:
        raise InvalidInputError(f"need at least 2 backbone points, got {n}")
    step = arc.s / (n - 1)
    points = [base]
    for i in range(1, n):
        points.append(base.compose(arc_pose_at(arc, i * step)))
    return points
