"""Pressure allocation for the three series pouch motors.

The tip displacement model is a superposition: each actuator pulls the tip
toward its placement angle with displacement proportional to pressure. The
inverse is underdetermined (three actuators, two degrees of freedom); it is
resolved by requiring every pressure nonnegative and at least one of them
at (numerical) zero, which avoids co-contraction. Targets that would need
more than p_max in any actuator are scaled radially to the feasible
boundary and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from vinesim import kernels
from vinesim.errors import ConfigurationError, InvalidInputError
from vinesim.kinematics import TipPosition

# "at least one pressure within a small tolerance of zero", in kPa
EPS_NULL = 1e-6


@dataclass(frozen=True, slots=True)
class ActuatorLayout:
    """Placement angles (rad, CCW from +x), gain c (m/kPa), pressure limit (kPa)."""

    psi1: float = math.pi / 2.0
    psi2: float = 7.0 * math.pi / 6.0
    psi3: float = 11.0 * math.pi / 6.0
    c: float = 0.01
    p_max: float = 14.0

    def __post_init__(self):
        for name, v in (("psi1", self.psi1), ("psi2", self.psi2), ("psi3", self.psi3)):
            if not math.isfinite(v):
                raise ConfigurationError(f"{name} must be finite")
        if not self.c > 0.0:
            raise ConfigurationError(f"gain c must be > 0, got {self.c}")
        if not self.p_max > 0.0:
            raise ConfigurationError(f"p_max must be > 0, got {self.p_max}")
        for a, b, pair in (
            (self.psi1, self.psi2, "psi1/psi2"),
            (self.psi2, self.psi3, "psi2/psi3"),
            (self.psi1, self.psi3, "psi1/psi3"),
        ):
            if abs(math.sin(a - b)) < 1e-9:
                raise ConfigurationError(
                    f"actuator angles {pair} are collinear (sin of difference ~ 0)"
                )

    def angles(self) -> tuple[float, float, float]:
        return (self.psi1, self.psi2, self.psi3)


@dataclass(frozen=True, slots=True)
class PressureCommand:
    """Commanded pouch-motor pressures in kPa."""

    p1: float
    p2: float
    p3: float
    saturated: bool = field(default=False, compare=False)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    def max(self) -> float:
        return max(self.p1, self.p2, self.p3)

    def min(self) -> float:
        return min(self.p1, self.p2, self.p3)


ZERO_PRESSURE = PressureCommand(0.0, 0.0, 0.0)


def superpose_tip(p: PressureCommand, layout: ActuatorLayout) -> TipPosition:
    """Tip displacement produced by a pressure command."""
    x, y = kernels.superpose_tip(
        p.p1, p.p2, p.p3, layout.psi1, layout.psi2, layout.psi3, layout.c
    )
    return TipPosition(x, y)


def null_direction(layout: ActuatorLayout) -> tuple[float, float, float]:
    """Pressure direction producing zero tip displacement."""
    return (
        math.sin(layout.psi3 - layout.psi2),
        math.sin(layout.psi1 - layout.psi3),
        math.sin(layout.psi2 - layout.psi1),
    )


def _solve_candidates(tip: TipPosition, layout: ActuatorLayout) -> PressureCommand:
    """Fallback for layouts whose null direction has mixed signs.

    The feasible set along the solution line is an interval whose endpoints
    zero one component; enumerate those endpoints and take the smallest
    feasible p3 deterministically.
    """
    b1, b2 = kernels.pressures_at(
        tip.x, tip.y, layout.psi1, layout.psi2, layout.psi3, layout.c, 0.0
    )
    n1, n2, n3 = null_direction(layout)
    r1, r2 = n1 / n3, n2 / n3
    candidates = [0.0]
    if r1 != 0.0:
        candidates.append(-b1 / r1)
    if r2 != 0.0:
        candidates.append(-b2 / r2)
    feasible = []
    for a in candidates:
        trio = (b1 + a * r1, b2 + a * r2, a)
        if min(trio) >= -1e-9:
            feasible.append(trio)
    if not feasible:
        raise ConfigurationError(
            "tip direction not reachable with nonnegative pressures on this layout"
        )
    p1, p2, p3 = min(feasible, key=lambda t: t[2])
    return PressureCommand(max(p1, 0.0), max(p2, 0.0), max(p3, 0.0))


def solve_pressures(tip: TipPosition, layout: ActuatorLayout) -> PressureCommand:
    """Pressures reproducing `tip`, all nonnegative, min component ~0.

    Uses bisection on p3 (the redundancy coordinate); feasibility
    min(p1, p2, p3) is monotone in p3 for angle sets that span the circle.
    Targets beyond the p_max polytope are scaled radially onto its boundary
    and returned with saturated=True.
    """
    if not (math.isfinite(tip.x) and math.isfinite(tip.y)):
        raise InvalidInputError("tip components must be finite")
    if tip.x == 0.0 and tip.y == 0.0:
        return ZERO_PRESSURE
    p1, p2, p3, ok = kernels.solve_pressures_bisect(
        tip.x, tip.y, layout.psi1, layout.psi2, layout.psi3, layout.c, 200
    )
    if ok == 0.0:
        cmd = _solve_candidates(tip, layout)
        p1, p2, p3 = cmd.p1, cmd.p2, cmd.p3
    top = max(p1, p2, p3)
    if top > layout.p_max:
        # preserve the commanded direction: shrink radially to the boundary
        f = layout.p_max / top
        return PressureCommand(p1 * f, p2 * f, p3 * f, saturated=True)
    return PressureCommand(p1, p2, p3)


def saturate(p: PressureCommand, layout: ActuatorLayout) -> PressureCommand:
    """Clamp each component into [0, p_max]; flag if anything changed."""
    vals = []
    clamped = False
    for v in p.as_tuple():
        w = min(max(v, 0.0), layout.p_max)
        clamped = clamped or (w != v)
        vals.append(w)
    return PressureCommand(vals[0], vals[1], vals[2], saturated=p.saturated or clamped)
