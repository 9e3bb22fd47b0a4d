"""Growth control: pot scalings, PI motor loop, backdrive guard, rate model.

Growth is a balance between main-body pressure (the only thing that can
extend the robot) and the spool motor (the only thing that can restrain or
retract it). Sign convention for the motor: negative speeds/voltages
unspool material (growth direction, d = -1), positive retract (d = +1).

The composite growth rate is the minimum of four effects: a monotone
pressure-to-speed curve above the eversion threshold, the compressor flow
ceiling Q/(pi r^2), the unspool rate the motor allows, and the hard cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from vinesim.errors import ConfigurationError, InvalidInputError

GROWTH = -1
RETRACTION = 1


@dataclass(frozen=True, slots=True)
class GrowthConfig:
    c_p: float = 14.0 / 1023.0        # kPa per pot count
    r_p0: float = 0.0                 # pot count at zero pressure
    c_m: float = 2.0 / 1023.0         # rad/s per pot count
    r_m0: float = 0.0                 # pot count at zero speed
    k_p: float = 1.0                  # V*s/rad
    k_i: float = 2.0                  # V/rad
    windup_limit: float = 12.0        # V, integral clamp
    p_grow: float = 5.0               # kPa, minimum pressure for eversion
    p_body_max: float = 14.0          # kPa
    flow_max: float = 470.0           # cm^3/s, compressor ceiling
    body_radius: float = 2.5          # cm, main tube radius
    v_max: float = 10.0               # cm/s
    coulomb_v: float = 0.5            # V, friction-cancel magnitude
    spool_radius: float = 5.0         # cm
    pot_range: float = 1023.0         # counts, ADC full scale
    pressure_curve: str = "linear"    # "linear" or "step"
    guard_enabled: bool = True        # disable only to demonstrate slack

    def __post_init__(self):
        positives = {
            "c_p": self.c_p,
            "c_m": self.c_m,
            "windup_limit": self.windup_limit,
            "p_grow": self.p_grow,
            "p_body_max": self.p_body_max,
            "flow_max": self.flow_max,
            "body_radius": self.body_radius,
            "v_max": self.v_max,
            "coulomb_v": self.coulomb_v,
            "spool_radius": self.spool_radius,
            "pot_range": self.pot_range,
        }
        for name, v in positives.items():
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigurationError(f"{name} must be > 0, got {v}")
        for name, v in (("k_p", self.k_p), ("k_i", self.k_i)):
            if not (math.isfinite(v) and v >= 0.0):
                raise ConfigurationError(f"{name} must be >= 0, got {v}")
        if self.p_grow >= self.p_body_max:
            raise ConfigurationError(
                f"p_grow {self.p_grow} must be below p_body_max {self.p_body_max}"
            )
        if self.pressure_curve not in ("linear", "step"):
            raise ConfigurationError(
                f"unknown pressure curve {self.pressure_curve!r}"
            )

    def flow_ceiling(self) -> float:
        """Max growth speed (cm/s) the compressor can sustain."""
        return self.flow_max / (math.pi * self.body_radius * self.body_radius)


@dataclass(frozen=True, slots=True)
class GrowthState:
    p_body: float = 0.0       # kPa
    omega: float = 0.0        # rad/s, measured (model: plant follows command)
    omega_d: float = 0.0      # rad/s, desired
    u: float = 0.0            # V, motor voltage after the guard
    integ: float = 0.0        # V, integral accumulator (k_i already applied)
    length: float = 0.0       # m, deployed (mirrors the body model)
    tension: bool = True      # string/body taut


def pot_to_pressure(r_p: float, cfg: GrowthConfig) -> float:
    """Main-body pressure commanded by the pressure pot, clamped to [0, max]."""
    p = cfg.c_p * (r_p - cfg.r_p0)
    if p < 0.0:
        return 0.0
    if p > cfg.p_body_max:
        return cfg.p_body_max
    return p


def pot_to_speed(r_m: float, direction: int, cfg: GrowthConfig) -> float:
    """Desired motor speed; direction is GROWTH (-1) or RETRACTION (+1)."""
    if direction not in (GROWTH, RETRACTION):
        raise InvalidInputError(f"direction must be -1 or +1, got {direction}")
    return direction * cfg.c_m * (r_m - cfg.r_m0)


def pi_motor(
    omega_d: float, omega: float, state: GrowthState, dt: float, cfg: GrowthConfig
) -> tuple[float, GrowthState]:
    """One PI update; returns the raw voltage and the state with new integral."""
    if dt <= 0.0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    err = omega_d - omega
    integ = state.integ + cfg.k_i * err * dt
    if integ > cfg.windup_limit:
        integ = cfg.windup_limit
    elif integ < -cfg.windup_limit:
        integ = -cfg.windup_limit
    u = cfg.k_p * err + integ
    return u, replace(state, integ=integ)


def backdrive_guard(u: float, cfg: GrowthConfig) -> float:
    """Replace growth-direction torque with the friction-cancel voltage.

    The motor must never actively unspool faster than pressure-driven
    growth pulls material out; with friction cancelled it freewheels and
    is backdriven by the body instead.
    """
    if not cfg.guard_enabled:
        return u
    if u < 0.0:
        return -cfg.coulomb_v
    return u


def growth_rate(p_body: float, motor_allowance: float, cfg: GrowthConfig) -> float:
    """Composite growth speed (cm/s) from pressure, flow, and motor limits."""
    if not (math.isfinite(p_body) and math.isfinite(motor_allowance)):
        raise InvalidInputError("growth_rate inputs must be finite")
    if motor_allowance < 0.0:
        raise InvalidInputError("motor allowance must be nonnegative")
    if p_body < cfg.p_grow:
        return 0.0
    if cfg.pressure_curve == "step":
        v_pressure = cfg.v_max
    else:
        v_pressure = (
            cfg.v_max * (p_body - cfg.p_grow) / (cfg.p_body_max - cfg.p_grow)
        )
    return min(v_pressure, cfg.flow_ceiling(), motor_allowance, cfg.v_max)


def estop(state: GrowthState) -> GrowthState:
    """Vent the main body and de-energize the motor. Idempotent."""
    return replace(state, p_body=0.0, u=0.0, integ=0.0, omega_d=0.0, omega=0.0)
