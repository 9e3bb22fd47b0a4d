import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinesim.errors import ConfigurationError, InvalidInputError
from vinesim.growth import (
    GROWTH,
    RETRACTION,
    GrowthConfig,
    GrowthState,
    backdrive_guard,
    estop,
    growth_rate,
    pi_motor,
    pot_to_pressure,
    pot_to_speed,
)


# --- pot scalings ----------------------------------------------------------

def test_pressure_pot_zero_offset():
    cfg = GrowthConfig()
    assert pot_to_pressure(cfg.r_p0, cfg) == 0.0


def test_pressure_pot_competition_maximum():
    cfg = GrowthConfig(c_p=0.05)
    assert pot_to_pressure(cfg.r_p0 + 280.0, cfg) == pytest.approx(14.0, abs=1e-12)


def test_pressure_pot_clamps_below_zero():
    cfg = GrowthConfig()
    assert pot_to_pressure(cfg.r_p0 - 50.0, cfg) == 0.0


def test_pressure_pot_clamps_at_max():
    cfg = GrowthConfig(c_p=1.0, p_body_max=14.0)
    assert pot_to_pressure(cfg.r_p0 + 500.0, cfg) == 14.0


def test_speed_pot_zero_offset():
    cfg = GrowthConfig()
    assert pot_to_speed(cfg.r_m0, GROWTH, cfg) == 0.0


def test_speed_pot_growth_sign():
    cfg = GrowthConfig(c_m=0.02)
    assert pot_to_speed(cfg.r_m0 + 100.0, GROWTH, cfg) == pytest.approx(-2.0)
    assert pot_to_speed(cfg.r_m0 + 100.0, RETRACTION, cfg) == pytest.approx(2.0)


def test_speed_pot_rejects_bad_direction():
    with pytest.raises(InvalidInputError):
        pot_to_speed(0.0, 0, GrowthConfig())


# --- PI loop ---------------------------------------------------------------

def test_pi_zero_error_zero_output():
    cfg = GrowthConfig()
    u, _ = pi_motor(1.0, 1.0, GrowthState(), 0.02, cfg)
    assert u == 0.0


def test_pi_pure_proportional():
    cfg = GrowthConfig(k_p=1.0, k_i=0.0)
    u, _ = pi_motor(0.5, 0.0, GrowthState(), 0.02, cfg)
    assert u == 0.5


def test_pi_integral_accumulation():
    cfg = GrowthConfig(k_p=0.0, k_i=2.0)
    state = GrowthState()
    dt = 0.01
    acc = 0.0
    for _ in range(100):
        u, state = pi_motor(0.1, 0.0, state, dt, cfg)
        acc += cfg.k_i * 0.1 * dt
    assert state.integ == pytest.approx(0.2, abs=1e-9)
    # integral matches the independently accumulated sum exactly
    assert state.integ == pytest.approx(acc, abs=1e-12)
    assert u == state.integ


def test_pi_proportional_only_matches_kp_error():
    cfg = GrowthConfig(k_p=3.0, k_i=0.0)
    for err in (-2.0, -0.1, 0.0, 0.7):
        u, _ = pi_motor(err, 0.0, GrowthState(), 0.02, cfg)
        assert u == cfg.k_p * err


def test_pi_windup_clamp():
    cfg = GrowthConfig(k_p=1.0, k_i=10.0, windup_limit=2.0)
    state = GrowthState()
    for _ in range(10000):
        _, state = pi_motor(5.0, 0.0, state, 0.02, cfg)
    assert abs(state.integ) <= cfg.windup_limit


def test_pi_rejects_bad_dt():
    with pytest.raises(InvalidInputError):
        pi_motor(0.0, 0.0, GrowthState(), 0.0, GrowthConfig())


# --- backdrive guard -------------------------------------------------------

def test_guard_passes_retraction_voltage():
    cfg = GrowthConfig()
    assert backdrive_guard(3.0, cfg) == 3.0


def test_guard_replaces_growth_voltage():
    cfg = GrowthConfig(coulomb_v=0.5)
    assert backdrive_guard(-8.0, cfg) == -0.5
    assert backdrive_guard(-0.01, cfg) == -0.5


def test_guard_zero_voltage_untouched():
    assert backdrive_guard(0.0, GrowthConfig()) == 0.0


# --- growth rate -----------------------------------------------------------

def test_no_growth_below_threshold():
    cfg = GrowthConfig(p_grow=5.0)
    assert growth_rate(4.9, 100.0, cfg) == 0.0
    assert growth_rate(0.0, 100.0, cfg) == 0.0


def test_flow_limited_speed_archaeology_geometry():
    cfg = GrowthConfig(
        flow_max=470.0, body_radius=3.75, v_max=1000.0, p_body_max=21.0,
        pressure_curve="step",
    )
    ceiling = cfg.flow_ceiling()
    assert ceiling == pytest.approx(470.0 / (math.pi * 3.75**2), abs=1e-12)
    assert round(ceiling, 2) == 10.64
    assert growth_rate(21.0, 1e9, cfg) == pytest.approx(ceiling, abs=1e-12)


def test_v_max_clamp_wins_over_flow():
    cfg = GrowthConfig(
        flow_max=470.0, body_radius=3.75, v_max=10.0, p_body_max=21.0,
        pressure_curve="step",
    )
    assert growth_rate(21.0, 1e9, cfg) == 10.0


def test_motor_allowance_limits_growth():
    cfg = GrowthConfig(pressure_curve="step")
    assert growth_rate(cfg.p_body_max, 2.0, cfg) == 2.0


def test_linear_pressure_curve():
    cfg = GrowthConfig(p_grow=5.0, p_body_max=14.0, v_max=10.0)
    assert growth_rate(5.0, 1e9, cfg) == 0.0
    assert growth_rate(14.0, 1e9, cfg) == pytest.approx(10.0, abs=1e-12)
    mid = growth_rate(9.5, 1e9, cfg)
    assert mid == pytest.approx(5.0, abs=1e-12)


def test_growth_rate_rejects_negative_allowance():
    with pytest.raises(InvalidInputError):
        growth_rate(10.0, -1.0, GrowthConfig())


@given(st.floats(0, 25), st.floats(0, 50))
@settings(max_examples=300)
def test_flow_ceiling_never_exceeded(p, allowance):
    cfg = GrowthConfig(p_body_max=25.0, p_grow=3.0)
    v = growth_rate(p, allowance, cfg)
    assert v <= cfg.flow_ceiling() + 1e-12
    assert v <= cfg.v_max + 1e-12
    assert v >= 0.0
    if p < cfg.p_grow:
        assert v == 0.0


@given(st.floats(3, 25), st.floats(3, 25))
@settings(max_examples=200)
def test_pressure_curve_monotone(pa, pb):
    cfg = GrowthConfig(p_body_max=25.0, p_grow=3.0, v_max=8.0)
    va = growth_rate(pa, 1e9, cfg)
    vb = growth_rate(pb, 1e9, cfg)
    if pa <= pb:
        assert va <= vb + 1e-12


# --- estop -----------------------------------------------------------------

def test_estop_zeroes_everything():
    state = GrowthState(p_body=14.0, omega=2.0, omega_d=2.0, u=5.0, integ=1.0)
    out = estop(state)
    assert out.p_body == 0.0 and out.u == 0.0 and out.integ == 0.0


def test_estop_idempotent():
    state = GrowthState(p_body=14.0, u=5.0, integ=1.0)
    once = estop(state)
    assert estop(once) == once


def test_config_validation():
    with pytest.raises(ConfigurationError):
        GrowthConfig(p_grow=20.0, p_body_max=14.0)
    with pytest.raises(ConfigurationError):
        GrowthConfig(body_radius=-1.0)
    with pytest.raises(ConfigurationError):
        GrowthConfig(pressure_curve="cubic")
