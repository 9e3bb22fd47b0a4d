import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinesim.body import (
    Aabb,
    ApertureWall,
    BodyState,
    Box,
    Environment,
    Goal,
    UnstableCylinder,
    aperture_check,
    camera_pose,
    collide_slide,
    cylinder_interaction,
    retract,
    step,
)
from vinesim.errors import InvalidInputError
from vinesim.kinematics import ORIGIN_POSE, Pose3, Quaternion, arc_backbone_points
from vinesim.scenario import quat_from_z_to
from vinesim.steering import ActuatorLayout, PressureCommand, ZERO_PRESSURE

LAYOUT = ActuatorLayout(c=0.04, p_max=21.0)
START_X = Pose3((0.0, 0.0, 0.5), quat_from_z_to((1.0, 0.0, 0.0)))


def empty_env(size=50.0):
    return Aabb((-size, -size, -size), (size, size, size))


def floored_env(size=50.0):
    return Aabb((-size, -size, 0.0), (size, size, size))


def make_env(*obstacles, bounds=None):
    return Environment(tuple(obstacles), bounds or empty_env())


def grow(state, env, ticks, pressures=ZERO_PRESSURE, v=10.0, dt=0.02, start_tick=0):
    events = []
    for i in range(ticks):
        state, evs = step(state, env, pressures, v, dt, LAYOUT, start_tick + i)
        events.extend(evs)
    return state, events


# --- aperture_check --------------------------------------------------------

def test_aperture_examples():
    assert aperture_check(7.0, 4.0) is True
    assert aperture_check(7.0, 4.5) is True
    assert aperture_check(7.0, 3.9) is False


def test_aperture_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        aperture_check(0.0, 4.0)


@given(st.floats(1.0, 30.0), st.floats(0.1, 30.0), st.floats(0.0, 5.0))
@settings(max_examples=200)
def test_aperture_monotone(diameter, hole, wider):
    if aperture_check(diameter, hole):
        assert aperture_check(diameter, hole + wider)


# --- collide_slide ---------------------------------------------------------

def test_slide_head_on_motion_cancels():
    assert collide_slide((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)) == (0.0, 0.0, 0.0)


def test_slide_45_degrees_keeps_tangential():
    out = collide_slide((-1.0, 1.0, 0.0), (1.0, 0.0, 0.0))
    mag_in = math.sqrt(2.0)
    assert out == (0.0, 1.0, 0.0)
    assert math.sqrt(sum(v * v for v in out)) == pytest.approx(mag_in / math.sqrt(2))


def test_slide_parallel_motion_unchanged():
    assert collide_slide((0.0, 2.0, 1.0), (1.0, 0.0, 0.0)) == (0.0, 2.0, 1.0)


def test_slide_away_from_surface_unchanged():
    assert collide_slide((1.0, 0.5, 0.0), (1.0, 0.0, 0.0)) == (1.0, 0.5, 0.0)


@given(
    st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
    st.floats(0, 2 * math.pi),
    st.floats(-1, 1),
)
@settings(max_examples=300)
def test_slide_never_amplifies(motion, az, el):
    c = math.sqrt(1.0 - el * el)
    normal = (c * math.cos(az), c * math.sin(az), el)
    out = collide_slide(motion, normal)
    assert sum(v * v for v in out) <= sum(v * v for v in motion) + 1e-12


# --- cylinder_interaction ---------------------------------------------------

CYL = UnstableCylinder((1.0, 0.0), 0.0, 0.05, 0.4, 0.02, "c")


def test_cylinder_no_contact():
    assert cylinder_interaction(((0.0, 0.0, 0.2), (0.5, 0.0, 0.2)), CYL) == "none"


def test_cylinder_graze_slides():
    path = ((0.9, 0.0, 0.2), (0.96, 0.0, 0.2))  # 10 mm penetration < 20 mm
    assert cylinder_interaction(path, CYL) == "slide"


def test_cylinder_head_on_topples():
    path = ((0.9, 0.0, 0.2), (0.99, 0.0, 0.2))  # 40 mm penetration > 20 mm
    assert cylinder_interaction(path, CYL) == "topple"


def test_cylinder_above_is_clear():
    assert cylinder_interaction(((0.9, 0.0, 0.6), (1.0, 0.0, 0.6)), CYL) == "none"


# --- step: growth and eversion ---------------------------------------------

def test_straight_growth_tip_position():
    state = BodyState.at_pose(ORIGIN_POSE, 7.0)
    env = make_env()
    state, _ = grow(state, env, 4750)  # 10 cm/s * 0.02 s * 4750 = 9.5 m
    assert state.total_length == pytest.approx(9.5, abs=1e-9)
    tip = camera_pose(state).position
    assert tip[0] == pytest.approx(0.0, abs=1e-6)
    assert tip[1] == pytest.approx(0.0, abs=1e-6)
    assert tip[2] == pytest.approx(9.5, abs=1e-6)


def test_length_bookkeeping_every_tick():
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env()
    pressures = PressureCommand(5.0, 0.0, 0.0)
    for i in range(800):
        state, _ = step(state, env, pressures, 10.0, 0.02, LAYOUT, i)
        assert abs(state.laid_length + state.active.s - state.total_length) <= 1e-6


def test_chord_length_tracks_arc_length():
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env()
    state, _ = grow(state, env, 1500, pressures=PressureCommand(5.0, 0.0, 0.0))
    pts = state.polyline()
    chord = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
    assert abs(chord - state.laid_length) <= 1e-6


def test_eversion_laid_prefix_immutable():
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env()
    state, _ = grow(state, env, 900, pressures=PressureCommand(3.0, 0.0, 0.0))
    frozen = [(lp.s, lp.pose) for lp in state.laid]
    state, _ = grow(
        state, env, 900, pressures=PressureCommand(0.0, 4.0, 0.0), start_tick=900
    )
    assert len(state.laid) > len(frozen)
    for (s0, p0), lp in zip(frozen, state.laid):
        assert s0 == lp.s and p0 == lp.pose  # bitwise


def test_steering_without_growth_moves_only_active():
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env()
    state, _ = grow(state, env, 1000)
    laid_before = list(state.laid)
    length_before = state.total_length
    tip_before = camera_pose(state).position
    for i in range(100):
        state, _ = step(
            state, env, PressureCommand(8.0, 0.0, 0.0), 0.0, 0.02, LAYOUT, 1000 + i
        )
    assert state.laid == laid_before
    assert state.total_length == length_before
    assert math.dist(camera_pose(state).position, tip_before) > 0.05


def test_constant_pressure_growth_lays_circular_arc():
    # steady single-actuator pressure: the laid path converges to an arc of
    # the commanded curvature; endpoint error under 1% of deployed length
    state = BodyState.at_pose(ORIGIN_POSE, 7.0)
    env = make_env()
    pressures = PressureCommand(5.0, 0.0, 0.0)  # tip offset (0, 0.2) at c=0.04
    total = 5.0
    state, _ = grow(state, env, int(total / (0.1 * 0.02)), pressures=pressures)
    assert state.total_length == pytest.approx(total, abs=1e-6)

    from vinesim.kinematics import ArcParams, TipPosition, tip_to_arc

    ss = tip_to_arc(TipPosition(0.0, 0.2), 1.0)
    expected = arc_backbone_points(
        ORIGIN_POSE, ArcParams(ss.kappa, ss.phi, total), 2
    )[-1].position
    tip = camera_pose(state).position
    assert math.dist(tip, expected) <= 0.01 * total


def test_step_rejects_bad_dt():
    state = BodyState.at_pose(ORIGIN_POSE, 7.0)
    with pytest.raises(InvalidInputError):
        step(state, make_env(), ZERO_PRESSURE, 10.0, 0.0, LAYOUT)


def test_step_rejects_oversized_growth_step():
    state = BodyState.at_pose(ORIGIN_POSE, 7.0)
    with pytest.raises(InvalidInputError):
        step(state, make_env(), ZERO_PRESSURE, 100.0, 0.2, LAYOUT)


def test_step_deterministic():
    def run():
        state = BodyState.at_pose(START_X, 7.0)
        env = make_env()
        state, events = grow(state, env, 700, pressures=PressureCommand(2.0, 1.0, 0.0))
        return state, events

    a, ea = run()
    b, eb = run()
    assert a.laid == b.laid
    assert a.active == b.active
    assert a.total_length == b.total_length
    assert ea == eb


# --- step: obstacle rules ---------------------------------------------------

def wall_with_hole(hole_m):
    # full-height wall across the course; hole at robot height
    return ApertureWall(
        Pose3((2.0, 0.0, 2.0), Quaternion(0.5, 0.5, 0.5, 0.5)),
        (8.0, 4.0, 0.05),
        (hole_m, hole_m),
        (0.0, -1.5),
        "ap",
    )


def test_aperture_pass_through_large_hole():
    wall = wall_with_hole(0.05)  # 5 cm hole, 7 cm body: ratio 0.71
    goal = Goal(Aabb((2.1, -1.0, 0.0), (3.0, 1.0, 1.0)), "behind")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(wall, goal, bounds=floored_env())
    state, events = grow(state, env, 1500)
    kinds = {e.kind for e in events}
    assert "behind" in state.reached
    assert "ApertureBuckle" not in kinds


def test_aperture_buckle_blocks_small_hole():
    wall = wall_with_hole(0.039)  # 3.9 cm hole, 7 cm body: below 0.57 ratio
    goal = Goal(Aabb((2.1, -1.0, 0.0), (3.0, 1.0, 1.0)), "behind")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(wall, goal, bounds=floored_env())
    state, events = grow(state, env, 1500)
    kinds = {e.kind for e in events}
    assert "ApertureBuckle" in kinds
    assert "behind" not in state.reached
    # the tip never crosses the wall plane
    assert camera_pose(state).position[0] < 2.0


def test_cylinder_gentle_contact_slides_not_topples():
    cyl = UnstableCylinder((2.0, 0.04), 0.0, 0.05, 1.2, 0.02, "c1")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(cyl, bounds=floored_env())
    state, events = grow(state, env, 1600)
    kinds = [e.kind for e in events]
    assert "CylinderToppled" not in kinds
    assert "ContactSlide" in kinds
    assert "c1" not in state.toppled
    # robot got past the cylinder by sliding around it
    assert camera_pose(state).position[0] > 2.2


def test_cylinder_hard_steering_topples():
    # swing the tip sideways into the cylinder: the commanded jump exceeds
    # the topple tolerance within one tick
    cyl = UnstableCylinder((1.43, 0.31), 0.0, 0.03, 1.2, 0.008, "c1")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(cyl, bounds=floored_env())
    state, _ = grow(state, env, 750)  # 1.5 m straight, tip beside the cylinder
    events = []
    for i in range(60):
        state, evs = step(
            state, env, PressureCommand(12.0, 0.0, 0.0), 0.0, 0.02, LAYOUT, 750 + i
        )
        events.extend(evs)
    kinds = [e.kind for e in events]
    assert "CylinderToppled" in kinds
    assert "c1" in state.toppled
    idents = [e.ident for e in events if e.kind == "CylinderToppled"]
    assert idents == ["c1"]


def test_toppled_cylinder_stops_blocking():
    cyl = UnstableCylinder((1.43, 0.31), 0.0, 0.03, 1.2, 0.008, "c1")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(cyl, bounds=floored_env())
    state, _ = grow(state, env, 750)
    for i in range(60):
        state, _ = step(
            state, env, PressureCommand(12.0, 0.0, 0.0), 0.0, 0.02, LAYOUT, 750 + i
        )
    assert "c1" in state.toppled
    # tip can now occupy the cylinder's footprint
    tip = camera_pose(state).position
    assert math.dist((tip[0], tip[1]), (1.43, 0.31)) < 0.4


def test_wall_contact_emits_slide_event():
    wall = Box(Pose3((2.0, 0.0, 1.0), Quaternion(1.0, 0.0, 0.0, 0.0)), (0.3, 6.0, 2.0), "w")
    state = BodyState.at_pose(START_X, 7.0)
    env = make_env(wall, bounds=floored_env())
    state, events = grow(state, env, 1200)
    assert any(e.kind == "ContactSlide" for e in events)
    # blocked: the tip cannot pass through the slab
    assert camera_pose(state).position[0] < 1.9


# --- retract ----------------------------------------------------------------

def test_retract_straight_shortens_exactly():
    state = BodyState.at_pose(START_X, 7.0)
    state, _ = grow(state, make_env(), 1500)  # 3 m
    state, events = retract(state, 0.5)
    assert events == []
    assert state.total_length == pytest.approx(2.5, abs=1e-9)
    assert abs(state.laid_length + state.active.s - state.total_length) <= 1e-6


def test_retract_full_length():
    state = BodyState.at_pose(START_X, 7.0)
    state, _ = grow(state, make_env(), 500)  # 1 m
    state, _ = retract(state, 5.0)  # clamp to everything
    assert state.total_length == 0.0
    assert state.active.s == 0.0


def test_retract_buckles_on_laid_turn():
    state = BodyState.at_pose(START_X, 7.0)
    # lay ~3.5 m with a hard bend: frozen curvature far above the threshold
    state, _ = grow(state, make_env(), 1750, pressures=PressureCommand(0.0, 10.0, 0.0))
    length = state.total_length
    state, events = retract(state, 0.3)
    assert [e.kind for e in events] == ["RetractionBuckle"]
    assert state.total_length == length


def test_retract_rejects_nonpositive():
    state = BodyState.at_pose(START_X, 7.0)
    with pytest.raises(InvalidInputError):
        retract(state, 0.0)


# --- camera_pose ------------------------------------------------------------

def test_camera_pose_zero_length_is_base():
    state = BodyState.at_pose(START_X, 7.0)
    assert camera_pose(state) == START_X


def test_camera_pose_straight_two_meters():
    state = BodyState.at_pose(ORIGIN_POSE, 7.0)
    state, _ = grow(state, make_env(), 1000)
    pose = camera_pose(state)
    assert pose.position[2] == pytest.approx(2.0, abs=1e-6)
    assert pose.orientation == ORIGIN_POSE.orientation


def test_camera_pose_matches_backbone_endpoint():
    state = BodyState.at_pose(START_X, 7.0)
    state, _ = grow(state, make_env(), 900, pressures=PressureCommand(6.0, 0.0, 0.0))
    end = arc_backbone_points(state.base, state.active, 9)[-1]
    cam = camera_pose(state)
    assert math.dist(end.position, cam.position) < 1e-9
