import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rollout import approach_world, run_approach
from agentshop.costmap import Cell, OccupancyGrid, build_costmap
from agentshop.sim import sense_range, step, world_from_config
from agentshop.skills import (
    EnterStoreState,
    GraspLoopState,
    ManeuverParams,
    Mode,
    PickupState,
    PostGraspState,
    PreEnterState,
    Result,
    TagApproachParams,
    TagApproachState,
    WallAvoiderParams,
    WallAvoiderState,
    enter_store_step,
    grasp_loop_step,
    pickup_step,
    post_grasp_maneuver,
    pre_enter_step,
    tag_approach_step,
    wall_avoider_step,
)
from agentshop.world_model import STOP, Direction, Pose2D, TagDetection, VelocityCmd, normalize_angle

DT = 0.05
WA = WallAvoiderParams()


def blocked_at(d: float) -> OccupancyGrid:
    g = OccupancyGrid.empty(fill=Cell.FREE)
    cells = g.cells.copy()
    for lat in np.arange(-0.3, 0.31, 0.05):
        cells[g.index_of(d, lat)] = Cell.OCCUPIED
    return g.with_cells(cells)


CLEAR = OccupancyGrid.empty(fill=Cell.FREE)


# --- wall avoider ----------------------------------------------------------


def test_forward_clear_drives_forward():
    s, cmd, label = wall_avoider_step(WallAvoiderState(), CLEAR, True, WA, 0.0)
    assert cmd == VelocityCmd(WA.v_f, 0, 0) and s.mode is Mode.FORWARD and label == "FORWARD"


def test_forward_blocked_enters_turn90():
    s, cmd, label = wall_avoider_step(WallAvoiderState(), blocked_at(WA.d_safe / 2), True, WA, 3.0)
    assert s.mode is Mode.TURN90 and s.turn_start == 3.0 and cmd.vx == 0.0 and label == "TURN90"


def test_forward_at_exactly_d_safe_turns():
    grid = blocked_at(WA.d_safe + 0.01)  # cell centre lands on d_safe + res/2 rounding
    d_cell = grid.centers()[0][grid.cells == Cell.OCCUPIED].min()
    s, _, _ = wall_avoider_step(WallAvoiderState(), grid, True, WA, 0.0)
    assert (s.mode is Mode.TURN90) == (d_cell <= WA.d_safe)


@pytest.mark.parametrize("mode", list(Mode))
def test_gate_off_stops_once_and_resets(mode):
    s = WallAvoiderState(mode=mode, turn_start=0.0 if mode is not Mode.FORWARD else None, gated=True)
    s, cmd, label = wall_avoider_step(s, None, False, WA, 1.0)
    assert cmd == STOP and s.mode is Mode.FORWARD and label == "FORWARD"
    s, cmd, _ = wall_avoider_step(s, None, False, WA, 1.05)
    assert cmd is None


def _drive(s, grid, t0, seconds):
    cmds, t = [], t0
    while t < t0 + seconds + 1e-9:
        s, cmd, _ = wall_avoider_step(s, grid, True, WA, round(t, 9))
        cmds.append(cmd)
        t += DT
    return s, cmds, t


@pytest.mark.parametrize("sign", [1, -1])
def test_turn90_clear_returns_forward(sign):
    s = WallAvoiderState(Mode.TURN90, 0.0, sign, True)
    duration = WA.theta_90 / WA.omega  # oracle: open-loop time for a quarter turn
    s, cmds, _ = _drive(s, CLEAR, 0.0, duration + DT)
    rotating = [c for c in cmds if c.omega != 0]
    assert all(c.omega == sign * WA.omega for c in rotating)
    assert len(rotating) * DT == pytest.approx(duration, abs=DT)
    assert s.mode is Mode.FORWARD


def test_turn90_still_blocked_goes_turn180_then_forward():
    s = WallAvoiderState(Mode.TURN90, 0.0, 1, True)
    s, _, t = _drive(s, blocked_at(0.3), 0.0, WA.theta_90 / WA.omega + DT)
    assert s.mode is Mode.TURN180
    ticks = 0
    while s.mode is Mode.TURN180:
        s, cmd, _ = wall_avoider_step(s, blocked_at(0.3), True, WA, round(t, 9))
        t, ticks = t + DT, ticks + 1
    assert s.mode is Mode.FORWARD and cmd == VelocityCmd(WA.v_f, 0, 0)
    assert (ticks - 1) * DT == pytest.approx(WA.theta_180 / WA.omega, abs=DT)


def test_turn_sign_follows_free_side():
    g = OccupancyGrid.empty(fill=Cell.FREE)
    cells = g.cells.copy()
    for f in np.arange(0.05, 1.5, 0.05):
        for lat in np.arange(0.05, 1.5, 0.05):
            cells[g.index_of(f, lat)] = Cell.OCCUPIED  # left blocked
    cells[g.index_of(0.2, 0.0)] = Cell.OCCUPIED
    s, _, _ = wall_avoider_step(WallAvoiderState(), g.with_cells(cells), True, WA, 0.0)
    assert s.turn_sign == -1


def test_wall_avoider_params_validated():
    with pytest.raises(ValueError):
        WallAvoiderParams(v_f=0)


def test_wall_avoider_liveness_fixture_loop(fig3):
    """10^5 ticks around the corridor loop: no clearance violation, Forward keeps recurring."""
    cfg = dataclasses.replace(fig3, stores=(), junctions=())
    world, s = world_from_config(cfg), WallAvoiderState()
    min_clear, last_forward, forward_entries, prev = math.inf, 0, 0, Mode.FORWARD
    for k in range(100_000):
        grid = build_costmap(sense_range(world, cfg))
        s, cmd, _ = wall_avoider_step(s, grid, True, WA, round(k * DT, 9))
        world = step(world, cmd, DT, cfg)
        min_clear = min(min_clear, cfg.walls.clearance(world.robot.x, world.robot.y))
        if s.mode is Mode.FORWARD:
            last_forward = k
            forward_entries += prev is not Mode.FORWARD
        prev = s.mode
    assert min_clear >= cfg.collision_radius
    assert forward_entries > 50 and last_forward > 100_000 - 400


# --- tag approach ----------------------------------------------------------

TA = TagApproachParams()


def det(x=0.0, z=TA.d_star, psi=0.0, stamp=0.0):
    return TagDetection(1, x, z, psi, stamp)


def test_derived_control_law_example():
    p = dataclasses.replace(TA, k_x=1.0, k_z=1.0, vx_max=0.3, vy_max=0.3)
    s, _, _ = tag_approach_step(TagApproachState(), None, True, p, 0.0)
    s, cmd, status = tag_approach_step(s, det(0.5, 2.0, 0.0), None, p, 0.0)
    expected = oracles.approach_command(0.5, 2.0, 0.0, 0.0, 0.5, 1.0, 1.0, p.k_psi, 0.3, 0.3, p.omega_max)
    assert expected == (0.3, -0.3, 0.0)
    assert (cmd.vx, cmd.vy, cmd.omega) == pytest.approx(expected)
    assert status.success == 0 and status.state_label == "aligning"


def test_aligned_starts_advance_then_succeeds_once():
    s, _, _ = tag_approach_step(TagApproachState(), None, True, TA, 0.0)
    s, cmd, status = tag_approach_step(s, det(), None, TA, 0.0)
    assert status.state_label == "advancing" and cmd == VelocityCmd(TA.v_adv, 0, 0)
    assert s.advancing_until == pytest.approx(TA.d_adv / TA.v_adv)
    succ = []
    t = 0.0
    for _ in range(200):
        t = round(t + DT, 9)
        s, cmd, status = tag_approach_step(s, None, None, TA, t)
        succ.append(status.success)
    assert succ.count(1) == 1
    first = succ.index(1)
    assert (first + 1) * DT == pytest.approx(TA.d_adv / TA.v_adv, abs=DT)


def test_zero_error_falls_through_to_rotation_check():
    s, _, _ = tag_approach_step(TagApproachState(), None, True, TA, 0.0)
    s, cmd, status = tag_approach_step(s, det(psi=0.2), None, TA, 0.0)
    assert status.state_label == "rotating" and cmd.vx == 0 and cmd.vy == 0
    assert cmd.omega == pytest.approx(TA.k_psi * 0.2)


def test_timeout_publishes_lost():
    s, _, _ = tag_approach_step(TagApproachState(), None, True, TA, 0.0)
    s, _, _ = tag_approach_step(s, det(0.3, 1.5), None, TA, 0.0)
    s, cmd, status = tag_approach_step(s, None, None, TA, TA.timeout + 0.01)
    assert cmd == STOP and status.success == 0 and status.state_label == "lost"


def test_never_detected_is_lost():
    s, _, _ = tag_approach_step(TagApproachState(), None, True, TA, 0.0)
    s, cmd, status = tag_approach_step(s, None, None, TA, 0.05)
    assert status.state_label == "lost"


def test_falling_edge_stops_and_reports_zero():
    s, _, _ = tag_approach_step(TagApproachState(), det(0.2, 1.0), True, TA, 0.0)
    s, cmd, status = tag_approach_step(s, det(0.2, 1.0), False, TA, 0.05)
    assert cmd == STOP and status.success == 0 and not s.active
    s, cmd, status = tag_approach_step(s, det(0.2, 1.0), None, TA, 0.1)
    assert cmd is None and status.success is None


def test_rising_edge_rearms_advance():
    s = TagApproachState(active=False, adv_done=True, gated=False)
    s, _, _ = tag_approach_step(s, None, True, TA, 0.0)
    assert s.active and not s.adv_done


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(0.8, 3.0))
def test_approach_converges_from_grid_region(x, z):
    r = run_approach(approach_world(x, z))
    assert r.success and r.successes == 1
    ex, ez = r.pre_advance_error
    assert abs(ex) <= TA.tau_x and abs(ez) <= TA.tau_z
    assert r.advance_distance == pytest.approx(TA.d_adv, abs=0.05)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(-0.5, 0.5), st.floats(0.3, 2.5), st.floats(-0.4, 0.4)), max_size=120))
def test_success_at_most_once_per_activation(inputs):
    s, _, _ = tag_approach_step(TagApproachState(), None, True, TA, 0.0)
    count, t = 0, 0.0
    for seen, x, z, psi in inputs:
        t = round(t + DT, 9)
        s, _, status = tag_approach_step(s, det(x, z, psi) if seen else None, None, TA, t)
        count += status.success == 1
    assert count <= 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=60))
def test_gated_off_emits_at_most_one_stop(seq):
    """After a falling edge, no nonzero command until the next rising edge."""
    s, _, _ = tag_approach_step(TagApproachState(), det(0.3, 1.0), True, TA, 0.0)
    t = 0.0
    s, cmd, _ = tag_approach_step(s, det(0.3, 1.0), False, TA, t)
    stops = [cmd]
    for _, seen in seq:
        t = round(t + DT, 9)
        s, cmd, _ = tag_approach_step(s, det(0.3, 1.0) if seen else None, None, TA, t)
        stops.append(cmd)
    assert stops[0] == STOP and all(c is None for c in stops[1:])


# --- maneuvers -------------------------------------------------------------

MP = ManeuverParams()


def _junction(fig3, name):
    return next(j for j in fig3.junctions if j.name == name)


def _store(fig3, name):
    return next(s for s in fig3.stores if s.name == name)


def test_pre_enter_already_aligned(fig3):
    j = _junction(fig3, "J2")
    _, cmd, r = pre_enter_step(PreEnterState(), j, Direction.STRAIGHT, j.pose, 0.0, MP)
    assert r is Result.SUCCESS and cmd == STOP


def test_pre_enter_left_rotates_quarter_turn(fig3):
    j = _junction(fig3, "J2")
    world = dataclasses.replace(world_from_config(fig3), robot=j.pose)
    state, r, t = PreEnterState(), Result.RUNNING, 0.0
    while r is Result.RUNNING:
        state, cmd, r = pre_enter_step(state, j, Direction.LEFT, world.robot, t, MP)
        world = step(world, cmd, DT, fig3)
        t = round(t + DT, 9)
    assert r is Result.SUCCESS
    turned = normalize_angle(world.robot.yaw - j.pose.yaw)
    assert turned == pytest.approx(math.pi / 2, abs=MP.tau_psi)
    # bounded by the saturated rotation time plus the exponential tail
    assert t <= math.pi / 2 / MP.omega_max + 5.0


def test_pre_enter_times_out(fig3):
    j = _junction(fig3, "J2")
    state, _, r = pre_enter_step(PreEnterState(), j, Direction.LEFT, j.pose, 0.0, MP)
    assert r is Result.RUNNING
    _, cmd, r = pre_enter_step(state, j, Direction.LEFT, j.pose, MP.t_pre, MP)  # pose never changes
    assert r is Result.FAILURE and cmd == STOP


def test_pre_enter_gate_off(fig3):
    j = _junction(fig3, "J2")
    state, _, _ = pre_enter_step(PreEnterState(), j, Direction.LEFT, j.pose, 0.0, MP)
    state, cmd, r = pre_enter_step(state, j, Direction.LEFT, j.pose, 0.05, MP, gate=False)
    assert cmd == STOP and r is None and state.started is None
    _, cmd, _ = pre_enter_step(state, j, Direction.LEFT, j.pose, 0.1, MP, gate=False)
    assert cmd is None


def test_enter_store_rollout(fig3):
    store = _store(fig3, "burger_1")
    j = _junction(fig3, "J2")
    start = Pose2D(j.pose.x, j.pose.y, j.branch_heading(Direction.LEFT))
    world = dataclasses.replace(world_from_config(fig3), robot=start)
    state, r, t = EnterStoreState(), Result.RUNNING, 0.0
    while r is Result.RUNNING:
        grid = build_costmap(sense_range(world, fig3))
        state, cmd, r = enter_store_step(state, store, world.robot, grid, t, MP)
        world = step(world, cmd, DT, fig3)
        t = round(t + DT, 9)
    assert r is Result.SUCCESS
    assert store.interior.contains(world.robot.x, world.robot.y)
    assert fig3.walls.clearance(world.robot.x, world.robot.y) >= fig3.collision_radius


def test_enter_store_blocked_doorway(fig3):
    store = _store(fig3, "burger_1")
    pose = Pose2D(0.0, 7.5, math.pi)
    _, cmd, r = enter_store_step(EnterStoreState(), store, pose, blocked_at(0.2), 0.0, MP)
    assert r is Result.FAILURE and cmd == STOP


def test_enter_store_timeout(fig3):
    store = _store(fig3, "burger_1")
    pose = Pose2D(0.0, 7.5, math.pi)
    state, _, _ = enter_store_step(EnterStoreState(), store, pose, CLEAR, 0.0, MP)
    _, _, r = enter_store_step(state, store, pose, CLEAR, MP.t_enter, MP)
    assert r is Result.FAILURE


def test_enter_store_gate_dropped(fig3):
    store = _store(fig3, "burger_1")
    pose = Pose2D(0.0, 7.5, math.pi)
    state, _, _ = enter_store_step(EnterStoreState(), store, pose, CLEAR, 0.0, MP)
    state, cmd, r = enter_store_step(state, store, pose, None, 0.05, MP, gate=False)
    assert cmd == STOP and r is None


def _grasp_until_done(supplies, stock, remaining):
    state, t, grasps = GraspLoopState(), 0.0, []
    for _ in range(10_000):
        state, items, done = grasp_loop_step(state, supplies, stock, remaining, t, MP)
        grasps += items
        if done:
            return grasps, t
        t = round(t + DT, 9)
    raise AssertionError("grasp loop never finished")


def test_grasp_two_of_five():
    grasps, t = _grasp_until_done({"hamburger"}, {"hamburger": 5}, {"hamburger": 2, "medicine": 0})
    assert grasps == ["hamburger", "hamburger"]
    assert t == pytest.approx(2 * MP.t_grasp)


def test_grasp_capability_mismatch():
    grasps, t = _grasp_until_done({"hamburger"}, {"hamburger": 5}, {"medicine": 1})
    assert grasps == [] and t == 0.0


def test_grasp_min_rule():
    grasps, _ = _grasp_until_done({"hamburger"}, {"hamburger": 1}, {"hamburger": 3})
    assert grasps == ["hamburger"]


def test_grasp_gate_off_resets():
    state, _, _ = grasp_loop_step(GraspLoopState(), {"hamburger"}, {"hamburger": 5}, {"hamburger": 2}, 0.0, MP)
    state, items, done = grasp_loop_step(state, {"hamburger"}, {"hamburger": 5}, {"hamburger": 2}, 5.0, MP, gate=False)
    assert state == GraspLoopState() and items == [] and not done


def _post(prev, pose, world=None, cfg=None, max_t=30.0):
    state, t, done, cmds = PostGraspState(), 0.0, False, []
    while not done and t < max_t:
        state, cmd, done = post_grasp_maneuver(state, prev, pose, t, MP)
        cmds.append(cmd)
        if world is not None:
            world = step(world, cmd, DT, cfg)
            pose = world.robot
        else:
            pose = Pose2D(pose.x, pose.y, pose.yaw + cmd.omega * DT)
        t = round(t + DT, 9)
    return state, pose, cmds, done


def test_post_grasp_after_left_turns_right():
    state, pose, cmds, done = _post(Direction.LEFT, Pose2D(0, 0, math.pi))
    assert done
    rotating = [c.omega for c in cmds if c.omega != 0]
    assert rotating and all(w < 0 for w in rotating)
    assert normalize_angle(pose.yaw - math.pi) == pytest.approx(-math.pi / 2, abs=MP.tau_psi)


def test_post_grasp_after_straight_half_turn():
    _, pose, cmds, done = _post(Direction.STRAIGHT, Pose2D(0, 0, 0.0))
    assert done
    assert abs(normalize_angle(pose.yaw - math.pi)) <= MP.tau_psi
    assert cmds[0].omega > 0


def test_post_grasp_backup_lasts_t_backup():
    state, _, cmds, done = _post(Direction.RIGHT, Pose2D(0, 0, 0.0))
    moving = [c for c in cmds if c.vx != 0 or c.vy != 0]
    assert len(moving) * DT == pytest.approx(MP.t_backup, abs=DT)
    assert all(c.vx < 0 for c in moving)  # plain reverse without a retrace point


def test_post_grasp_gate_off_mid_maneuver():
    state, _, _ = post_grasp_maneuver(PostGraspState(), Direction.LEFT, Pose2D(), 0.0, MP)
    state, cmd, done = post_grasp_maneuver(state, Direction.LEFT, Pose2D(), 0.05, MP, gate=False)
    assert cmd == STOP and not done and state == PostGraspState()
    _, cmd, _ = post_grasp_maneuver(state, Direction.LEFT, Pose2D(), 0.1, MP, gate=False)
    assert cmd is None


def test_pickup_inside_zone_holds(fig3):
    zone = fig3.pickup_zone
    state = PickupState()
    for k in range(100):
        state, cmd = pickup_step(state, zone, Pose2D(*zone.center, 0.0), k * DT, MP)
        assert cmd == STOP


def test_pickup_rollout_from_one_metre(fig3):
    zone = fig3.pickup_zone
    world = dataclasses.replace(world_from_config(fig3), robot=Pose2D(zone.xmin - 1.0, 3.5, 0.0))
    state, t = PickupState(), 0.0
    while not state.holding and t < 30:
        state, cmd = pickup_step(state, zone, world.robot, t, MP)
        world = step(world, cmd, DT, fig3)
        t = round(t + DT, 9)
    assert state.holding and zone.contains(world.robot.x, world.robot.y)
    # saturated at vx_max over 1 m plus a margin
    assert t <= 1.0 / MP.vx_max + 2.0


def test_skill_steps_are_pure(fig3):
    j = _junction(fig3, "J2")
    a = pre_enter_step(PreEnterState(started=0.0), j, Direction.RIGHT, Pose2D(0, 7.5, 1.0), 1.0, MP)
    b = pre_enter_step(PreEnterState(started=0.0), j, Direction.RIGHT, Pose2D(0, 7.5, 1.0), 1.0, MP)
    assert a == b
