import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fsm_tables as ft
from agentshop.orchestrator import (
    GATE_NAMES,
    ControllerInputs,
    ControllerState,
    CtrlState,
    GateSet,
    MultipleGates,
    OrchestratorParams,
    Target,
    arbitrate,
    controller_step,
    gates_for,
    on_action,
    receive_action,
    resolve_target,
)
from agentshop.policy import InvalidDirection
from agentshop.semantic import JunctionRecord
from agentshop.world_model import STOP, Action, Pose2D, VelocityCmd

S = CtrlState
P = OrchestratorParams()
J_PICKUP = JunctionRecord("junction_1", ("Left: cafe", "Straight: pickup point"), Pose2D())
J_BURGER = JunctionRecord("junction_2", ("Left: hamburger store", "Straight: corridor"), Pose2D(0, 4, 0))


def step(cs, **kw):
    kw.setdefault("now", ft.NOW)
    return controller_step(cs, ControllerInputs(**kw), P)


@pytest.mark.parametrize("mode,gate,blocked,elapsed", ft.WALL_AVOIDER_CASES)
def test_wall_avoider_arc(mode, gate, blocked, elapsed):
    assert ft.run_wall_avoider_case(mode, gate, blocked, elapsed) is ft.wall_avoider_expected(mode, gate, blocked, elapsed)


@pytest.mark.parametrize("state,symbol", ft.CONTROLLER_CASES)
def test_controller_arc(state, symbol):
    assert ft.run_controller_case(state, symbol) is ft.controller_expected(state, symbol)


@pytest.mark.parametrize("state", list(CtrlState))
def test_gates_one_hot_per_state(state):
    g = gates_for(ControllerState(S=state))
    assert g.count == (0 if state is S.WAIT_ACTION else 1)


def test_wall_avoid_to_tag_approach_gates():
    cs, gates, events = step(ControllerState(), tag_seen_at=ft.NOW)
    assert cs.S is S.TAG_APPROACH and gates.names == ["tag_approach"]
    assert events[0].to_json() == {"t": ft.NOW, "from": "WallAvoid", "to": "TagApproach", "reason": "tag recent", "gates": ["tag_approach"]}


def test_map_exit_after_t_map():
    cs = ControllerState(S=S.MAP, map_started=10.0, entered_at=10.0)
    cs, gates, _ = step(cs, now=10.0 + P.T_map - 0.05)
    assert cs.S is S.MAP and gates.names == ["mapping"]
    cs, gates, _ = step(cs, now=10.0 + P.T_map)
    assert cs.S is S.WAIT_ACTION and gates.count == 0


def test_pickup_keeps_gate_on():
    cs = ControllerState(S=S.PICKUP)
    for sym in ft.SYMBOLS:
        cs, gates, events = controller_step(cs, ft.inputs(sym), P)
        assert cs.S is S.PICKUP and not events
        assert gates.names == ([] if sym == "gm_off" else ["pickup"])


@pytest.mark.parametrize("state", [s for s in CtrlState if s is not S.PICKUP])
def test_master_kill_from_any_state(state):
    cs, gates, _ = step(ft.base_state(state), main_gate=False)
    assert cs.S is S.WALL_AVOID and gates.count == 0
    cs, gates, _ = step(cs, main_gate=False)
    assert gates.count == 0
    cs, gates, _ = step(cs)
    assert gates.names == ["wall_avoid"]


@pytest.mark.parametrize("state", [s for s in CtrlState if s is not S.PICKUP])
def test_recovery_totality(state):
    """Skill failure or a master gate toggle returns to WallAvoid within one transition."""
    cs, _, events = step(ft.base_state(state), fault=True)
    assert cs.S is S.WALL_AVOID and len(events) <= 1
    cs, _, events = step(ft.base_state(state), main_gate=False)
    assert cs.S is S.WALL_AVOID and len(events) <= 1


def test_pre_enter_targets():
    base = ControllerState(S=S.PRE_ENTER, entered_at=ft.NOW)
    cs, gates, _ = step(replace(base, target=Target.PICKUP), r_p=ft.Result.SUCCESS)
    assert cs.S is S.PICKUP and gates.names == ["pickup"]
    cs, _, _ = step(replace(base, target=Target.CONTINUE), r_p=ft.Result.SUCCESS)
    assert cs.S is S.WALL_AVOID and cs.cooldown_until == ft.NOW + P.cooldown


def test_grasp_then_post_grasp_then_wall_avoid():
    cs = ControllerState(S=S.GRASP, entered_at=ft.NOW)
    cs, gates, _ = step(cs, s_g=True)
    assert cs.S is S.GRASP and cs.post_grasp and gates.names == ["grasp"]
    cs, _, _ = step(cs, now=ft.NOW + 1, post_done=False)
    assert cs.S is S.GRASP
    cs, gates, _ = step(cs, now=ft.NOW + 2, post_done=True)
    assert cs.S is S.WALL_AVOID and gates.names == ["wall_avoid"] and not cs.post_grasp


def test_lost_near_grace_then_recover():
    cs = ControllerState(S=S.TAG_APPROACH, entered_at=ft.NOW)
    lost = dict(approach_success=0, approach_label="lost", tag_distance=0.5)
    cs, _, _ = step(cs, **lost)
    assert cs.S is S.TAG_APPROACH and cs.lost_since == ft.NOW
    cs, _, _ = step(cs, now=ft.NOW + P.lost_grace - 0.05, approach_label="lost")
    assert cs.S is S.TAG_APPROACH
    cs, _, _ = step(cs, now=ft.NOW + P.lost_grace, approach_label="lost")
    assert cs.S is S.WALL_AVOID and cs.cooldown_until == ft.NOW + P.lost_grace + P.cooldown


def test_lost_near_cleared_by_redetection():
    cs = ControllerState(S=S.TAG_APPROACH, entered_at=ft.NOW)
    cs, _, _ = step(cs, approach_label="lost", tag_distance=0.5)
    cs, _, _ = step(cs, now=ft.NOW + 1, approach_label="aligning")
    assert cs.lost_since is None


def test_lost_far_uses_last_known_distance():
    cs = ControllerState(S=S.TAG_APPROACH, entered_at=ft.NOW)
    cs, _, _ = step(cs, approach_label="aligning", tag_distance=2.0)
    cs, _, events = step(cs, now=ft.NOW + 0.05, approach_label="lost")
    assert cs.S is S.WALL_AVOID and events[0].reason == "tag lost far"


def test_state_timeout_recovers():
    cs = ControllerState(S=S.ENTER_STORE, entered_at=0.0)
    cs, _, events = step(cs, now=P.state_timeout)
    assert cs.S is S.WALL_AVOID and "timeout" in events[0].reason


def test_cooldown_blocks_reapproach():
    """After leaving Map, the same visible tag does not re-trigger the approach for `cooldown` s."""
    cs = ControllerState(S=S.MAP, map_started=0.0, entered_at=0.0)
    cs, _, _ = step(cs, now=P.T_map)
    assert cs.S is S.WAIT_ACTION
    cs = on_action(cs, Action.from_wire("2|||5"), J_BURGER, 3, P.T_map)
    cs, _, _ = step(cs, now=P.T_map + 0.05, r_p=ft.Result.SUCCESS)
    # the continuation re-arms the cooldown from its own exit time
    assert cs.S is S.WALL_AVOID and cs.cooldown_until == P.T_map + 0.05 + P.cooldown
    t = P.T_map + 0.1
    while t < cs.cooldown_until - 1e-9:
        cs, _, _ = step(cs, now=t, tag_seen_at=t)
        assert cs.S is S.WALL_AVOID
        t = round(t + 0.05, 9)
    until = cs.cooldown_until
    cs, _, _ = step(cs, now=until, tag_seen_at=until)
    assert cs.S is S.TAG_APPROACH


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 7.99))
def test_cooldown_property(dt):
    cs = ControllerState(S=S.MAP, map_started=0.0, entered_at=0.0)
    cs, _, _ = step(cs, now=P.T_map)
    cs = replace(cs, S=S.WALL_AVOID)
    now = P.T_map + dt
    cs, _, _ = step(cs, now=now, tag_seen_at=now)
    assert cs.S is S.WALL_AVOID


def test_tag_approach_blocked_while_turning():
    cs, _, _ = step(ControllerState(), tag_seen_at=ft.NOW, turning=True)
    assert cs.S is S.WALL_AVOID


def test_action_promotion_to_pickup():
    cs = ControllerState(S=S.WAIT_ACTION)
    cs = on_action(cs, Action.from_wire("2|||5"), J_PICKUP, 0, ft.NOW)
    assert cs.S is S.PRE_ENTER and cs.target is Target.PICKUP


def test_action_no_promotion_with_remaining():
    assert resolve_target(Action.from_wire("2|||5"), J_PICKUP, 2) is Target.CONTINUE


def test_action_store_target():
    cs = on_action(ControllerState(S=S.WAIT_ACTION), Action.from_wire("1|||1"), J_BURGER, 2, ft.NOW)
    assert cs.S is S.PRE_ENTER and cs.target is Target.STORE
    assert cs.pending == Action.from_wire("1|||1") and cs.dir_prev.word == "Left"


def test_action_missing_direction():
    with pytest.raises(InvalidDirection):
        on_action(ControllerState(S=S.WAIT_ACTION), Action.from_wire("3|||2"), J_BURGER, 2, ft.NOW)


def test_mismatched_store_is_continue():
    assert resolve_target(Action.from_wire("1|||3"), J_BURGER, 2) is Target.CONTINUE


def test_on_action_requires_wait_action():
    with pytest.raises(ValueError):
        on_action(ControllerState(S=S.MAP), Action.from_wire("1|||1"), J_BURGER, 2, ft.NOW)


def test_receive_action_dispositions():
    a = Action.from_wire("1|||1")
    cs, d = receive_action(ControllerState(S=S.MAP), a, J_BURGER, 2, ft.NOW)
    assert d == "queued" and cs.queued == a
    cs, _, _ = step(replace(cs, map_started=ft.NOW), now=ft.NOW + P.T_map)
    assert cs.S is S.WAIT_ACTION
    cs, _, _ = step(cs, now=ft.NOW + P.T_map + 0.05, junction=J_BURGER, remaining_total=2)
    assert cs.S is S.PRE_ENTER and cs.queued is None
    _, d = receive_action(ControllerState(S=S.WALL_AVOID), a, J_BURGER, 2, ft.NOW)
    assert d == "dropped"
    _, d = receive_action(ControllerState(S=S.WAIT_ACTION), Action.from_wire("3|||1"), J_BURGER, 2, ft.NOW)
    assert d == "rejected"
    cs, d = receive_action(ControllerState(S=S.WAIT_ACTION), a, J_BURGER, 2, ft.NOW)
    assert d == "consumed" and cs.S is S.PRE_ENTER


def test_pickup_ignores_actions():
    cs, d = receive_action(ControllerState(S=S.PICKUP), Action.from_wire("1|||1"), J_BURGER, 0, ft.NOW)
    assert d == "dropped" and cs.S is S.PICKUP


def _apply(cs, symbol, now):
    if symbol == "action":
        cs, _ = receive_action(cs, Action.from_wire("2|||5"), J_PICKUP, 0, now)
        return cs, gates_for(cs)
    cs, gates, _ = controller_step(cs, ft.inputs(symbol, now), P)
    return cs, gates


def test_pickup_absorption_random_sequences():
    for seq in ft.random_sequences(1000, 100, seed=11):
        cs, now = ControllerState(S=S.PICKUP), 0.0
        for sym in seq:
            now = round(now + 0.05, 9)
            cs, gates = _apply(cs, sym, now)
            assert cs.S is S.PICKUP
            assert gates.count <= 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(list(ft.SYMBOLS) + ["action"]), max_size=80), st.sampled_from(list(CtrlState)))
def test_gates_always_one_hot(seq, start):
    cs, now = ft.base_state(start), ft.NOW
    for sym in seq:
        now = round(now + 0.05, 9)
        cs, gates = _apply(cs, sym, now)
        assert gates.count <= 1


def test_params_validated():
    with pytest.raises(ValueError):
        OrchestratorParams(T_map=0)


def test_arbitrate():
    cmd = VelocityCmd(0.2, 0, 0)
    assert arbitrate(GateSet.only("wall_avoid"), {"wall_avoid": cmd, "pickup": VelocityCmd(1, 1, 1)}) == cmd
    assert arbitrate(GateSet(), {"wall_avoid": cmd}) == STOP
    assert arbitrate(GateSet.only("grasp"), {}) == STOP
    with pytest.raises(MultipleGates):
        arbitrate(GateSet(wall_avoid=True, pickup=True), {})


def test_gateset_helpers():
    assert GateSet.from_names(["mapping"]).names == ["mapping"]
    assert GateSet.only(None).count == 0
    with pytest.raises(KeyError):
        GateSet.only("teleport")
    assert len(GATE_NAMES) == 7
    assert math.isinf(ControllerState().cooldown_until)
