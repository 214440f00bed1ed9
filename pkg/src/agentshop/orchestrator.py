"""Main controller: latched one-hot gating over the motion skills.

``controller_step`` is a pure function of the controller state and one tick's
inputs. Decision-layer actions enter through :func:`receive_action`, which the
tick driver calls after draining the action queue at the start of a tick.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields, replace
from enum import Enum

from agentshop.policy.parse import InvalidDirection
from agentshop.semantic import JunctionRecord
from agentshop.skills.maneuvers import Result
from agentshop.world_model import PICKUP_POI, STOP, Action, Direction, StoreAction, VelocityCmd

log = logging.getLogger(__name__)


class CtrlState(Enum):
    WALL_AVOID = "WallAvoid"
    TAG_APPROACH = "TagApproach"
    MAP = "Map"
    WAIT_ACTION = "WaitAction"
    PRE_ENTER = "PreEnter"
    ENTER_STORE = "EnterStore"
    GRASP = "Grasp"
    PICKUP = "Pickup"


class Target(Enum):
    CONTINUE = "continue"
    PICKUP = "pickup"
    STORE = "store"


class MultipleGates(RuntimeError):
    pass


GATE_NAMES = ("wall_avoid", "tag_approach", "mapping", "pre_enter", "enter_store", "grasp", "pickup")


@dataclass(frozen=True)
class GateSet:
    wall_avoid: bool = False
    tag_approach: bool = False
    mapping: bool = False
    pre_enter: bool = False
    enter_store: bool = False
    grasp: bool = False
    pickup: bool = False

    @classmethod
    def only(cls, name: str | None) -> GateSet:
        if name is None:
            return cls()
        if name not in GATE_NAMES:
            raise KeyError(name)
        return cls(**{name: True})

    @classmethod
    def from_names(cls, names: list[str]) -> GateSet:
        return cls(**{n: True for n in names})

    @property
    def names(self) -> list[str]:
        return [f.name for f in fields(self) if getattr(self, f.name)]

    @property
    def count(self) -> int:
        return len(self.names)

    @property
    def active(self) -> str | None:
        names = self.names
        if len(names) > 1:
            raise MultipleGates(f"gates {names} set together")
        return names[0] if names else None


STATE_GATE = {
    CtrlState.WALL_AVOID: "wall_avoid",
    CtrlState.TAG_APPROACH: "tag_approach",
    CtrlState.MAP: "mapping",
    CtrlState.WAIT_ACTION: None,
    CtrlState.PRE_ENTER: "pre_enter",
    CtrlState.ENTER_STORE: "enter_store",
    CtrlState.GRASP: "grasp",
    CtrlState.PICKUP: "pickup",
}


@dataclass(frozen=True)
class OrchestratorParams:
    T_map: float = 1.0
    d_far: float = 1.0
    cooldown: float = 8.0
    tag_recent_window: float = 0.5
    lost_grace: float = 6.0  # a near tag that stays lost still releases the approach
    state_timeout: float = 120.0  # progress watchdog for every transient state

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be > 0")


@dataclass(frozen=True)
class ControllerState:
    S: CtrlState = CtrlState.WALL_AVOID
    main_gate: bool = True
    cooldown_until: float = -math.inf
    map_started: float | None = None
    pending: Action | None = None
    target: Target | None = None
    dir_prev: Direction | None = None
    last_tag_distance: float | None = None
    queued: Action | None = None
    entered_at: float = 0.0
    lost_since: float | None = None
    post_grasp: bool = False


@dataclass(frozen=True)
class ControllerInputs:
    now: float
    main_gate: bool = True
    tag_seen_at: float | None = None  # stamp of the newest junction-tag detection
    tag_distance: float | None = None
    approach_success: int | None = None
    approach_label: str = "idle"
    r_p: Result | None = None
    r_e: Result | None = None
    s_g: bool = False
    post_done: bool = False
    turning: bool = False
    fault: bool = False  # the active skill reported failure or made no progress
    junction: JunctionRecord | None = None
    remaining_total: int = 0


@dataclass(frozen=True)
class Transition:
    t: float
    src: CtrlState
    dst: CtrlState
    reason: str
    gates: GateSet

    def to_json(self) -> dict:
        return {"t": self.t, "from": self.src.value, "to": self.dst.value, "reason": self.reason, "gates": self.gates.names}


def gates_for(cs: ControllerState) -> GateSet:
    if not cs.main_gate:
        return GateSet()
    return GateSet.only(STATE_GATE[cs.S])


def _go(cs: ControllerState, dst: CtrlState, now: float, reason: str, events: list, **changes) -> ControllerState:
    new = replace(cs, S=dst, entered_at=now, lost_since=None, **changes)
    events.append(Transition(now, cs.S, dst, reason, gates_for(new)))
    return new


def _recover(cs: ControllerState, now: float, reason: str, events: list, cooldown: float = 0.0) -> ControllerState:
    """Fall back to wall avoidance, optionally arming the approach cooldown."""
    until = max(cs.cooldown_until, now + cooldown) if cooldown > 0 else cs.cooldown_until
    return _go(cs, CtrlState.WALL_AVOID, now, reason, events, pending=None, target=None, map_started=None, post_grasp=False, cooldown_until=until)


def resolve_target(a: Action, junction: JunctionRecord, remaining_total: int) -> Target:
    """Map an action to a controller target.

    Code 5 becomes a pickup when the chosen branch is the pickup point and the
    order is complete. A store code whose category does not match the branch
    cannot be entered and is treated as a continuation.
    """
    poi = junction.poi(a.direction)
    if poi is None:
        raise InvalidDirection(f"{a.direction.word} does not exist at {junction.id}")
    if a.store_action is StoreAction.NO_ENTRY:
        return Target.PICKUP if poi == PICKUP_POI and remaining_total == 0 else Target.CONTINUE
    if a.store_action.poi == poi:
        return Target.STORE
    log.warning("action %s names %s but %s leads to %s; continuing", a, a.store_action.poi, a.direction.word, poi)
    return Target.CONTINUE


def on_action(cs: ControllerState, a: Action, junction: JunctionRecord, remaining_total: int, now: float, events: list | None = None) -> ControllerState:
    events = events if events is not None else []
    if cs.S is not CtrlState.WAIT_ACTION:
        raise ValueError(f"on_action requires WaitAction, controller is in {cs.S.value}")
    target = resolve_target(a, junction, remaining_total)
    return _go(cs, CtrlState.PRE_ENTER, now, f"action {a} -> {target.value}", events, pending=a, target=target, dir_prev=a.direction, queued=None)


def receive_action(cs: ControllerState, a: Action, junction: JunctionRecord | None, remaining_total: int, now: float, events: list | None = None) -> tuple[ControllerState, str]:
    """Route an incoming action by state. Returns (state, disposition)."""
    if cs.S is CtrlState.WAIT_ACTION and cs.main_gate:
        if junction is None:
            log.warning("action %s dropped: no current junction", a)
            return cs, "dropped"
        try:
            return on_action(cs, a, junction, remaining_total, now, events), "consumed"
        except InvalidDirection as exc:
            log.warning("action %s rejected: %s", a, exc)
            return cs, "rejected"
    if cs.S is CtrlState.MAP:
        return replace(cs, queued=a), "queued"
    log.warning("action %s dropped in %s", a, cs.S.value)
    return cs, "dropped"


def controller_step(cs: ControllerState, inp: ControllerInputs, p: OrchestratorParams = OrchestratorParams()) -> tuple[ControllerState, GateSet, list[Transition]]:
    events: list[Transition] = []
    now = inp.now
    if inp.tag_distance is not None:
        cs = replace(cs, last_tag_distance=inp.tag_distance)

    if not inp.main_gate:
        if cs.S is CtrlState.PICKUP:
            return replace(cs, main_gate=False), GateSet(), events
        if cs.S is not CtrlState.WALL_AVOID or cs.main_gate:
            cs = _go(replace(cs, main_gate=False), CtrlState.WALL_AVOID, now, "main gate off", events, pending=None, target=None, map_started=None, post_grasp=False, queued=None)
        return cs, GateSet(), events
    if not cs.main_gate:
        cs = replace(cs, main_gate=True, entered_at=now)

    S = cs.S
    if S is CtrlState.PICKUP:
        return cs, gates_for(cs), events

    if inp.fault and S is not CtrlState.WALL_AVOID:
        cs = _recover(cs, now, f"fault in {S.value}", events, p.cooldown)
        return cs, gates_for(cs), events
    if S not in (CtrlState.WALL_AVOID, CtrlState.WAIT_ACTION) and now - cs.entered_at >= p.state_timeout:
        cs = _recover(cs, now, f"timeout in {S.value}", events, p.cooldown)
        return cs, gates_for(cs), events

    if S is CtrlState.WALL_AVOID:
        recent = inp.tag_seen_at is not None and now - inp.tag_seen_at <= p.tag_recent_window
        if recent and not inp.turning and now >= cs.cooldown_until:
            cs = _go(cs, CtrlState.TAG_APPROACH, now, "tag recent", events)

    elif S is CtrlState.TAG_APPROACH:
        if inp.approach_success == 1:
            cs = _go(cs, CtrlState.MAP, now, "approach success", events, map_started=now)
        elif inp.approach_label == "lost":
            far = cs.last_tag_distance is None or cs.last_tag_distance > p.d_far
            if far:
                cs = _recover(cs, now, "tag lost far", events)
            elif cs.lost_since is None:
                cs = replace(cs, lost_since=now)
            elif now - cs.lost_since >= p.lost_grace:
                cs = _recover(cs, now, "tag lost near", events, p.cooldown)
        elif cs.lost_since is not None:
            cs = replace(cs, lost_since=None)

    elif S is CtrlState.MAP:
        if cs.map_started is None:
            cs = replace(cs, map_started=now)
        if now - cs.map_started >= p.T_map:
            cs = _go(cs, CtrlState.WAIT_ACTION, now, "mapping done", events, map_started=None, cooldown_until=now + p.cooldown)

    elif S is CtrlState.WAIT_ACTION:
        if cs.queued is not None and inp.junction is not None:
            queued = cs.queued
            cs = replace(cs, queued=None)
            try:
                cs = on_action(cs, queued, inp.junction, inp.remaining_total, now, events)
            except InvalidDirection as exc:
                log.warning("queued action %s rejected: %s", queued, exc)

    elif S is CtrlState.PRE_ENTER:
        if inp.r_p is Result.FAILURE:
            cs = _recover(cs, now, "pre-enter failed", events, p.cooldown)
        elif inp.r_p is Result.SUCCESS:
            if cs.target is Target.PICKUP:
                cs = _go(cs, CtrlState.PICKUP, now, "pre-enter success, pickup", events, pending=None)
            elif cs.target is Target.STORE:
                cs = _go(cs, CtrlState.ENTER_STORE, now, "pre-enter success, store", events, pending=None)
            else:
                cs = _recover(cs, now, "pre-enter success, continue", events, p.cooldown)

    elif S is CtrlState.ENTER_STORE:
        if inp.r_e is Result.SUCCESS:
            cs = _go(cs, CtrlState.GRASP, now, "entered store", events, post_grasp=False)
        elif inp.r_e is Result.FAILURE:
            cs = _recover(cs, now, "store entry failed", events, p.cooldown)

    elif S is CtrlState.GRASP:
        if not cs.post_grasp and inp.s_g:
            cs = replace(cs, post_grasp=True)
        elif cs.post_grasp and inp.post_done:
            cs = _recover(cs, now, "post-grasp maneuver done", events)

    return cs, gates_for(cs), events


def arbitrate(gates: GateSet, cmds: dict[str, VelocityCmd | None]) -> VelocityCmd:
    """Pass through the gated skill's command; stop when nothing is gated."""
    name = gates.active
    if name is None:
        return STOP
    cmd = cmds.get(name)
    return STOP if cmd is None else cmd
