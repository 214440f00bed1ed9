"""Scripted junction and store maneuvers.

Every step takes the current gate. With the gate low a maneuver emits a
single stop on the falling edge, resets, and otherwise returns ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from agentshop.costmap import CorridorSlice, OccupancyGrid, dist_ahead
from agentshop.sim.config import JunctionSpec, StoreSpec
from agentshop.sim.geometry import Rect
from agentshop.world_model import (
    STOP,
    Direction,
    Pose2D,
    VelocityCmd,
    between,
    clamp,
    normalize_angle,
)


class Result(Enum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class ManeuverParams:
    vx_max: float = 0.25
    vy_max: float = 0.25
    omega_max: float = 0.8
    k_yaw: float = 2.0
    tau_psi: float = 0.02
    t_pre: float = 10.0
    v_enter: float = 0.2
    k_lat: float = 1.0
    d_stop: float = 0.3
    t_enter: float = 20.0
    t_grasp: float = 3.0
    t_turn: float = 10.0
    t_backup: float = 3.0
    v_backup: float = 0.2
    k_pickup: float = 0.8
    slice: CorridorSlice = field(default_factory=CorridorSlice)


def _rotate_toward(target_yaw: float, pose: Pose2D, p: ManeuverParams) -> tuple[float, VelocityCmd]:
    err = normalize_angle(target_yaw - pose.yaw)
    return err, VelocityCmd(0.0, 0.0, clamp(p.k_yaw * err, p.omega_max))


# --- pre-enter -------------------------------------------------------------


@dataclass(frozen=True)
class PreEnterState:
    started: float | None = None


def pre_enter_step(
    state: PreEnterState,
    junction: JunctionSpec,
    direction: Direction,
    pose: Pose2D,
    now: float,
    p: ManeuverParams = ManeuverParams(),
    gate: bool = True,
) -> tuple[PreEnterState, VelocityCmd | None, Result | None]:
    """Rotate in place to face the chosen branch of the junction."""
    if not gate:
        return PreEnterState(), (STOP if state.started is not None else None), None
    if state.started is None:
        state = PreEnterState(started=now)
    err, cmd = _rotate_toward(junction.branch_heading(direction), pose, p)
    if abs(err) <= p.tau_psi:
        return state, STOP, Result.SUCCESS
    if now - state.started >= p.t_pre:
        return state, STOP, Result.FAILURE
    return state, cmd, Result.RUNNING


# --- enter store -----------------------------------------------------------


@dataclass(frozen=True)
class EnterStoreState:
    started: float | None = None


def enter_store_step(
    state: EnterStoreState,
    store: StoreSpec,
    pose: Pose2D,
    grid: OccupancyGrid | None,
    now: float,
    p: ManeuverParams = ManeuverParams(),
    gate: bool = True,
) -> tuple[EnterStoreState, VelocityCmd | None, Result | None]:
    """Drive along the entrance axis, nulling lateral offset, until inside the store."""
    if not gate:
        return EnterStoreState(), (STOP if state.started is not None else None), None
    if state.started is None:
        state = EnterStoreState(started=now)
    if store.interior.contains(pose.x, pose.y):
        return state, STOP, Result.SUCCESS
    if now - state.started >= p.t_enter:
        return state, STOP, Result.FAILURE
    if grid is not None:
        d = dist_ahead(grid, p.slice)
        if d is not None and d < p.d_stop:
            return state, STOP, Result.FAILURE
    rel = between(store.entrance, pose)
    yaw_err = normalize_angle(store.entrance.yaw - pose.yaw)
    # lateral correction is expressed in the entrance frame, rotate it into the robot frame
    v_axis, v_lat = p.v_enter, -p.k_lat * rel.y
    c, s = math.cos(-rel.yaw), math.sin(-rel.yaw)
    cmd = VelocityCmd(
        clamp(c * v_axis - s * v_lat, p.vx_max),
        clamp(s * v_axis + c * v_lat, p.vy_max),
        clamp(p.k_yaw * yaw_err, p.omega_max),
    )
    return state, cmd, Result.RUNNING


# --- grasp loop ------------------------------------------------------------


@dataclass(frozen=True)
class GraspLoopState:
    plan: tuple[str, ...] | None = None
    next_due: float | None = None
    attempts: int = 0


def plan_grasps(supplies: frozenset[str] | set[str], stock: dict[str, int], remaining: dict[str, int]) -> tuple[str, ...]:
    """min(stock, remaining) grasps for every item the store can supply, in item order."""
    plan: list[str] = []
    for item, want in remaining.items():
        if item in supplies and want > 0:
            plan.extend([item] * min(want, max(stock.get(item, 0), 0)))
    return tuple(plan)


def grasp_loop_step(
    state: GraspLoopState,
    supplies: frozenset[str] | set[str],
    stock: dict[str, int],
    remaining: dict[str, int],
    now: float,
    p: ManeuverParams = ManeuverParams(),
    gate: bool = True,
) -> tuple[GraspLoopState, list[str], bool]:
    """Returns (state, items to grasp this tick, s_g). Each grasp takes ``t_grasp``."""
    if not gate:
        return GraspLoopState(), [], False
    if state.plan is None:
        state = GraspLoopState(plan=plan_grasps(supplies, stock, remaining), next_due=now + p.t_grasp)
    if not state.plan:
        return state, [], True
    if now + 1e-9 < state.next_due:
        return state, [], False
    item, rest = state.plan[0], state.plan[1:]
    state = replace(state, plan=rest, next_due=now + p.t_grasp, attempts=state.attempts + 1)
    return state, [item], not rest


# --- post-grasp turn and backup --------------------------------------------


class PostPhase(Enum):
    TURN = "turn"
    BACKUP = "backup"
    DONE = "done"


def exit_turn(prev: Direction) -> float:
    """Turn opposite to the entry turn; a straight entry is left with a half turn."""
    return {Direction.LEFT: -math.pi / 2, Direction.RIGHT: math.pi / 2, Direction.STRAIGHT: math.pi}[prev]


@dataclass(frozen=True)
class PostGraspState:
    exit_to: tuple[float, float] | None = None  # world point to retrace to; None -> plain reverse
    phase: PostPhase = PostPhase.TURN
    target_yaw: float | None = None
    phase_start: float | None = None
    velocity: tuple[float, float] | None = None  # world-frame backup velocity


def _backup_velocity(state: PostGraspState, pose: Pose2D, p: ManeuverParams) -> tuple[float, float]:
    if state.exit_to is None:
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        return -p.v_backup * c, -p.v_backup * s
    vx = (state.exit_to[0] - pose.x) / p.t_backup
    vy = (state.exit_to[1] - pose.y) / p.t_backup
    # scale uniformly so the robot-frame command stays inside the limits
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    bx, by = c * vx + s * vy, -s * vx + c * vy
    scale = max(abs(bx) / p.vx_max, abs(by) / p.vy_max, 1.0)
    return vx / scale, vy / scale


def post_grasp_maneuver(
    state: PostGraspState,
    prev_direction: Direction,
    pose: Pose2D,
    now: float,
    p: ManeuverParams = ManeuverParams(),
    gate: bool = True,
) -> tuple[PostGraspState, VelocityCmd | None, bool]:
    if not gate:
        moving = state.phase_start is not None and state.phase is not PostPhase.DONE
        return PostGraspState(exit_to=state.exit_to), (STOP if moving else None), False
    if state.phase is PostPhase.DONE:
        return state, STOP, True
    if state.target_yaw is None:
        state = replace(state, target_yaw=normalize_angle(pose.yaw + exit_turn(prev_direction)), phase_start=now)
    if state.phase is PostPhase.TURN:
        err = normalize_angle(state.target_yaw - pose.yaw)
        if prev_direction is Direction.STRAIGHT and now == state.phase_start:
            err = math.pi  # force a counter-clockwise half turn
        if abs(err) > p.tau_psi and now - state.phase_start < p.t_turn:
            return state, VelocityCmd(0.0, 0.0, clamp(p.k_yaw * err, p.omega_max)), False
        state = replace(state, phase=PostPhase.BACKUP, phase_start=now, velocity=_backup_velocity(state, pose, p))
    if now - state.phase_start < p.t_backup - 1e-9:
        vx, vy = state.velocity
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        return state, VelocityCmd(c * vx + s * vy, -s * vx + c * vy, 0.0), False
    return replace(state, phase=PostPhase.DONE), STOP, True


# --- pickup ----------------------------------------------------------------


@dataclass(frozen=True)
class PickupState:
    holding: bool = False


def pickup_step(
    state: PickupState,
    zone: Rect,
    pose: Pose2D,
    now: float,
    p: ManeuverParams = ManeuverParams(),
) -> tuple[PickupState, VelocityCmd]:
    """Drive into the pickup zone, then hold still forever."""
    if state.holding or zone.contains(pose.x, pose.y):
        return PickupState(holding=True), STOP
    cx, cy = zone.center
    dx, dy = cx - pose.x, cy - pose.y
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    bx, by = c * dx + s * dy, -s * dx + c * dy
    return state, VelocityCmd(clamp(p.k_pickup * bx, p.vx_max), clamp(p.k_pickup * by, p.vy_max), 0.0)
