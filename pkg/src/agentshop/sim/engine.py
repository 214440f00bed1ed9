"""Deterministic tick-based corridor world.

All functions are pure: random draws come from a generator seeded with
``(seed, tick, salt)`` so identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from agentshop.sim.config import ITEMS, StoreSpec, WorldConfig, validate_config
from agentshop.world_model import (
    NotInFront,
    Pose2D,
    TagDetection,
    VelocityCmd,
    normalize_angle,
    relative_tag,
)

MAX_DT = 0.1
_SALT_TAGS = 1
_SALT_GRASP = 2


@dataclass(frozen=True)
class WorldState:
    robot: Pose2D
    carried: dict[str, int]
    stock: dict[str, dict[str, int]]  # store name -> item -> count
    clock: float = 0.0
    ticks: int = 0
    seed: int = 0


@dataclass(frozen=True)
class RangeScan:
    bearings: np.ndarray  # robot frame, strictly increasing
    ranges: np.ndarray
    max_range: float

    def __len__(self) -> int:
        return len(self.bearings)


class GraspResult(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class NotInStore(RuntimeError):
    """Grasp attempted with the robot outside the store interior."""


def world_from_config(config: WorldConfig) -> WorldState:
    validate_config(config)
    return WorldState(
        robot=config.start,
        carried={item: 0 for item in ITEMS},
        stock={s.name: {item: int(s.stock.get(item, 0)) for item in ITEMS} for s in config.stores},
        seed=config.seed,
    )


def _rng(state: WorldState, salt: int) -> np.random.Generator:
    return np.random.default_rng([state.seed, state.ticks, salt])


def step(state: WorldState, cmd: VelocityCmd, dt: float, config: WorldConfig) -> WorldState:
    """Integrate one forward-Euler step with collision truncation."""
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")
    lim = config.limits
    cmd = cmd.limited(lim.vx_max, lim.vy_max, lim.omega_max)
    pose = state.robot
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    dx = (c * cmd.vx - s * cmd.vy) * dt
    dy = (s * cmd.vx + c * cmd.vy) * dt
    x, y = pose.x, pose.y
    if dx or dy:
        walls = config.walls
        radius = config.collision_radius
        frac = walls.sweep_limit(x, y, dx, dy, radius)
        if frac < 1.0:
            span = math.hypot(dx, dy)
            frac = max(0.0, frac - 1e-9 / span)
        nx, ny = x + frac * dx, y + frac * dy
        if frac > 0.0 and walls.clearance(nx, ny) >= radius:
            x, y = nx, ny
    new_pose = Pose2D(x, y, pose.yaw + cmd.omega * dt)
    return replace(state, robot=new_pose, clock=state.clock + dt, ticks=state.ticks + 1)


def scan_bearings(n_rays: int) -> np.ndarray:
    return -math.pi + (np.arange(n_rays) + 0.5) * (2.0 * math.pi / n_rays)


def sense_range(state: WorldState, config: WorldConfig) -> RangeScan:
    bearings = scan_bearings(config.sensor.range_rays)
    pose = state.robot
    ranges = config.walls.cast(pose.x, pose.y, bearings + pose.yaw, config.sensor.range_max)
    return RangeScan(bearings, ranges, config.sensor.range_max)


def visible_tags(robot: Pose2D, config: WorldConfig) -> list[tuple[int, float, float, float]]:
    """Noise-free (tag_id, x, z, psi) for every tag the camera can see."""
    sensor = config.sensor
    out = []
    for tag_id, tag_pose in config.tags:
        try:
            x, z, psi = relative_tag(robot, tag_pose)
        except NotInFront:
            continue
        if math.hypot(x, z) > sensor.tag_max_range:
            continue
        if abs(math.atan2(x, z)) > sensor.tag_half_fov or abs(psi) >= math.pi / 2:
            continue
        if config.walls.blocks(robot.x, robot.y, tag_pose.x, tag_pose.y):
            continue
        out.append((tag_id, x, z, psi))
    return out


def detect_tags(state: WorldState, config: WorldConfig) -> list[TagDetection]:
    sensor = config.sensor
    seen = visible_tags(state.robot, config)
    if not seen:
        return []
    rng = _rng(state, _SALT_TAGS)
    if rng.random() < sensor.dropout_p:
        return []
    out = []
    for tag_id, x, z, psi in seen:
        nx, nz, npsi = rng.normal(0.0, 1.0, 3)
        z_m = z + sensor.noise_z * nz
        psi_m = normalize_angle(psi + sensor.noise_psi * npsi)
        if z_m <= 0 or abs(psi_m) >= math.pi / 2:
            continue
        out.append(TagDetection(tag_id, x + sensor.noise_x * nx, z_m, psi_m, state.clock))
    return out


def inside_store(state: WorldState, store: StoreSpec) -> bool:
    return store.interior.contains(state.robot.x, state.robot.y)


def attempt_grasp(state: WorldState, store: StoreSpec, item: str, config: WorldConfig) -> tuple[WorldState, GraspResult]:
    if not inside_store(state, store):
        raise NotInStore(f"robot at ({state.robot.x:.2f}, {state.robot.y:.2f}) is outside {store.name}")
    if state.stock[store.name].get(item, 0) <= 0:
        return state, GraspResult.FAILURE
    if config.grasp_success_p < 1.0 and _rng(state, _SALT_GRASP).random() >= config.grasp_success_p:
        return state, GraspResult.FAILURE
    stock = {name: dict(items) for name, items in state.stock.items()}
    stock[store.name][item] -= 1
    carried = dict(state.carried)
    carried[item] = carried.get(item, 0) + 1
    return replace(state, stock=stock, carried=carried), GraspResult.SUCCESS
