"""World configuration: corridors, signboards, stores, sensors, limits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from agentshop.sim.geometry import Rect, WallSet
from agentshop.world_model import (
    PICKUP_POI,
    POI_NAMES,
    STORE_CATEGORIES,
    Direction,
    Pose2D,
    compose,
)

ITEMS = ("hamburger", "iced_coffee", "hot_coffee", "medicine")

# Probe length used to check that every signboard direction is traversable.
BRANCH_PROBE = 1.0
# Default tag placement: the approach stops d* - d_adv = 0.2 m in front of it.
DEFAULT_TAG_STANDOFF = 0.2


class InvalidConfig(ValueError):
    """Raised with the name of the first violated world invariant."""


@dataclass(frozen=True)
class JunctionSpec:
    name: str
    pose: Pose2D  # stop pose in front of the signboard; yaw is the signboard heading
    signs: tuple[tuple[Direction, str], ...]
    tag_id: int
    tag_pose: Pose2D

    def poi(self, direction: Direction) -> str | None:
        for d, name in self.signs:
            if d == direction:
                return name
        return None

    def branch_heading(self, direction: Direction) -> float:
        return self.pose.yaw + direction.heading_offset


@dataclass(frozen=True)
class StoreSpec:
    name: str
    category: str
    junction: str
    direction: Direction
    entrance: Pose2D  # doorway pose, yaw points into the store
    interior: Rect
    stock: dict[str, int]
    tag_id: int | None = None
    tag_pose: Pose2D | None = None


@dataclass(frozen=True)
class SensorParams:
    tag_max_range: float = 3.0
    tag_half_fov: float = 0.6
    dropout_p: float = 0.0
    noise_x: float = 0.0
    noise_z: float = 0.0
    noise_psi: float = 0.0
    range_max: float = 3.0
    range_rays: int = 180


@dataclass(frozen=True)
class Limits:
    vx_max: float = 0.25
    vy_max: float = 0.25
    omega_max: float = 0.8


@dataclass(frozen=True)
class WorldConfig:
    corridors: tuple[Rect, ...]
    junctions: tuple[JunctionSpec, ...]
    stores: tuple[StoreSpec, ...]
    pickup_zone: Rect | None
    start: Pose2D
    sensor: SensorParams = field(default_factory=SensorParams)
    limits: Limits = field(default_factory=Limits)
    collision_radius: float = 0.25
    grasp_success_p: float = 1.0
    seed: int = 0
    name: str = "world"

    @cached_property
    def walls(self) -> WallSet:
        return WallSet.from_rects(self.corridors)

    @cached_property
    def tags(self) -> tuple[tuple[int, Pose2D], ...]:
        out = [(j.tag_id, j.tag_pose) for j in self.junctions]
        out += [(s.tag_id, s.tag_pose) for s in self.stores if s.tag_id is not None and s.tag_pose is not None]
        return tuple(out)

    def junction(self, name: str) -> JunctionSpec:
        for j in self.junctions:
            if j.name == name:
                return j
        raise KeyError(name)

    def junction_by_tag(self, tag_id: int) -> JunctionSpec | None:
        for j in self.junctions:
            if j.tag_id == tag_id:
                return j
        return None

    def store(self, name: str) -> StoreSpec:
        for s in self.stores:
            if s.name == name:
                return s
        raise KeyError(name)

    def store_at(self, junction: str, direction: Direction) -> StoreSpec | None:
        for s in self.stores:
            if s.junction == junction and s.direction == direction:
                return s
        return None


def validate_config(config: WorldConfig) -> None:
    """Raise :class:`InvalidConfig` naming the first violated invariant."""
    ids = [tag_id for tag_id, _ in config.tags]
    for tag_id in ids:
        if ids.count(tag_id) > 1:
            raise InvalidConfig(f"duplicate tag_id {tag_id}")
    names = [j.name for j in config.junctions]
    if len(set(names)) != len(names):
        raise InvalidConfig("duplicate junction name")
    if config.collision_radius <= 0:
        raise InvalidConfig("collision_radius must be > 0")
    if not 0.0 <= config.sensor.dropout_p <= 1.0:
        raise InvalidConfig("dropout_p must lie in [0, 1]")
    if not 0.0 <= config.grasp_success_p <= 1.0:
        raise InvalidConfig("grasp_success_p must lie in [0, 1]")
    walls = config.walls
    for j in config.junctions:
        seen = set()
        for direction, poi in j.signs:
            if direction in seen:
                raise InvalidConfig(f"junction {j.name} lists {direction.word} twice")
            seen.add(direction)
            if poi not in POI_NAMES:
                raise InvalidConfig(f"junction {j.name}: unknown poi {poi!r}")
            heading = j.branch_heading(direction)
            ex = j.pose.x + BRANCH_PROBE * math.cos(heading)
            ey = j.pose.y + BRANCH_PROBE * math.sin(heading)
            if not walls.is_free(ex, ey) or walls.blocks(j.pose.x, j.pose.y, ex, ey):
                raise InvalidConfig(f"junction {j.name} direction {direction.word} leads into a wall")
        if not walls.is_free(j.pose.x, j.pose.y):
            raise InvalidConfig(f"junction {j.name} pose is not in free space")
    for s in config.stores:
        if s.category not in STORE_CATEGORIES:
            raise InvalidConfig(f"store {s.name}: unknown category {s.category!r}")
        for item, count in s.stock.items():
            if item not in ITEMS:
                raise InvalidConfig(f"store {s.name}: unknown item {item!r}")
            if count < 0:
                raise InvalidConfig(f"store {s.name}: stock count for {item} is negative")
        try:
            j = config.junction(s.junction)
        except KeyError:
            raise InvalidConfig(f"store {s.name}: unknown junction {s.junction!r}") from None
        if j.poi(s.direction) != s.category:
            raise InvalidConfig(f"store {s.name}: junction {j.name} {s.direction.word} sign does not name {s.category}")
    if config.pickup_zone is None and any(p == PICKUP_POI for j in config.junctions for _, p in j.signs):
        raise InvalidConfig("signboard names a pickup point but no pickup_zone is configured")
    if not walls.is_free(config.start.x, config.start.y):
        raise InvalidConfig("start pose is not in free space")
    if walls.clearance(config.start.x, config.start.y) < config.collision_radius:
        raise InvalidConfig("start pose violates collision_radius clearance")


def _rect(data) -> Rect:
    return Rect(*(float(v) for v in data))


def world_from_dict(data: dict) -> WorldConfig:
    """Build a :class:`WorldConfig` from its JSON object form (no validation)."""
    try:
        junctions = []
        for j in data["junctions"]:
            pose = Pose2D.from_dict(j["pose"])
            tag_pose = Pose2D.from_dict(j["tag_pose"]) if "tag_pose" in j else compose(
                pose, Pose2D(DEFAULT_TAG_STANDOFF, 0.0, math.pi)
            )
            signs = tuple((Direction.from_word(d), str(p)) for d, p in j["signs"])
            junctions.append(JunctionSpec(str(j["name"]), pose, signs, int(j["tag_id"]), tag_pose))
        stores = []
        for s in data.get("stores", []):
            tag_pose = s.get("tag_pose")
            stores.append(
                StoreSpec(
                    name=str(s["name"]),
                    category=str(s["category"]),
                    junction=str(s["junction"]),
                    direction=Direction.from_word(s["direction"]),
                    entrance=Pose2D.from_dict(s["entrance"]),
                    interior=_rect(s["interior"]),
                    stock={str(k): int(v) for k, v in s.get("stock", {}).items()},
                    tag_id=None if s.get("tag_id") is None else int(s["tag_id"]),
                    tag_pose=None if tag_pose is None else Pose2D.from_dict(tag_pose),
                )
            )
        sensor = dict(data.get("sensor", {}))
        noise = sensor.pop("noise_std", {})
        sensor.update({f"noise_{k}": float(v) for k, v in noise.items()})
        return WorldConfig(
            corridors=tuple(_rect(r) for r in data.get("corridors", [])),
            junctions=tuple(junctions),
            stores=tuple(stores),
            pickup_zone=_rect(data["pickup_zone"]) if data.get("pickup_zone") else None,
            start=Pose2D.from_dict(data["start"]),
            sensor=SensorParams(**sensor),
            limits=Limits(**data.get("limits", {})),
            collision_radius=float(data.get("collision_radius", 0.25)),
            grasp_success_p=float(data.get("grasp_success_p", 1.0)),
            seed=int(data.get("seed", 0)),
            name=str(data.get("name", "world")),
        )
    except InvalidConfig:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"malformed world config: {exc}") from exc


def world_to_dict(config: WorldConfig) -> dict:
    sensor = config.sensor
    return {
        "name": config.name,
        "seed": config.seed,
        "collision_radius": config.collision_radius,
        "grasp_success_p": config.grasp_success_p,
        "start": config.start.to_dict(),
        "limits": {"vx_max": config.limits.vx_max, "vy_max": config.limits.vy_max, "omega_max": config.limits.omega_max},
        "sensor": {
            "tag_max_range": sensor.tag_max_range,
            "tag_half_fov": sensor.tag_half_fov,
            "dropout_p": sensor.dropout_p,
            "noise_std": {"x": sensor.noise_x, "z": sensor.noise_z, "psi": sensor.noise_psi},
            "range_max": sensor.range_max,
            "range_rays": sensor.range_rays,
        },
        "corridors": [r.as_list() for r in config.corridors],
        "pickup_zone": config.pickup_zone.as_list() if config.pickup_zone else None,
        "junctions": [
            {
                "name": j.name,
                "pose": j.pose.to_dict(),
                "tag_id": j.tag_id,
                "tag_pose": j.tag_pose.to_dict(),
                "signs": [[d.word, p] for d, p in j.signs],
            }
            for j in config.junctions
        ],
        "stores": [
            {
                "name": s.name,
                "category": s.category,
                "junction": s.junction,
                "direction": s.direction.word,
                "entrance": s.entrance.to_dict(),
                "interior": s.interior.as_list(),
                "tag_id": s.tag_id,
                "tag_pose": None if s.tag_pose is None else s.tag_pose.to_dict(),
                "stock": dict(s.stock),
            }
            for s in config.stores
        ],
    }


def load_world(path: str | Path) -> WorldConfig:
    """Read, parse and validate a world JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read world file {path}: {exc}") from exc
    config = world_from_dict(data)
    validate_config(config)
    return config


