"""Deterministic 2D corridor world."""

from agentshop.sim.config import (
    ITEMS,
    InvalidConfig,
    JunctionSpec,
    Limits,
    SensorParams,
    StoreSpec,
    WorldConfig,
    load_world,
    validate_config,
    world_from_dict,
    world_to_dict,
)
from agentshop.sim.engine import (
    GraspResult,
    NotInStore,
    RangeScan,
    WorldState,
    attempt_grasp,
    detect_tags,
    inside_store,
    sense_range,
    step,
    world_from_config,
)
from agentshop.sim.geometry import Rect, WallSet

__all__ = [
    "ITEMS",
    "GraspResult",
    "InvalidConfig",
    "JunctionSpec",
    "Limits",
    "NotInStore",
    "RangeScan",
    "Rect",
    "SensorParams",
    "StoreSpec",
    "WallSet",
    "WorldConfig",
    "WorldState",
    "attempt_grasp",
    "detect_tags",
    "inside_store",
    "load_world",
    "sense_range",
    "step",
    "validate_config",
    "world_from_config",
    "world_from_dict",
    "world_to_dict",
]
