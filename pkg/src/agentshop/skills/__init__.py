"""Gated motion primitives. Each is a pure step function over a frozen state."""

from agentshop.skills.maneuvers import (
    EnterStoreState,
    GraspLoopState,
    ManeuverParams,
    PickupState,
    PostGraspState,
    PreEnterState,
    Result,
    enter_store_step,
    grasp_loop_step,
    pickup_step,
    post_grasp_maneuver,
    pre_enter_step,
)
from agentshop.skills.tag_approach import SkillStatus, TagApproachParams, TagApproachState, tag_approach_step
from agentshop.skills.wall_avoider import Mode, WallAvoiderParams, WallAvoiderState, wall_avoider_step

# Status channel names written to the episode log.
CHANNELS = ("wall_avoider_state", "tag_approach_success", "pre_enter_result", "enter_store_result", "grasp_success")

__all__ = [
    "CHANNELS",
    "EnterStoreState",
    "GraspLoopState",
    "ManeuverParams",
    "Mode",
    "PickupState",
    "PostGraspState",
    "PreEnterState",
    "Result",
    "SkillStatus",
    "TagApproachParams",
    "TagApproachState",
    "WallAvoiderParams",
    "WallAvoiderState",
    "enter_store_step",
    "grasp_loop_step",
    "pickup_step",
    "post_grasp_maneuver",
    "pre_enter_step",
    "tag_approach_step",
    "wall_avoider_step",
]
