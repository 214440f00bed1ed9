"""Gated wall avoidance FSM driven by the local costmap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from agentshop.costmap import CorridorSlice, OccupancyGrid, dist_ahead, free_side_bias
from agentshop.world_model import STOP, VelocityCmd


class Mode(Enum):
    FORWARD = "FORWARD"
    TURN90 = "TURN90"
    TURN180 = "TURN180"


@dataclass(frozen=True)
class WallAvoiderParams:
    d_safe: float = 0.5
    v_f: float = 0.2
    omega: float = 0.5
    theta_90: float = math.pi / 2
    theta_180: float = math.pi
    slice: CorridorSlice = field(default_factory=CorridorSlice)

    def __post_init__(self) -> None:
        for name in ("d_safe", "v_f", "omega", "theta_90", "theta_180"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class WallAvoiderState:
    mode: Mode = Mode.FORWARD
    turn_start: float | None = None
    turn_sign: int = 1
    gated: bool = False

    @property
    def turning(self) -> bool:
        return self.mode is not Mode.FORWARD


def wall_avoider_step(
    s: WallAvoiderState,
    grid: OccupancyGrid | None,
    gate: bool,
    p: WallAvoiderParams,
    now: float,
) -> tuple[WallAvoiderState, VelocityCmd | None, str]:
    """Advance the avoider one tick; returns (state, command or None, published label).

    ``grid`` may be None only while the gate is off.
    """
    if not gate:
        cmd = STOP if s.gated else None
        s = WallAvoiderState()
        return s, cmd, s.mode.value
    s = replace(s, gated=True)
    d = dist_ahead(grid, p.slice)
    if s.mode is Mode.FORWARD:
        if d is not None and d <= p.d_safe:
            sign = free_side_bias(grid, p.slice).sign
            s = replace(s, mode=Mode.TURN90, turn_start=now, turn_sign=sign)
            cmd = STOP
        else:
            cmd = VelocityCmd(p.v_f, 0.0, 0.0)
    elif s.mode is Mode.TURN90:
        if now - s.turn_start < p.theta_90 / abs(p.omega):
            cmd = VelocityCmd(0.0, 0.0, s.turn_sign * abs(p.omega))
        else:
            cmd = STOP
            if d is not None:
                s = replace(s, mode=Mode.TURN180, turn_start=now)
            else:
                s = replace(s, mode=Mode.FORWARD, turn_start=None)
    else:
        if now - s.turn_start < p.theta_180 / abs(p.omega):
            cmd = VelocityCmd(0.0, 0.0, s.turn_sign * abs(p.omega))
        else:
            s = replace(s, mode=Mode.FORWARD, turn_start=None)
            cmd = VelocityCmd(p.v_f, 0.0, 0.0)
    return s, cmd, s.mode.value
