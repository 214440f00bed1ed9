"""Gated fiducial-tag approach: proportional alignment, then a timed forward advance."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from agentshop.world_model import STOP, TagDetection, VelocityCmd, clamp


@dataclass(frozen=True)
class TagApproachParams:
    x_star: float = 0.0
    d_star: float = 0.5
    tau_x: float = 0.03
    tau_z: float = 0.03
    tau_psi: float = 0.05
    k_x: float = 0.8
    k_z: float = 0.8
    k_psi: float = 1.2
    vx_max: float = 0.25
    vy_max: float = 0.25
    omega_max: float = 0.8
    timeout: float = 2.0
    d_adv: float = 0.3
    v_adv: float = 0.1

    def __post_init__(self) -> None:
        for name in ("tau_x", "tau_z", "tau_psi", "k_x", "k_z", "k_psi", "vx_max", "vy_max", "omega_max", "timeout", "d_adv", "v_adv"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class TagApproachState:
    active: bool = False
    adv_done: bool = False
    last_det: TagDetection | None = None
    t_det: float = -math.inf
    advancing_until: float | None = None
    gated: bool = False


@dataclass(frozen=True)
class SkillStatus:
    """``success`` is None when nothing was published this tick."""

    success: int | None
    state_label: str


def tag_approach_step(
    s: TagApproachState,
    det: TagDetection | None,
    gate: bool | None,
    p: TagApproachParams,
    now: float,
) -> tuple[TagApproachState, VelocityCmd | None, SkillStatus]:
    """One control tick. ``gate=None`` leaves the gate unchanged."""
    if gate is not None and gate != s.gated:
        if gate:
            s = replace(s, active=True, adv_done=False, advancing_until=None, gated=True)
        else:
            s = replace(s, active=False, advancing_until=None, gated=False)
            return s, STOP, SkillStatus(0, "stopped")
    if not s.active:
        return s, None, SkillStatus(None, "idle")

    if s.advancing_until is not None:
        if now < s.advancing_until:
            return s, VelocityCmd(min(abs(p.v_adv), p.vx_max), 0.0, 0.0), SkillStatus(None, "advancing")
        s = replace(s, advancing_until=None, adv_done=True)
        return s, STOP, SkillStatus(1, "done")

    if det is not None:
        s = replace(s, last_det=det, t_det=now)
    if now - s.t_det > p.timeout or s.last_det is None:
        return s, STOP, SkillStatus(0, "lost")

    e_x = s.last_det.x - p.x_star
    e_z = s.last_det.z - p.d_star
    e_psi = s.last_det.psi
    if abs(e_x) > p.tau_x or abs(e_z) > p.tau_z:
        cmd = VelocityCmd(
            clamp(p.k_z * e_z, p.vx_max),
            clamp(-p.k_x * e_x, p.vy_max),
            clamp(p.k_psi * e_psi, p.omega_max),
        )
        return s, cmd, SkillStatus(0, "aligning")
    if abs(e_psi) > p.tau_psi:
        return s, VelocityCmd(0.0, 0.0, clamp(p.k_psi * e_psi, p.omega_max)), SkillStatus(0, "rotating")
    if not s.adv_done:
        v = min(abs(p.v_adv), p.vx_max)
        s = replace(s, advancing_until=now + p.d_adv / v)
        return s, VelocityCmd(v, 0.0, 0.0), SkillStatus(None, "advancing")
    return s, STOP, SkillStatus(None, "done")
