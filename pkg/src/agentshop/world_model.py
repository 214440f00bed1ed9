"""Geometric and symbolic value types shared across the stack.

Conventions:
    * World frame: x east, y north, yaw counter-clockwise from +x.
    * Robot frame: x forward, y left.
    * Camera frame for tag detections: z forward, x to the *right*.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import IntEnum

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def clamp(value: float, limit: float) -> float:
    """Saturate ``value`` symmetrically to [-limit, +limit]."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


@dataclass(frozen=True, slots=True)
class Pose2D:
    x: float = 0.0  # m
    y: float = 0.0  # m
    yaw: float = 0.0  # rad, kept in (-pi, pi]

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_angle(float(self.yaw)))

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, data: dict) -> Pose2D:
        return cls(float(data["x"]), float(data["y"]), float(data["yaw"]))

    def distance_to(self, other: Pose2D) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


IDENTITY = Pose2D()


def compose(a: Pose2D, b: Pose2D) -> Pose2D:
    """Return a ⊕ b: pose ``b`` given in ``a``'s frame, mapped to the world frame."""
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    return Pose2D(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.yaw + b.yaw)


def inverse(p: Pose2D) -> Pose2D:
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    return Pose2D(-c * p.x - s * p.y, s * p.x - c * p.y, -p.yaw)


def between(a: Pose2D, b: Pose2D) -> Pose2D:
    """Pose of ``b`` expressed in the frame of ``a``."""
    return compose(inverse(a), b)


@dataclass(frozen=True, slots=True)
class VelocityCmd:
    vx: float = 0.0  # m/s forward
    vy: float = 0.0  # m/s, left positive
    omega: float = 0.0  # rad/s, counter-clockwise positive

    @classmethod
    def stop(cls) -> VelocityCmd:
        return cls()

    @property
    def is_stop(self) -> bool:
        return self.vx == 0.0 and self.vy == 0.0 and self.omega == 0.0

    def limited(self, vx_max: float, vy_max: float, omega_max: float) -> VelocityCmd:
        return VelocityCmd(clamp(self.vx, vx_max), clamp(self.vy, vy_max), clamp(self.omega, omega_max))


STOP = VelocityCmd()


class NotInFront(ValueError):
    """The target lies on or behind the camera plane."""


@dataclass(frozen=True, slots=True)
class TagDetection:
    tag_id: int
    x: float  # m, rightward positive
    z: float  # m, forward, > 0
    psi: float  # rad, yaw of the tag plane relative to the robot heading
    stamp: float = 0.0  # sim-seconds

    def __post_init__(self) -> None:
        if not self.z > 0:
            raise ValueError(f"tag detection needs z > 0, got {self.z}")
        if not abs(self.psi) < math.pi / 2:
            raise ValueError(f"tag face not visible, psi={self.psi}")

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.z)


def relative_tag(robot: Pose2D, tag: Pose2D) -> tuple[float, float, float]:
    """Measurement model: (x, z, psi) of ``tag`` as seen from ``robot``.

    A tag whose outward normal points straight back at the robot has psi = 0.
    """
    rel = between(robot, tag)
    if rel.x <= 0:
        raise NotInFront(f"tag forward component {rel.x:.3f} <= 0")
    return -rel.y, rel.x, normalize_angle(rel.yaw - math.pi)


def tag_offset_pose(x: float, z: float, psi: float) -> Pose2D:
    """Inverse of :func:`relative_tag`: the tag pose in the robot frame."""
    return Pose2D(z, -x, psi + math.pi)


class Direction(IntEnum):
    LEFT = 1
    STRAIGHT = 2
    RIGHT = 3

    @property
    def word(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_word(cls, word: str) -> Direction:
        try:
            return cls[word.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown direction word {word!r}") from None

    @property
    def heading_offset(self) -> float:
        """Branch heading relative to the signboard heading."""
        return {Direction.LEFT: math.pi / 2, Direction.STRAIGHT: 0.0, Direction.RIGHT: -math.pi / 2}[self]


class StoreAction(IntEnum):
    HAMBURGER_STORE = 1
    CAFE = 2
    PHARMACY = 3
    CONVENIENCE_STORE = 4
    NO_ENTRY = 5

    @property
    def poi(self) -> str | None:
        return _ACTION_POI.get(self)

    @classmethod
    def for_poi(cls, poi: str) -> StoreAction:
        for action, name in _ACTION_POI.items():
            if name == poi:
                return action
        raise ValueError(f"{poi!r} is not a store category")


_ACTION_POI = {
    StoreAction.HAMBURGER_STORE: "hamburger store",
    StoreAction.CAFE: "cafe",
    StoreAction.PHARMACY: "pharmacy",
    StoreAction.CONVENIENCE_STORE: "convenience store",
}

STORE_CATEGORIES = tuple(_ACTION_POI.values())
PICKUP_POI = "pickup point"
CORRIDOR_POI = "corridor"
POI_NAMES = STORE_CATEGORIES + (PICKUP_POI, CORRIDOR_POI)

_WIRE = re.compile(r"([1-3])\|\|\|([1-5])")


class WireFormatError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Action:
    direction: Direction
    store_action: StoreAction

    def to_wire(self) -> str:
        return f"{int(self.direction)}|||{int(self.store_action)}"

    def __str__(self) -> str:
        return self.to_wire()

    @classmethod
    def from_wire(cls, text: str) -> Action:
        """Strict parse of the exact wire form; no surrounding text allowed."""
        m = _WIRE.fullmatch(text)
        if m is None:
            raise WireFormatError(f"not an action wire string: {text!r}")
        return cls(Direction(int(m.group(1))), StoreAction(int(m.group(2))))


ALL_ACTIONS = tuple(Action(d, a) for d in Direction for a in StoreAction)
