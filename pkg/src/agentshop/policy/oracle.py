"""Deterministic navigation rule over the semantic map.

The same rule is the baseline policy, the fallback for the LLM supervisor and
the reference that ``replay`` re-runs against logged decisions. Every choice is
an argmax over ordering comparisons, with ties broken by lowest direction code
and then by junction discovery order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from agentshop.orders import OrderList
from agentshop.semantic import (
    HistoryEvent,
    JunctionRecord,
    SemanticMap,
    tried_branches,
    visited_instances,
)
from agentshop.world_model import (
    PICKUP_POI,
    STORE_CATEGORIES,
    Action,
    Direction,
    StoreAction,
)


class NoFeasibleDirection(ValueError):
    pass


def _default_supplies() -> dict[str, frozenset[str]]:
    return {
        "hamburger store": frozenset({"hamburger"}),
        "cafe": frozenset({"iced_coffee", "hot_coffee"}),
        "pharmacy": frozenset({"medicine"}),
        "convenience store": frozenset({"hamburger", "iced_coffee", "hot_coffee", "medicine"}),
    }


@dataclass(frozen=True)
class StoreCapabilities:
    supplies: dict[str, frozenset[str]] = field(default_factory=_default_supplies)
    generalists: frozenset[str] = frozenset({"convenience store"})

    def __post_init__(self) -> None:
        covered = set().union(*self.supplies.values()) if self.supplies else set()
        missing = set(OrderList().as_dict()) - covered
        if missing:
            raise ValueError(f"no store category supplies {sorted(missing)}")
        for name in self.supplies:
            if name not in STORE_CATEGORIES:
                raise ValueError(f"unknown store category {name!r}")

    def items(self, category: str) -> frozenset[str]:
        return self.supplies.get(category, frozenset())

    def rank(self, category: str) -> int:
        return 1 if category in self.generalists else 0


@dataclass(frozen=True)
class DecisionContext:
    map: SemanticMap
    current: JunctionRecord
    remaining: OrderList
    visited: frozenset[tuple[str, Direction, str]]
    tried: frozenset[tuple[str, Direction]]
    history: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.current not in self.map:
            raise ValueError(f"{self.current.id} is not in the map")


def make_context(m: SemanticMap, junction_id: str, remaining: OrderList, log: list[HistoryEvent]) -> DecisionContext:
    return DecisionContext(
        map=m,
        current=m.get(junction_id),
        remaining=remaining,
        visited=frozenset(visited_instances(log)),
        tried=frozenset(tried_branches(log)),
        history=tuple(e.line() for e in log),
    )


def branch_vector(record: JunctionRecord, direction: Direction) -> tuple[float, float]:
    heading = record.pose.yaw + direction.heading_offset
    return math.cos(heading), math.sin(heading)


def _moving_candidates(ctx: DecisionContext, avoid_pickup: bool) -> list[Direction]:
    """Directions the robot may drive through with act=5.

    Store branches are dead ends for corridor driving, and pickup branches are
    avoided while shopping; both are kept only when nothing else is left.
    """
    pairs = ctx.current.pairs()
    dirs = sorted(pairs)
    if not dirs:
        raise NoFeasibleDirection(f"{ctx.current.id} lists no directions")
    if avoid_pickup:
        dirs = [d for d in dirs if pairs[d] != PICKUP_POI] or dirs
    return [d for d in dirs if pairs[d] not in STORE_CATEGORIES] or dirs


def _toward(ctx: DecisionContext, target: JunctionRecord, candidates: list[Direction]) -> Direction:
    dx = target.pose.x - ctx.current.pose.x
    dy = target.pose.y - ctx.current.pose.y
    best, best_dot = candidates[0], -math.inf
    for d in candidates:  # ascending code, strict > keeps the lowest on ties
        ux, uy = branch_vector(ctx.current, d)
        dot = ux * dx + uy * dy
        if dot > best_dot:
            best, best_dot = d, dot
    return best


def _untried(ctx: DecisionContext, candidates: list[Direction]) -> Direction:
    for d in candidates:
        if (ctx.current.id, d) not in ctx.tried:
            return d
    return candidates[0]


def _pickup_action(ctx: DecisionContext) -> Action:
    pairs = ctx.current.pairs()
    for d in sorted(pairs):
        if pairs[d] == PICKUP_POI:
            return Action(d, StoreAction.NO_ENTRY)
    candidates = _moving_candidates(ctx, avoid_pickup=False)
    known = [r for r in ctx.map if r.id != ctx.current.id and PICKUP_POI in r.pairs().values()]
    if known:
        order = {r.id: i for i, r in enumerate(ctx.map)}
        target = min(known, key=lambda r: (r.pose.distance_to(ctx.current.pose), order[r.id]))
        return Action(_toward(ctx, target, candidates), StoreAction.NO_ENTRY)
    return Action(_untried(ctx, candidates), StoreAction.NO_ENTRY)


def useful_instances(ctx: DecisionContext, caps: StoreCapabilities) -> list[tuple[JunctionRecord, Direction, str]]:
    """Unvisited store instances that supply a remaining item, best first."""
    wanted = {k for k, v in ctx.remaining.as_dict().items() if v > 0}
    found = []
    for order, record in enumerate(ctx.map):
        for d, poi in sorted(record.pairs().items()):
            if poi not in STORE_CATEGORIES or (record.id, d, poi) in ctx.visited:
                continue
            if caps.items(poi) & wanted:
                found.append(((caps.rank(poi), order, int(d)), (record, d, poi)))
    found.sort(key=lambda entry: entry[0])
    return [inst for _, inst in found]


def decide_oracle(ctx: DecisionContext, caps: StoreCapabilities | None = None) -> Action:
    caps = caps or StoreCapabilities()
    if not ctx.current.poi_pairs:
        raise NoFeasibleDirection(f"{ctx.current.id} lists no directions")
    if ctx.remaining.total == 0:
        return _pickup_action(ctx)
    ranked = useful_instances(ctx, caps)
    if ranked:
        record, d, poi = ranked[0]
        if record.id == ctx.current.id:
            return Action(d, StoreAction.for_poi(poi))
        candidates = _moving_candidates(ctx, avoid_pickup=True)
        return Action(_toward(ctx, record, candidates), StoreAction.NO_ENTRY)
    candidates = _moving_candidates(ctx, avoid_pickup=True)
    return Action(_untried(ctx, candidates), StoreAction.NO_ENTRY)
