"""Prompt text for the navigation model. Output is byte-stable for equal inputs."""

from __future__ import annotations

import json

from agentshop.orders import OrderList
from agentshop.policy.oracle import DecisionContext, StoreCapabilities
from agentshop.semantic import map_to_json
from agentshop.world_model import Direction, StoreAction

OUTPUT_CONSTRAINT = "Output only <dir>|||<act> with dir in {1,2,3} (1=Left, 2=Straight, 3=Right) and act in {1,2,3,4,5}."

RULES = """You are the navigation policy of a shopping robot. You never control motion; you only choose a branch at the current junction and whether to enter a store there.
Rules:
- From the history, extract visited store instances (junction, direction, poi) and tried branches (junction, direction).
- If the remaining order is all zero, shopping is finished: go toward the pickup point. If the current junction has a pickup point direction, take it. Output <dir>|||5.
- Otherwise select the best unvisited store instance in the map whose store type supplies a remaining item. Prefer specialized stores over generalist ones, then the earliest discovered junction.
- If that instance is at the current junction, enter now: output its direction and the store code.
- Otherwise move: head toward the target junction, or pick an untried branch if no useful store is known. Output <dir>|||5.
- Avoid pickup point directions while items remain if an alternative exists.
- Never enter the same store instance twice."""


def _codes() -> str:
    dirs = ", ".join(f"{int(d)}={d.word}" for d in Direction)
    acts = ", ".join(f"{int(a)}={a.poi or 'no entry (continue or pickup)'}" for a in StoreAction)
    return f"direction codes: {dirs}\nstore action codes: {acts}"


def _capabilities(caps: StoreCapabilities) -> str:
    lines = []
    for name in sorted(caps.supplies):
        kind = "generalist" if name in caps.generalists else "specialized"
        lines.append(f"- {name} ({kind}): {', '.join(sorted(caps.supplies[name]))}")
    return "\n".join(lines)


def _counts(order: OrderList) -> str:
    return ", ".join(f"{k}={v}" for k, v in order.as_dict().items())


def build_prompt(ctx: DecisionContext, caps: StoreCapabilities, order: OrderList | None = None) -> str:
    history = "\n".join(f"- {line}" for line in ctx.history) if ctx.history else "(none)"
    sections = [
        RULES,
        _codes(),
        "store capabilities:\n" + _capabilities(caps),
        "semantic map:\n" + json.dumps(map_to_json(ctx.map), sort_keys=True, indent=2),
        f"current junction: {ctx.current.id} [{'; '.join(ctx.current.poi_pairs)}]",
    ]
    if order is not None:
        sections.append(f"order: {_counts(order)}")
    sections += [
        f"remaining: {_counts(ctx.remaining)}",
        f"history: {history}" if not ctx.history else f"history:\n{history}",
        OUTPUT_CONSTRAINT,
    ]
    return "\n\n".join(sections) + "\n"
