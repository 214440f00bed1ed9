"""Supervisor around the navigation model: validate, retry, fall back to the oracle."""

from __future__ import annotations

import logging

from agentshop.orders import OrderList
from agentshop.policy.oracle import DecisionContext, StoreCapabilities, decide_oracle
from agentshop.policy.parse import FormatError, InvalidDirection, parse_action
from agentshop.policy.prompt import OUTPUT_CONSTRAINT, build_prompt
from agentshop.transport import Transport, TransportError
from agentshop.world_model import Action

log = logging.getLogger(__name__)


def correction_line(error: Exception) -> str:
    return f"Your previous answer was rejected ({error}). {OUTPUT_CONSTRAINT}"


def decide_llm(
    transport: Transport,
    ctx: DecisionContext,
    caps: StoreCapabilities | None = None,
    retries: int = 2,
    order: OrderList | None = None,
    records: list[dict] | None = None,
) -> Action:
    """Total: returns an Action for every transport behaviour."""
    caps = caps or StoreCapabilities()
    records = records if records is not None else []
    messages = [{"role": "user", "content": build_prompt(ctx, caps, order)}]
    reason = "retries exhausted"
    for attempt in range(retries + 1):
        try:
            reply = transport(messages)
        except TransportError as exc:
            records.append({"kind": "llm", "junction": ctx.current.id, "attempt": attempt, "messages": messages, "response": None, "error": f"transport: {exc}"})
            reason = f"transport error: {exc}"
            break
        try:
            action = parse_action(reply, ctx.current)
        except (FormatError, InvalidDirection) as exc:
            records.append({"kind": "llm", "junction": ctx.current.id, "attempt": attempt, "messages": messages, "response": reply, "error": str(exc)})
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": correction_line(exc)},
            ]
            continue
        records.append({"kind": "llm", "junction": ctx.current.id, "attempt": attempt, "messages": messages, "response": reply, "error": None, "action": action.to_wire()})
        return action
    action = decide_oracle(ctx, caps)
    log.warning("navigation model fallback at %s (%s): oracle chose %s", ctx.current.id, reason, action)
    records.append({"kind": "fallback", "junction": ctx.current.id, "reason": reason, "action": action.to_wire()})
    return action
