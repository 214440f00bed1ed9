"""Shopping orders: natural-language parsing, persistence and bookkeeping."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, fields

import jsonschema

from agentshop.transport import Transport, TransportError
from agentshop.semantic import ParseError

log = logging.getLogger(__name__)

MAX_COUNT = 20

ORDER_SCHEMA = {
    "type": "object",
    "properties": {
        name: {"type": "integer", "minimum": 0}
        for name in ("hamburger", "iced_coffee", "hot_coffee", "medicine")
    },
    "required": ["hamburger", "iced_coffee", "hot_coffee", "medicine"],
    "additionalProperties": False,
}


class EmptyOrder(ValueError):
    """The request mentions none of the four items."""


@dataclass(frozen=True)
class OrderList:
    hamburger: int = 0
    iced_coffee: int = 0
    hot_coffee: int = 0
    medicine: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ValueError(f"{f.name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.hamburger + self.iced_coffee + self.hot_coffee + self.medicine

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    def capped(self, limit: int = MAX_COUNT) -> OrderList:
        return OrderList(**{k: min(v, limit) for k, v in self.as_dict().items()})


def remaining(order: OrderList, carried: dict[str, int]) -> OrderList:
    return OrderList(**{k: max(v - carried.get(k, 0), 0) for k, v in order.as_dict().items()})


def save_order(order: OrderList) -> bytes:
    return (json.dumps(order.as_dict(), indent=2) + "\n").encode("utf-8")


def order_from_json(data: object) -> OrderList:
    try:
        jsonschema.validate(data, ORDER_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or None
        raise ParseError(exc.message, field=where) from None
    return OrderList(**data)


def load_order(raw: bytes | str) -> OrderList:
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return order_from_json(data)


# --- rule parser -------------------------------------------------------------

NUMBER_WORDS = {
    "zero": 0, "a": 1, "an": 1, "one": 1, "single": 1, "two": 2, "couple": 2, "pair": 2,
    "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}

# Longest phrases first; tokens are singularised before matching.
ITEM_PHRASES: tuple[tuple[tuple[str, ...], str], ...] = (
    (("emergency", "medicine"), "medicine"),
    (("iced", "coffee"), "iced_coffee"),
    (("ice", "coffee"), "iced_coffee"),
    (("cold", "coffee"), "iced_coffee"),
    (("hot", "coffee"), "hot_coffee"),
    (("hamburger",), "hamburger"),
    (("burger",), "hamburger"),
    (("cheeseburger",), "hamburger"),
    (("medicine",), "medicine"),
    (("medication",), "medicine"),
    (("med",), "medicine"),
    (("drug",), "medicine"),
    (("coffee",), "hot_coffee"),  # unqualified coffee is taken as hot
)

# Words allowed between a quantity and the item it counts.
FILLERS = {"of", "cup", "cups", "bottle", "bottles", "box", "boxes", "pack", "packs", "glass", "glasses",
           "more", "extra", "large", "small", "big", "medium", "portion", "portions", "serving", "servings",
           "dose", "doses", "the", "some", "fresh", "tasty", "please", "emergency"}
LOOKBACK = 4

_TOKEN = re.compile(r"[a-z]+|\d+")


def _singular(token: str) -> str:
    if token in ("meds", "drugs", "burgers", "hamburgers", "cheeseburgers", "coffees", "medicines", "medications"):
        return token[:-1]
    return token


def _quantity(tokens: list[str], start: int, floor: int) -> int:
    for i in range(start - 1, max(floor, start - LOOKBACK) - 1, -1):
        tok = tokens[i]
        if tok.isdigit():
            return int(tok)
        if tok in NUMBER_WORDS:
            return NUMBER_WORDS[tok]
        if tok not in FILLERS:
            break
    return 1


def parse_order_rules(text: str) -> OrderList:
    """Keyword parser: quantities are the nearest preceding number word or digit (default 1)."""
    tokens = [_singular(t) for t in _TOKEN.findall(text.lower())]
    counts = dict.fromkeys(("hamburger", "iced_coffee", "hot_coffee", "medicine"), 0)
    i = 0
    last_end = 0
    while i < len(tokens):
        for phrase, item in ITEM_PHRASES:
            if tuple(tokens[i:i + len(phrase)]) == phrase:
                counts[item] += _quantity(tokens, i, last_end)
                i += len(phrase)
                last_end = i
                break
        else:
            i += 1
    order = OrderList(**counts).capped()
    if order.total == 0:
        raise EmptyOrder(f"no order items found in {text!r}")
    return order


# --- LLM parser --------------------------------------------------------------

ORDER_SYSTEM_PROMPT = (
    "Convert the shopping request into a JSON object with exactly four non-negative "
    "integer fields: hamburger, iced_coffee, hot_coffee, medicine. Unqualified coffee "
    "means hot_coffee. Output only the JSON object.\nSchema: " + json.dumps(ORDER_SCHEMA, sort_keys=True)
)


def first_json_object(text: str) -> str | None:
    """The first balanced ``{...}`` block, honouring quoted strings."""
    start = text.find("{")
    while start != -1:
        depth, in_str, esc = 0, False, False
        for j in range(start, len(text)):
            ch = text[j]
            if in_str:
                if esc:
                    esc = False
                elif ch == "\\":
                    esc = True
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start:j + 1]
        start = text.find("{", start + 1)
    return None


def parse_order_llm(transport: Transport, text: str, retries: int = 2, records: list | None = None) -> OrderList:
    """Schema-constrained LLM parse with retries; falls back to the rule parser."""
    messages = [{"role": "system", "content": ORDER_SYSTEM_PROMPT}, {"role": "user", "content": text}]
    for attempt in range(retries + 1):
        try:
            reply = transport(messages)
        except TransportError as exc:
            log.warning("order transport failed: %s", exc)
            break
        problem = None
        block = first_json_object(reply)
        if block is None:
            problem = "no JSON object found"
        else:
            try:
                order = order_from_json(json.loads(block)).capped()
            except (json.JSONDecodeError, ParseError, ValueError) as exc:
                problem = str(exc)
        if records is not None:
            records.append({"kind": "order", "attempt": attempt, "request": messages[-1]["content"], "response": reply, "error": problem})
        if problem is None:
            return order
        messages = messages + [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": f"Invalid output ({problem}). Reply with only the JSON object."},
        ]
    log.warning("falling back to rule-based order parsing")
    try:
        return parse_order_rules(text)
    except EmptyOrder:
        return OrderList()
